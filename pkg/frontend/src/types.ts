// Payload types for the workbench HTTP API. These mirror the server JSON
// exactly; the UI renders these fields and never derives its own statistics.

export interface ArticleView {
  id: string;
  publisher_id: string;
  title: string;
  published_at: string | null;
  sanitized: boolean;
  body?: string;
}

export interface OptionView {
  rank: number;
  label: string;
  text: Record<string, string>;
}

export interface ProgressView {
  done: number;
  total: number;
}

export interface TaskView {
  article: ArticleView;
  criterion: string;
  version: string;
  question: string;
  options: OptionView[];
  sub_options: OptionView[] | null;
  progress: ProgressView;
}

export interface AnnotationSubmission {
  article_id: string;
  criterion: string;
  annotator: string;
  version: string;
  answer: string;
  sub_answer?: string | null;
}

export interface ConfusionView {
  labels: string[];
  cells: number[][];
}

export interface AgreementReportView {
  n: number;
  p_o: number;
  p_e: number;
  kappa: number;
  kappa_4dp: number;
  band: string;
  confusion: ConfusionView;
  degenerate: boolean;
  n_excluded: number;
}

export interface SummaryRowView {
  aspect: string;
  display: string;
  no_articles: number;
  no_disagreements: number;
  relevant_disagreements: number;
  llm_correct: number;
  borderline: number;
  unresolved_relevant: number;
}

export interface Table5View {
  rows: SummaryRowView[];
  resolution_rates: Record<string, number | null>;
  articles_with_any_disagreement: number;
}

export interface CaseView {
  case_id: string;
  aspect: string;
  article_id: string;
  human_answers: string[];
  relevant: boolean;
  llm_answer: string | null;
  ground_truth: string | null;
  indeterminate: boolean;
  outcome: string;
  article: ArticleView;
  domain: string[];
}
