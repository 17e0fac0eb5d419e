// Adjudication flow: resolve expert conflicts against an ex-post ground truth.
// The LLM's answer stays hidden until the adjudicator has submitted, so the
// human judgment is independent of the model's.

import type { ApiClient } from "./api.js";
import type { CaseView } from "./types.js";

export const INDETERMINATE = "__indeterminate__";

export interface AdjudicationCaseView {
  caseId: string;
  aspect: string;
  articleTitle: string;
  articleBody: string;
  humanAnswers: string[];
  /** ground-truth choices: the aspect's domain plus the indeterminate marker */
  choices: string[];
  /** null until the adjudicator has submitted (anchoring guard) */
  llmAnswer: string | null;
  outcome: string | null;
}

export interface AdjudicationState {
  queue: CaseView[];
  selection: string | null;
  submitted: boolean;
  lastOutcome: string | null;
  error: string | null;
}

export class AdjudicationFlow {
  state: AdjudicationState = {
    queue: [],
    selection: null,
    submitted: false,
    lastOutcome: null,
    error: null,
  };

  constructor(
    private readonly api: ApiClient,
    private readonly adjudicatorId: string = "adjudicator",
  ) {}

  async loadQueue(): Promise<AdjudicationState> {
    const queue = await this.api.adjudicationQueue();
    this.state = { queue, selection: null, submitted: false, lastOutcome: null, error: null };
    return this.state;
  }

  current(): CaseView | null {
    return this.state.queue[0] ?? null;
  }

  /** The renderable case; the LLM answer is withheld until after submission. */
  view(): AdjudicationCaseView | null {
    const current = this.current();
    if (!current) return null;
    return {
      caseId: current.case_id,
      aspect: current.aspect,
      articleTitle: current.article.title,
      articleBody: current.article.body ?? "",
      humanAnswers: current.human_answers,
      choices: [...current.domain, INDETERMINATE],
      llmAnswer: this.state.submitted ? current.llm_answer : null,
      outcome: this.state.submitted ? this.state.lastOutcome : null,
    };
  }

  select(choice: string): void {
    this.state = { ...this.state, selection: choice, error: null };
  }

  async submit(): Promise<AdjudicationState> {
    const current = this.current();
    if (!current || this.state.selection === null) {
      this.state = { ...this.state, error: "select a ground truth first" };
      return this.state;
    }
    const indeterminate = this.state.selection === INDETERMINATE;
    const result = await this.api.resolveCase(current.case_id, {
      ground_truth: indeterminate ? null : this.state.selection,
      indeterminate,
      adjudicator: this.adjudicatorId,
    });
    if (!result.ok) {
      this.state = { ...this.state, error: result.detail ?? `HTTP ${result.status}` };
      return this.state;
    }
    this.state = {
      ...this.state,
      submitted: true,
      lastOutcome: indeterminate ? "borderline" : "resolved",
      error: null,
    };
    return this.state;
  }

  /** Move past a submitted case; the queue shrinks by exactly one. */
  async advance(): Promise<AdjudicationState> {
    if (!this.state.submitted) {
      this.state = { ...this.state, error: "submit the current case first" };
      return this.state;
    }
    return this.loadQueue();
  }
}
