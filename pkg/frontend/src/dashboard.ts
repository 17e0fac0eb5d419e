// Dashboard view models. Every displayed number is a verbatim API field; the
// only additions here are presentational (band colors, bar geometry).

import type { AgreementReportView, SummaryRowView, Table5View } from "./types.js";

export const BAND_COLORS: Record<string, string> = {
  none: "#c0392b",
  minimal: "#e67e22",
  weak: "#f1c40f",
  moderate: "#2ecc71",
  strong: "#27ae60",
  almost_perfect: "#145a32",
};

export interface KappaBarModel {
  criterion: string;
  version: string;
  kappa: number;
  display: string;
  band: string;
  color: string;
  n: number;
  nExcluded: number;
  /** bar geometry: kappa clipped to [0, 1] as a percentage width */
  widthPct: number;
}

export function kappaBar(criterion: string, version: string, report: AgreementReportView): KappaBarModel {
  return {
    criterion,
    version,
    kappa: report.kappa,
    display: String(report.kappa_4dp),
    band: report.band,
    color: BAND_COLORS[report.band] ?? "#7f8c8d",
    n: report.n,
    nExcluded: report.n_excluded,
    widthPct: Math.max(0, Math.min(1, report.kappa)) * 100,
  };
}

export interface HeatmapCellModel {
  row: string;
  col: string;
  count: number;
  /** 0..1 shade relative to the largest cell; purely presentational */
  intensity: number;
}

export interface HeatmapModel {
  labels: string[];
  cells: HeatmapCellModel[][];
  total: number;
}

export function confusionHeatmap(report: AgreementReportView): HeatmapModel {
  const { labels, cells } = report.confusion;
  let max = 0;
  let total = 0;
  for (const row of cells) {
    for (const value of row) {
      max = Math.max(max, value);
      total += value;
    }
  }
  const model = cells.map((row, i) =>
    row.map((value, j) => ({
      row: labels[i] ?? "",
      col: labels[j] ?? "",
      count: value,
      intensity: max > 0 ? value / max : 0,
    })),
  );
  return { labels, cells: model, total };
}

export interface Table5GridModel {
  header: string[];
  rows: Array<{
    aspect: string;
    cells: Array<string | number>;
    resolutionRate: string;
  }>;
  articlesWithAnyDisagreement: number;
}

export function table5Grid(payload: Table5View): Table5GridModel {
  const header = [
    "criterion",
    "articles",
    "disagreements",
    "relevant",
    "llm correct",
    "borderline",
    "resolution rate",
  ];
  const rows = payload.rows.map((row: SummaryRowView) => {
    const rate = payload.resolution_rates[row.aspect];
    return {
      aspect: row.aspect,
      cells: [
        row.display,
        row.no_articles,
        row.no_disagreements,
        row.relevant_disagreements,
        row.llm_correct,
        row.borderline,
      ],
      resolutionRate: rate === null || rate === undefined ? "n/a" : String(rate),
    };
  });
  return {
    header,
    rows,
    articlesWithAnyDisagreement: payload.articles_with_any_disagreement,
  };
}

export interface RefinementPairModel {
  criterion: string;
  initial: KappaBarModel;
  refined: KappaBarModel;
}

export function refinementPair(
  criterion: string,
  initial: AgreementReportView,
  refined: AgreementReportView,
): RefinementPairModel {
  return {
    criterion,
    initial: kappaBar(criterion, "initial", initial),
    refined: kappaBar(criterion, "refined", refined),
  };
}

export function emptyStateMessage(what: string): string {
  return `No ${what} yet. Run the annotation pipeline and reload.`;
}
