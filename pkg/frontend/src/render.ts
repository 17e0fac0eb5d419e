// DOM rendering. Values land in the DOM exactly as the view models carry
// them; no statistic is computed at this layer.

import type { AdjudicationCaseView } from "./adjudicate.js";
import type { HeatmapModel, KappaBarModel, Table5GridModel } from "./dashboard.js";
import type { TaskFlow } from "./tasks.js";
import { INDETERMINATE } from "./adjudicate.js";

function el(tag: string, className?: string, text?: string): HTMLElement {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function clear(container: HTMLElement): void {
  while (container.firstChild) container.removeChild(container.firstChild);
}

export function renderError(container: HTMLElement, message: string | null): void {
  const existing = container.querySelector(".error-banner");
  if (existing) existing.remove();
  if (!message) return;
  const banner = el("div", "error-banner", message);
  banner.setAttribute("role", "alert");
  container.prepend(banner);
}

export function renderTask(container: HTMLElement, flow: TaskFlow, onChange: () => void): void {
  clear(container);
  const { task, error } = flow.state;
  if (flow.state.phase === "done" || task === null) {
    container.appendChild(el("p", "empty-state", "Queue empty: no cells left for this annotator."));
    return;
  }

  const progress = el(
    "p",
    "progress",
    `progress: ${task.progress.done} of ${task.progress.total} assigned cells`,
  );
  container.appendChild(progress);

  const article = el("section", "article");
  article.appendChild(el("h2", "article-title", task.article.title));
  const body = el("div", "article-body");
  for (const paragraph of (task.article.body ?? "").split("\n")) {
    body.appendChild(el("p", undefined, paragraph));
  }
  article.appendChild(body);
  container.appendChild(article);

  const question = el("section", "question");
  question.appendChild(el("h3", undefined, task.criterion));
  const questionText = el("pre", "question-text", task.question);
  question.appendChild(questionText);

  const optionList = el("div", "options");
  for (const option of flow.options()) {
    const button = el("button", "option", option.text["it"] ?? option.label) as HTMLButtonElement;
    button.dataset.label = option.label;
    if (flow.state.selection === option.label) button.classList.add("selected");
    button.addEventListener("click", () => {
      flow.select(option.label);
      onChange();
    });
    optionList.appendChild(button);
  }
  question.appendChild(optionList);

  const subOptions = flow.visibleSubOptions();
  if (subOptions.length > 0) {
    const subList = el("div", "sub-options");
    subList.appendChild(el("p", undefined, "Tema:"));
    for (const option of subOptions) {
      const button = el("button", "sub-option", option.text["it"] ?? option.label) as HTMLButtonElement;
      button.dataset.label = option.label;
      if (flow.state.subSelection === option.label) button.classList.add("selected");
      button.addEventListener("click", () => {
        flow.selectSub(option.label);
        onChange();
      });
      subList.appendChild(button);
    }
    question.appendChild(subList);
  }

  const submit = el("button", "submit", "Submit") as HTMLButtonElement;
  submit.disabled = !flow.canSubmit();
  submit.addEventListener("click", () => {
    void flow.submit().then(onChange);
  });
  question.appendChild(submit);
  container.appendChild(question);
  renderError(container, error);
}

export function renderAdjudicationCase(
  container: HTMLElement,
  view: AdjudicationCaseView | null,
  selection: string | null,
  onSelect: (choice: string) => void,
  onSubmit: () => void,
  onNext: () => void,
): void {
  clear(container);
  if (view === null) {
    container.appendChild(el("p", "empty-state", "No open disagreement cases."));
    return;
  }
  container.appendChild(el("h2", undefined, `${view.aspect} — ${view.articleTitle}`));
  const body = el("div", "article-body");
  for (const paragraph of view.articleBody.split("\n")) {
    body.appendChild(el("p", undefined, paragraph));
  }
  container.appendChild(body);

  const answers = el("p", "human-answers",
    `expert answers: ${view.humanAnswers[0]} / ${view.humanAnswers[1]}`);
  container.appendChild(answers);

  const llm = el("p", "llm-answer");
  llm.textContent = view.llmAnswer === null
    ? "LLM answer: hidden until you submit"
    : `LLM answer: ${view.llmAnswer}`;
  container.appendChild(llm);

  const choiceList = el("div", "choices");
  for (const choice of view.choices) {
    const label = choice === INDETERMINATE ? "indeterminate" : choice;
    const button = el("button", "choice", label) as HTMLButtonElement;
    button.dataset.choice = choice;
    if (selection === choice) button.classList.add("selected");
    button.addEventListener("click", () => onSelect(choice));
    choiceList.appendChild(button);
  }
  container.appendChild(choiceList);

  if (view.outcome === null) {
    const submit = el("button", "submit", "Submit ground truth") as HTMLButtonElement;
    submit.addEventListener("click", onSubmit);
    container.appendChild(submit);
  } else {
    container.appendChild(el("p", "outcome", `outcome: ${view.outcome}`));
    const next = el("button", "next", "Next case") as HTMLButtonElement;
    next.addEventListener("click", onNext);
    container.appendChild(next);
  }
}

export function renderKappaBars(container: HTMLElement, bars: KappaBarModel[]): void {
  clear(container);
  if (bars.length === 0) {
    container.appendChild(el("p", "empty-state", "No agreement reports yet."));
    return;
  }
  for (const bar of bars) {
    const row = el("div", "kappa-row");
    row.appendChild(el("span", "kappa-label", `${bar.criterion} (${bar.version})`));
    const track = el("div", "kappa-track");
    const fill = el("div", "kappa-fill");
    fill.style.width = `${bar.widthPct}%`;
    fill.style.backgroundColor = bar.color;
    track.appendChild(fill);
    row.appendChild(track);
    const value = el("span", "kappa-value", bar.display);
    value.dataset.band = bar.band;
    row.appendChild(value);
    row.appendChild(el("span", "kappa-band", bar.band));
    container.appendChild(row);
  }
}

export function renderHeatmap(container: HTMLElement, model: HeatmapModel, caption: string): void {
  clear(container);
  const table = el("table", "heatmap") as HTMLTableElement;
  table.appendChild(el("caption", undefined, caption));
  const head = el("tr");
  head.appendChild(el("th", undefined, "experts \\ LLM"));
  for (const label of model.labels) head.appendChild(el("th", undefined, label));
  table.appendChild(head);
  for (const row of model.cells) {
    const tr = el("tr");
    tr.appendChild(el("th", undefined, row[0]?.row ?? ""));
    for (const cell of row) {
      const td = el("td", "heat-cell", String(cell.count));
      td.style.backgroundColor = `rgba(41, 128, 185, ${(0.15 + 0.85 * cell.intensity).toFixed(3)})`;
      tr.appendChild(td);
    }
    table.appendChild(tr);
  }
  container.appendChild(table);
}

export function renderTable5(container: HTMLElement, model: Table5GridModel): void {
  clear(container);
  const table = el("table", "table5") as HTMLTableElement;
  const head = el("tr");
  for (const column of model.header) head.appendChild(el("th", undefined, column));
  table.appendChild(head);
  for (const row of model.rows) {
    const tr = el("tr");
    tr.dataset.aspect = row.aspect;
    for (const cell of row.cells) tr.appendChild(el("td", undefined, String(cell)));
    tr.appendChild(el("td", "rate", row.resolutionRate));
    table.appendChild(tr);
  }
  container.appendChild(table);
  container.appendChild(
    el("p", "footnote",
       `articles with at least one conflict: ${model.articlesWithAnyDisagreement}`),
  );
}
