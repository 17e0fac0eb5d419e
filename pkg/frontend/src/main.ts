// Application shell: hash routing between the annotation workbench, the
// adjudication queue, and the agreement dashboards.

import { AdjudicationFlow } from "./adjudicate.js";
import { ApiClient } from "./api.js";
import { confusionHeatmap, kappaBar, table5Grid } from "./dashboard.js";
import {
  renderAdjudicationCase,
  renderError,
  renderHeatmap,
  renderKappaBars,
  renderTable5,
  renderTask,
} from "./render.js";
import { TaskFlow } from "./tasks.js";

const CRITERIA = ["HeadAcc", "LedePres", "NegTarg", "ArtBias", "SensLang", "Type"];

declare global {
  interface Window {
    VERITAS_API_BASE?: string;
  }
}

function apiBase(): string {
  const fromQuery = new URLSearchParams(window.location.search).get("api");
  return fromQuery ?? window.VERITAS_API_BASE ?? "";
}

function route(): string {
  return window.location.hash.replace(/^#/, "") || "annotate";
}

async function showAnnotate(root: HTMLElement, api: ApiClient): Promise<void> {
  const annotator = window.localStorage.getItem("annotator") ?? "";
  root.innerHTML = "";
  const form = document.createElement("div");
  form.className = "annotator-picker";
  const input = document.createElement("input");
  input.placeholder = "annotator id";
  input.value = annotator;
  const start = document.createElement("button");
  start.textContent = "Start";
  form.append(input, start);
  root.appendChild(form);
  const panel = document.createElement("div");
  panel.id = "task-panel";
  root.appendChild(panel);

  start.addEventListener("click", () => {
    const id = input.value.trim();
    if (!id) return;
    window.localStorage.setItem("annotator", id);
    const flow = new TaskFlow(api, id);
    const repaint = () => renderTask(panel, flow, repaint);
    void flow
      .loadNext()
      .then(repaint)
      .catch((error: Error) => renderError(panel, error.message));
  });
}

async function showAdjudicate(root: HTMLElement, api: ApiClient): Promise<void> {
  root.innerHTML = "";
  const panel = document.createElement("div");
  panel.id = "adjudication-panel";
  root.appendChild(panel);
  const flow = new AdjudicationFlow(api);
  const repaint = () => {
    renderAdjudicationCase(
      panel,
      flow.view(),
      flow.state.selection,
      (choice) => {
        flow.select(choice);
        repaint();
      },
      () => void flow.submit().then(repaint),
      () => void flow.advance().then(repaint),
    );
    renderError(panel, flow.state.error);
  };
  await flow.loadQueue().then(repaint);
}

async function showDashboard(root: HTMLElement, api: ApiClient): Promise<void> {
  root.innerHTML = "";
  const barsBox = document.createElement("section");
  const heatBox = document.createElement("section");
  const tableBox = document.createElement("section");
  root.append(barsBox, heatBox, tableBox);

  const bars = [];
  for (const criterion of CRITERIA) {
    for (const version of ["initial", "refined"]) {
      const report = await api.agreement(criterion, version);
      if (report) bars.push(kappaBar(criterion, version, report));
    }
  }
  renderKappaBars(barsBox, bars);

  const sensational = await api.agreement("SensLang", "initial");
  if (sensational) {
    renderHeatmap(heatBox, confusionHeatmap(sensational), "SensLang (initial): experts vs LLM");
  }

  renderTable5(tableBox, table5Grid(await api.table5()));
}

export function boot(): void {
  const api = new ApiClient(apiBase());
  const root = document.getElementById("app");
  if (!root) throw new Error("missing #app container");
  const dispatch = () => {
    const current = route();
    for (const link of document.querySelectorAll("nav a")) {
      link.classList.toggle("active", link.getAttribute("href") === `#${current}`);
    }
    if (current === "adjudicate") void showAdjudicate(root, api);
    else if (current === "dashboard") void showDashboard(root, api);
    else void showAnnotate(root, api);
  };
  window.addEventListener("hashchange", dispatch);
  dispatch();
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  boot();
}
