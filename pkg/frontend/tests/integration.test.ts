// Scripted end-to-end session against the real service running on the twin
// store: fetch a task, submit all six criteria for one article (with the
// NegTarg issue gating), watch progress advance, resolve one adjudication
// case (queue shrinks by one), and check dashboards against raw API payloads.
//
// Requires the `veritas` CLI on PATH (pip install -e .. in the repo root).

import { execFileSync, spawn, type ChildProcess } from "child_process";
import { mkdtempSync } from "fs";
import { tmpdir } from "os";
import { join } from "path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { AdjudicationFlow, INDETERMINATE } from "../src/adjudicate.js";
import { ApiClient } from "../src/api.js";
import { confusionHeatmap, kappaBar, table5Grid } from "../src/dashboard.js";
import { TaskFlow } from "../src/tasks.js";
import type { AgreementReportView, Table5View } from "../src/types.js";

const PORT = 8100 + (process.pid % 700);
const BASE = `http://127.0.0.1:${PORT}`;

// answers the scripted annotator gives, one per criterion in registry order
const SCRIPT: Record<string, { answer: string; sub?: string }> = {
  HeadAcc: { answer: "Quite accurate" },
  LedePres: { answer: "Yes" },
  NegTarg: { answer: "Yes", sub: "Politics" },
  ArtBias: { answer: "Quite unbiased" },
  SensLang: { answer: "Quite neutral" },
  Type: { answer: "Straight news" },
};

let server: ChildProcess | null = null;

async function waitForServer(): Promise<void> {
  for (let attempt = 0; attempt < 120; attempt++) {
    try {
      const response = await fetch(`${BASE}/articles`);
      if (response.ok) return;
    } catch {
      // not up yet
    }
    await new Promise((resolve) => setTimeout(resolve, 500));
  }
  throw new Error("veritas serve did not come up");
}

beforeAll(async () => {
  const root = mkdtempSync(join(tmpdir(), "veritas-webui-"));
  const twinDir = join(root, "twin");
  execFileSync("veritas", ["twin", "--out", twinDir, "--seed", "7"], { stdio: "pipe" });
  // a fourth expert with open cells drives the task loop
  execFileSync(
    "veritas",
    ["annotators", "add", "tester", "--kind", "human", "--store-dir", join(twinDir, "store")],
    { stdio: "pipe" },
  );
  server = spawn(
    "veritas",
    [
      "serve",
      "--corpus", join(twinDir, "corpus.jsonl"),
      "--store-dir", join(twinDir, "store"),
      "--port", String(PORT),
    ],
    { stdio: "pipe" },
  );
  await waitForServer();
}, 180_000);

afterAll(() => {
  server?.kill();
});

describe("scripted workbench session", () => {
  const api = new ApiClient(BASE);

  it("annotates all six criteria for one article, progress advances", async () => {
    const flow = new TaskFlow(api, "tester");
    await flow.loadNext();
    expect(flow.state.task).not.toBeNull();
    const firstTask = flow.state.task!;
    const articleId = firstTask.article.id;
    const startDone = firstTask.progress.done;
    expect(firstTask.article.sanitized).toBe(true);

    const seen: string[] = [];
    while (flow.state.task && flow.state.task.article.id === articleId) {
      const criterion = flow.state.task.criterion;
      seen.push(criterion);
      const script = SCRIPT[criterion]!;

      if (criterion === "NegTarg") {
        // gate: sub-options only after Yes, and submit blocked until an issue is picked
        expect(flow.visibleSubOptions()).toEqual([]);
        flow.select("Yes");
        expect(flow.visibleSubOptions().length).toBe(4);
        await flow.submit(); // no issue picked yet: client-side block, no POST
        expect(flow.state.error).toMatch(/issue/);
        expect(flow.state.task.criterion).toBe("NegTarg");
        flow.selectSub(script.sub!);
      } else {
        flow.select(script.answer);
      }
      const before = flow.state.submittedCount;
      await flow.submit();
      expect(flow.state.error).toBeNull();
      expect(flow.state.submittedCount).toBe(before + 1);
    }

    expect(seen).toEqual(["HeadAcc", "LedePres", "NegTarg", "ArtBias", "SensLang", "Type"]);
    expect(flow.state.submittedCount).toBe(6);
    // the next task (a new article) reports progress advanced by exactly six
    expect(flow.state.task).not.toBeNull();
    expect(flow.state.task!.progress.done).toBe(startDone + 6);
  });

  it("rejects a duplicate submission with the server message, verbatim", async () => {
    const again = await api.submitAnnotation({
      article_id: "art-002",
      criterion: "HeadAcc",
      annotator: "tester",
      version: "initial",
      answer: "Quite accurate",
    });
    expect(again.ok).toBe(false);
    expect(again.status).toBe(409);
    expect(again.detail).toContain("DUPLICATE_ANNOTATION");
  });

  it("resolves one adjudication case; the queue shrinks by one", async () => {
    const initialQueue = await api.adjudicationQueue();
    expect(initialQueue.length).toBeGreaterThan(0);

    const flow = new AdjudicationFlow(api);
    await flow.loadQueue();
    const view = flow.view()!;
    expect(view.llmAnswer).toBeNull(); // hidden before submit
    expect(view.choices).toContain(INDETERMINATE);

    flow.select(view.humanAnswers[0]!);
    await flow.submit();
    expect(flow.state.error).toBeNull();
    expect(flow.view()!.llmAnswer).not.toBeUndefined(); // revealed now

    await flow.advance();
    expect(flow.state.queue.length).toBe(initialQueue.length - 1);
  });

  it("dashboard models equal the raw API payload fields", async () => {
    const rawAgreement = (await (
      await fetch(`${BASE}/agreement?criterion=NegTarg&version=initial`)
    ).json()) as AgreementReportView;
    const bar = kappaBar("NegTarg", "initial", (await api.agreement("NegTarg", "initial"))!);
    expect(bar.kappa).toBe(rawAgreement.kappa);
    expect(bar.display).toBe(String(rawAgreement.kappa_4dp));
    expect(bar.band).toBe(rawAgreement.band);
    expect(bar.n).toBe(rawAgreement.n);

    const heat = confusionHeatmap(rawAgreement);
    expect(heat.cells.map((row) => row.map((cell) => cell.count))).toEqual(
      rawAgreement.confusion.cells,
    );

    const rawTable = (await (await fetch(`${BASE}/summary/table5`)).json()) as Table5View;
    const grid = table5Grid(await api.table5());
    for (let i = 0; i < rawTable.rows.length; i++) {
      const row = rawTable.rows[i]!;
      expect(grid.rows[i]!.cells).toEqual([
        row.display,
        row.no_articles,
        row.no_disagreements,
        row.relevant_disagreements,
        row.llm_correct,
        row.borderline,
      ]);
    }
    expect(grid.articlesWithAnyDisagreement).toBe(rawTable.articles_with_any_disagreement);
  });
});
