// Annotation task flow: fetch the next assigned cell, gate the NegTarg issue
// sub-options behind a Yes head answer, and submit without losing state on a
// server-side rejection.

import type { ApiClient } from "./api.js";
import type { OptionView, TaskView } from "./types.js";

export type TaskPhase = "idle" | "answering" | "submitting" | "done";

export interface TaskState {
  phase: TaskPhase;
  task: TaskView | null;
  selection: string | null;
  subSelection: string | null;
  /** verbatim server or gating message; cleared on the next state change */
  error: string | null;
  submittedCount: number;
}

export class TaskFlow {
  state: TaskState = {
    phase: "idle",
    task: null,
    selection: null,
    subSelection: null,
    error: null,
    submittedCount: 0,
  };

  constructor(
    private readonly api: ApiClient,
    private readonly annotatorId: string,
  ) {}

  async loadNext(): Promise<TaskState> {
    const task = await this.api.nextTask(this.annotatorId);
    this.state = {
      ...this.state,
      phase: task ? "answering" : "done",
      task,
      selection: null,
      subSelection: null,
      error: null,
    };
    return this.state;
  }

  /** Options are rendered exactly in the order the registry serves them. */
  options(): OptionView[] {
    return this.state.task?.options ?? [];
  }

  /** Issue sub-options appear only once the head answer is Yes. */
  visibleSubOptions(): OptionView[] {
    const task = this.state.task;
    if (!task || !task.sub_options) return [];
    return this.state.selection === "Yes" ? task.sub_options : [];
  }

  select(label: string): void {
    this.state = { ...this.state, selection: label, error: null };
    if (label !== "Yes") {
      this.state = { ...this.state, subSelection: null };
    }
  }

  selectSub(label: string): void {
    this.state = { ...this.state, subSelection: label, error: null };
  }

  needsSubAnswer(): boolean {
    const task = this.state.task;
    return Boolean(task && task.sub_options && this.state.selection === "Yes");
  }

  canSubmit(): boolean {
    if (!this.state.task || this.state.selection === null) return false;
    if (this.needsSubAnswer() && this.state.subSelection === null) return false;
    return true;
  }

  /**
   * Submit the current selection. An incomplete compound answer is blocked
   * before any network call; a server rejection keeps the selection intact
   * and surfaces the validation message verbatim.
   */
  async submit(): Promise<TaskState> {
    const { task, selection } = this.state;
    if (!task || selection === null) {
      this.state = { ...this.state, error: "select an answer first" };
      return this.state;
    }
    if (this.needsSubAnswer() && this.state.subSelection === null) {
      this.state = { ...this.state, error: "select the issue before submitting" };
      return this.state;
    }
    this.state = { ...this.state, phase: "submitting" };
    const result = await this.api.submitAnnotation({
      article_id: task.article.id,
      criterion: task.criterion,
      annotator: this.annotatorId,
      version: task.version,
      answer: selection,
      sub_answer: this.state.subSelection,
    });
    if (!result.ok) {
      this.state = {
        ...this.state,
        phase: "answering",
        error: result.detail ?? `HTTP ${result.status}`,
      };
      return this.state;
    }
    this.state = { ...this.state, submittedCount: this.state.submittedCount + 1 };
    return this.loadNext();
  }
}
