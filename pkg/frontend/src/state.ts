/**
 * Local answer state for one task.
 *
 * The session can only ever answer annotations present in the payload, so
 * the interface structurally cannot invent outcomes for unseen mentions.
 * Answers may be revised before the task is left; the latest one wins.
 */

import type { Action, OutcomeBody, TaskAnnotation, TaskPayload } from "./api.js";

export interface Answer {
  action: Action;
  newLink?: string;
}

export class TaskSession {
  private readonly answers = new Map<number, Answer>();
  private readonly byIdx = new Map<number, TaskAnnotation>();

  constructor(readonly payload: TaskPayload) {
    for (const annotation of payload.annotations) {
      this.byIdx.set(annotation.idx, annotation);
    }
  }

  annotation(idx: number): TaskAnnotation {
    const annotation = this.byIdx.get(idx);
    if (annotation === undefined) {
      throw new Error(`no annotation ${idx} in task ${this.payload.task_id}`);
    }
    return annotation;
  }

  /** Validate and record an answer; returns the wire body to submit. */
  answer(idx: number, action: Action, newLink?: string): OutcomeBody {
    const annotation = this.annotation(idx);
    if (action === "modify") {
      const replacement = (newLink ?? "").trim();
      if (!replacement) {
        throw new Error("modify needs a replacement title");
      }
      if (replacement === annotation.link) {
        throw new Error("replacement title must differ from the original");
      }
      this.answers.set(idx, { action, newLink: replacement });
      return { task_id: this.payload.task_id, idx, action, new_link: replacement };
    }
    if (newLink !== undefined) {
      throw new Error(`${action} does not take a replacement title`);
    }
    this.answers.set(idx, { action });
    return { task_id: this.payload.task_id, idx, action };
  }

  answerOf(idx: number): Answer | undefined {
    return this.answers.get(idx);
  }

  isAnswered(idx: number): boolean {
    return this.answers.has(idx);
  }

  allAnswered(): boolean {
    return this.payload.annotations.every((a) => this.answers.has(a.idx));
  }

  answeredCount(): number {
    return this.answers.size;
  }
}
