/**
 * Assignment driver: fetch the next task, render it, submit outcomes on
 * server acknowledgement only, advance until the assignment completes,
 * then finalize.
 */

import { ApiError, CollectClient } from "./api.js";
import type { Action, FinalizeResponse } from "./api.js";
import { TaskRenderer, clearError, renderError } from "./render.js";
import { TaskSession } from "./state.js";
import type { SummaryProvider } from "./wiki.js";

export interface AppOptions {
  onComplete?(result: FinalizeResponse): void;
}

export class AnnotatorApp {
  private session: TaskSession | null = null;
  private renderer: TaskRenderer | null = null;

  constructor(
    private readonly root: HTMLElement,
    private readonly client: CollectClient,
    private readonly summaries: SummaryProvider,
    private readonly options: AppOptions = {},
  ) {}

  async start(): Promise<void> {
    await this.loadNext();
  }

  private async loadNext(): Promise<void> {
    let payload;
    try {
      payload = await this.client.nextTask();
    } catch (error) {
      this.showFailure(error, () => void this.loadNext());
      return;
    }
    clearError(this.root);
    this.renderer?.dispose();
    if (payload === null) {
      await this.finalize();
      return;
    }
    this.session = new TaskSession(payload);
    this.renderer = new TaskRenderer(this.root, this.session, this.summaries, {
      onAction: (idx, action, newLink) => this.performAction(idx, action, newLink),
      onNextTask: () => void this.advance(),
    });
    this.renderer.render();
  }

  /** POST one outcome; local state changes only after the server ack. */
  private async performAction(idx: number, action: Action, newLink?: string): Promise<void> {
    if (!this.session) return;
    let body;
    try {
      body = this.session.payload.annotations.some((a) => a.idx === idx)
        ? this.buildBody(idx, action, newLink)
        : null;
    } catch (error) {
      renderError(this.root, (error as Error).message);
      throw error;
    }
    if (body === null) return;
    try {
      await this.client.submitOutcome(body);
    } catch (error) {
      this.showFailure(error, () => void this.performAction(idx, action, newLink));
      throw error;
    }
    clearError(this.root);
    // ack received: now record locally (answer() validated before the POST)
    this.session.answer(idx, action, newLink);
  }

  private buildBody(idx: number, action: Action, newLink?: string) {
    if (!this.session) throw new Error("no active task");
    // validate through the session without mutating it yet
    const probe = new TaskSession(this.session.payload);
    return probe.answer(idx, action, newLink);
  }

  private async advance(): Promise<void> {
    if (this.session && !this.session.allAnswered()) {
      renderError(this.root, "answer every highlighted mention before submitting");
      return;
    }
    await this.loadNext();
  }

  private async finalize(): Promise<void> {
    let result;
    try {
      result = await this.client.finalize();
    } catch (error) {
      this.showFailure(error, () => void this.finalize());
      return;
    }
    const doc = this.root.ownerDocument;
    this.root.textContent = "";
    const done = doc.createElement("div");
    done.className = `assignment-done ${result.status}`;
    done.textContent =
      result.status === "accepted"
        ? "Assignment complete. Thank you!"
        : "Assignment complete, but the control answers did not pass review.";
    this.root.appendChild(done);
    this.options.onComplete?.(result);
  }

  private showFailure(error: unknown, retry: () => void): void {
    if (error instanceof ApiError) {
      // the server refused the request: surface its reason, no retry loop
      renderError(this.root, error.message);
    } else {
      renderError(this.root, "network problem, nothing was saved", retry);
    }
  }
}
