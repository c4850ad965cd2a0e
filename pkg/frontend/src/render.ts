/**
 * DOM rendering for one verification task.
 *
 * The task text is rebuilt from text nodes and <mark> elements, never from
 * markup strings, so document content cannot inject HTML. Clicking a
 * highlight opens the entity card with the link summary and the three
 * actions; Modify reveals a replacement box that stays disabled until the
 * title differs from the original.
 */

import type { Action } from "./api.js";
import type { TaskSession } from "./state.js";
import type { SummaryProvider } from "./wiki.js";

export interface RenderCallbacks {
  /** Submit an action; resolve on server ack, reject to keep local state. */
  onAction(idx: number, action: Action, newLink?: string): Promise<void>;
  /** All annotations answered and the worker pressed continue. */
  onNextTask(): void;
}

export class TaskRenderer {
  private openIdx: number | null = null;
  private busy = false;

  constructor(
    private readonly root: HTMLElement,
    private readonly session: TaskSession,
    private readonly summaries: SummaryProvider,
    private readonly callbacks: RenderCallbacks,
  ) {}

  render(): void {
    const doc = this.root.ownerDocument;
    this.root.textContent = "";

    const textBlock = doc.createElement("p");
    textBlock.className = "task-text";
    const text = this.session.payload.text;
    const annotations = [...this.session.payload.annotations].sort((a, b) => a.start - b.start);
    let cursor = 0;
    for (const annotation of annotations) {
      if (annotation.start > cursor) {
        textBlock.appendChild(doc.createTextNode(text.slice(cursor, annotation.start)));
      }
      const mark = doc.createElement("mark");
      mark.textContent = text.slice(annotation.start, annotation.end);
      mark.dataset.idx = String(annotation.idx);
      mark.className = this.session.isAnswered(annotation.idx) ? "mention answered" : "mention";
      mark.addEventListener("click", () => this.openCard(annotation.idx));
      textBlock.appendChild(mark);
      cursor = annotation.end;
    }
    if (cursor < text.length) {
      textBlock.appendChild(doc.createTextNode(text.slice(cursor)));
    }
    this.root.appendChild(textBlock);

    const card = doc.createElement("div");
    card.className = "entity-card";
    card.hidden = true;
    this.root.appendChild(card);

    const status = doc.createElement("p");
    status.className = "status";
    status.textContent = `${this.session.answeredCount()} of ${
      this.session.payload.annotations.length
    } annotations answered`;
    this.root.appendChild(status);

    const next = doc.createElement("button");
    next.className = "next-task";
    next.textContent = "Submit task";
    next.disabled = !this.session.allAnswered();
    next.addEventListener("click", () => this.callbacks.onNextTask());
    this.root.appendChild(next);

    if (this.session.payload.annotations.length === 0) {
      // nothing to verify in this window; let the worker move on
      next.disabled = false;
    }

    this.root.ownerDocument.defaultView?.addEventListener("keydown", this.onKey);
    if (this.openIdx !== null) this.openCard(this.openIdx);
  }

  dispose(): void {
    this.root.ownerDocument.defaultView?.removeEventListener("keydown", this.onKey);
  }

  private onKey = (event: KeyboardEvent): void => {
    if (this.openIdx === null || this.busy) return;
    const shortcuts: Record<string, Action> = { v: "verify", m: "modify", r: "remove" };
    const action = shortcuts[event.key.toLowerCase()];
    if (!action) return;
    if (action === "modify") {
      this.revealModify();
    } else {
      void this.submit(this.openIdx, action);
    }
  };

  private card(): HTMLElement {
    return this.root.querySelector(".entity-card") as HTMLElement;
  }

  openCard(idx: number): void {
    this.openIdx = idx;
    const doc = this.root.ownerDocument;
    const annotation = this.session.annotation(idx);
    const card = this.card();
    card.hidden = false;
    card.textContent = "";
    card.dataset.idx = String(idx);

    const title = doc.createElement("h3");
    title.textContent = annotation.link;
    card.appendChild(title);

    const summary = doc.createElement("p");
    summary.className = "summary";
    summary.textContent = "Loading summary…";
    card.appendChild(summary);
    void this.summaries.summary(annotation.link).then((s) => {
      summary.textContent = s.extract;
      const anchor = doc.createElement("a");
      anchor.href = s.url;
      anchor.target = "_blank";
      anchor.textContent = "open page";
      card.appendChild(anchor);
    });

    const current = this.session.answerOf(idx);
    if (current) {
      const note = doc.createElement("p");
      note.className = "current-answer";
      note.textContent = `current answer: ${current.action}${
        current.newLink ? ` -> ${current.newLink}` : ""
      }`;
      card.appendChild(note);
    }

    const actions = doc.createElement("div");
    actions.className = "actions";
    for (const action of ["verify", "modify", "remove"] as Action[]) {
      const button = doc.createElement("button");
      button.textContent = action;
      button.className = `action-${action}`;
      button.addEventListener("click", () => {
        if (action === "modify") {
          this.revealModify();
        } else {
          void this.submit(idx, action);
        }
      });
      actions.appendChild(button);
    }
    card.appendChild(actions);
  }

  private revealModify(): void {
    if (this.openIdx === null) return;
    const doc = this.root.ownerDocument;
    const card = this.card();
    const idx = this.openIdx;
    const annotation = this.session.annotation(idx);
    let box = card.querySelector(".modify-box") as HTMLElement | null;
    if (box) return;
    box = doc.createElement("div");
    box.className = "modify-box";

    const input = doc.createElement("input");
    input.placeholder = "search a replacement title";
    input.className = "modify-input";
    box.appendChild(input);

    const confirm = doc.createElement("button");
    confirm.textContent = "replace link";
    confirm.className = "modify-confirm";
    confirm.disabled = true;
    box.appendChild(confirm);

    input.addEventListener("input", () => {
      const value = input.value.trim();
      confirm.disabled = value.length === 0 || value === annotation.link;
    });
    confirm.addEventListener("click", () => {
      void this.submit(idx, "modify", input.value.trim());
    });
    card.appendChild(box);
  }

  private async submit(idx: number, action: Action, newLink?: string): Promise<void> {
    if (this.busy) return; // one in-flight submission at a time
    this.busy = true;
    try {
      await this.callbacks.onAction(idx, action, newLink);
      this.openIdx = null;
      this.dispose();
      this.render();
    } catch {
      // the app already surfaced the failure; keep the card open
    } finally {
      this.busy = false;
    }
  }
}

export function renderError(root: HTMLElement, message: string, retry?: () => void): void {
  const doc = root.ownerDocument;
  let bar = root.querySelector(".error-bar") as HTMLElement | null;
  if (!bar) {
    bar = doc.createElement("div");
    bar.className = "error-bar";
    root.prepend(bar);
  }
  bar.textContent = "";
  const text = doc.createElement("span");
  text.textContent = message;
  bar.appendChild(text);
  if (retry) {
    const button = doc.createElement("button");
    button.className = "retry";
    button.textContent = "retry";
    button.addEventListener("click", () => {
      bar?.remove();
      retry();
    });
    bar.appendChild(button);
  }
}

export function clearError(root: HTMLElement): void {
  root.querySelector(".error-bar")?.remove();
}
