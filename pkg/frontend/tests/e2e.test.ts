/**
 * Drive a complete fixture assignment through the rendered UI against the
 * fake service and compare the produced outcome log with the expected one.
 */

import { beforeEach, describe, expect, it } from "vitest";

import { AnnotatorApp } from "../src/app.js";
import { CollectClient } from "../src/api.js";
import type { FinalizeResponse, OutcomeBody } from "../src/api.js";
import { StubSummaryProvider } from "../src/wiki.js";
import { FakeService, fixtureTasks } from "./fakeservice.js";

async function flush(times = 6): Promise<void> {
  for (let i = 0; i < times; i += 1) {
    await new Promise((resolve) => setTimeout(resolve, 0));
  }
}

function root(): HTMLElement {
  return document.getElementById("app") as HTMLElement;
}

function click(selector: string): void {
  const el = root().querySelector(selector) as HTMLElement | null;
  if (!el) throw new Error(`nothing matches ${selector}`);
  el.click();
}

async function act(selector: string): Promise<void> {
  click(selector);
  await flush();
}

async function openCard(idx: number): Promise<void> {
  await act(`mark[data-idx="${idx}"]`);
}

async function modifyTo(title: string): Promise<void> {
  await act(".action-modify");
  const input = root().querySelector(".modify-input") as HTMLInputElement;
  input.value = title;
  input.dispatchEvent(new Event("input", { bubbles: true }));
  await flush(1);
  const confirm = root().querySelector(".modify-confirm") as HTMLButtonElement;
  expect(confirm.disabled).toBe(false);
  await act(".modify-confirm");
}

describe("fixture assignment end to end", () => {
  let service: FakeService;
  let completed: FinalizeResponse | null;

  beforeEach(async () => {
    document.body.innerHTML = '<div id="app"></div>';
    service = new FakeService("fixture-a0", fixtureTasks());
    completed = null;
    const app = new AnnotatorApp(
      root(),
      new CollectClient("", "fixture-a0", service.fetchLike()),
      new StubSummaryProvider(),
      { onComplete: (result) => (completed = result) },
    );
    await app.start();
    await flush();
  });

  it("produces the expected outcome log, control included", async () => {
    // task 1: verify Germany, modify Argentina
    await openCard(0);
    await act(".action-verify");
    await openCard(1);
    await modifyTo("Argentina national football team");
    await act(".next-task");

    // control task: served and answered like any other task
    await openCard(0);
    await act(".action-verify");
    await openCard(1);
    await modifyTo("Beta corrected");
    await openCard(2);
    await act(".action-remove");
    await act(".next-task");

    // task 2: verify Paris, then change the answer to remove before moving
    // on; the final zero-annotation chunk is auto-complete server-side, so
    // finalization follows immediately
    await openCard(0);
    await act(".action-verify");
    await openCard(0);
    await act(".action-remove");
    await act(".next-task");
    await flush();

    const expectedWire: OutcomeBody[] = [
      { task_id: "fix:GT:d1:0", idx: 0, action: "verify" },
      {
        task_id: "fix:GT:d1:0",
        idx: 1,
        action: "modify",
        new_link: "Argentina national football team",
      },
      { task_id: "fix:CTRL:c0:0", idx: 0, action: "verify" },
      { task_id: "fix:CTRL:c0:0", idx: 1, action: "modify", new_link: "Beta corrected" },
      { task_id: "fix:CTRL:c0:0", idx: 2, action: "remove" },
      { task_id: "fix:GT:d2:0", idx: 0, action: "verify" },
      { task_id: "fix:GT:d2:0", idx: 0, action: "remove" },
    ];
    expect(service.recorded).toEqual(expectedWire);
    expect(service.effective.get("fix:GT:d2:0#0")).toEqual({
      task_id: "fix:GT:d2:0",
      idx: 0,
      action: "remove",
    });
    expect(service.finalized).toBe("accepted");
    expect(completed).toEqual({ status: "accepted", failed_controls: [] });
    expect(root().textContent).toContain("Assignment complete");
  });

  it("serves control payloads schema-identical to normal ones", () => {
    const [normal, control] = [service.tasks[0]!.payload, service.tasks[1]!.payload];
    expect(service.tasks[1]!.isControl).toBe(true);
    expect(Object.keys(control).sort()).toEqual(Object.keys(normal).sort());
    const annotationKeys = (payload: typeof normal) =>
      new Set(payload.annotations.flatMap((a) => Object.keys(a)));
    expect(annotationKeys(control)).toEqual(annotationKeys(normal));
    expect(JSON.stringify(control)).not.toContain("control");
    expect(JSON.stringify(control)).not.toContain("is_control");
  });

  it("renders one highlight per annotation and gates submission on all of them", async () => {
    document.body.innerHTML = '<div id="app"></div>';
    const four = new FakeService("a4", [
      {
        payload: {
          task_id: "fix:GT:d9:0",
          text: "aaa bbb ccc ddd eee fff",
          annotations: [
            { idx: 0, start: 0, end: 3, link: "A" },
            { idx: 1, start: 4, end: 7, link: "B" },
            { idx: 2, start: 8, end: 11, link: "C" },
            { idx: 3, start: 12, end: 15, link: "D" },
          ],
        },
        isControl: false,
      },
    ]);
    const app = new AnnotatorApp(
      root(),
      new CollectClient("", "a4", four.fetchLike()),
      new StubSummaryProvider(),
    );
    await app.start();
    await flush();
    expect(root().querySelectorAll("mark.mention")).toHaveLength(4);
    for (let idx = 0; idx < 4; idx += 1) {
      expect((root().querySelector(".next-task") as HTMLButtonElement).disabled).toBe(true);
      await openCard(idx);
      await act(".action-verify");
    }
    expect((root().querySelector(".next-task") as HTMLButtonElement).disabled).toBe(false);
  });

  it("requires every annotation before the task can be submitted", async () => {
    const next = root().querySelector(".next-task") as HTMLButtonElement;
    expect(next.disabled).toBe(true);
    await openCard(0);
    await act(".action-verify");
    expect((root().querySelector(".next-task") as HTMLButtonElement).disabled).toBe(true);
    await openCard(1);
    await act(".action-remove");
    expect((root().querySelector(".next-task") as HTMLButtonElement).disabled).toBe(false);
  });

  it("marks answered mentions and reports progress", async () => {
    await openCard(0);
    await act(".action-verify");
    const mark = root().querySelector('mark[data-idx="0"]') as HTMLElement;
    expect(mark.className).toContain("answered");
    expect(root().querySelector(".status")?.textContent).toContain("1 of 2");
  });

  it("supports keyboard shortcuts on the open card", async () => {
    await openCard(0);
    window.dispatchEvent(new KeyboardEvent("keydown", { key: "v" }));
    await flush();
    expect(service.recorded).toEqual([{ task_id: "fix:GT:d1:0", idx: 0, action: "verify" }]);
  });

  it("shows the entity card with the stubbed summary", async () => {
    await openCard(0);
    const card = root().querySelector(".entity-card") as HTMLElement;
    expect(card.hidden).toBe(false);
    expect(card.querySelector("h3")?.textContent).toBe("Germany");
    expect(card.querySelector(".summary")?.textContent).toContain("Germany");
    expect(card.querySelector("a")?.getAttribute("href")).toContain("/wiki/Germany");
  });

  it("disables the modify confirmation until the title differs", async () => {
    await openCard(0);
    await act(".action-modify");
    const input = root().querySelector(".modify-input") as HTMLInputElement;
    const confirm = root().querySelector(".modify-confirm") as HTMLButtonElement;
    expect(confirm.disabled).toBe(true);
    input.value = "Germany"; // unchanged title
    input.dispatchEvent(new Event("input", { bubbles: true }));
    expect(confirm.disabled).toBe(true);
    input.value = "West Germany";
    input.dispatchEvent(new Event("input", { bubbles: true }));
    expect(confirm.disabled).toBe(false);
  });
});

describe("failure handling", () => {
  beforeEach(() => {
    document.body.innerHTML = '<div id="app"></div>';
  });

  it("offers a retry on network failure without losing the answer", async () => {
    const service = new FakeService("a0", fixtureTasks());
    const healthy = service.fetchLike();
    let failNext = false;
    const flaky: typeof healthy = async (input, init) => {
      if (failNext && init?.method === "POST") {
        failNext = false;
        throw new TypeError("network down");
      }
      return healthy(input, init);
    };
    const app = new AnnotatorApp(
      root(),
      new CollectClient("", "a0", flaky),
      new StubSummaryProvider(),
    );
    await app.start();
    await flush();

    failNext = true;
    await openCard(0);
    await act(".action-verify");
    expect(service.recorded).toHaveLength(0); // nothing saved, no silent loss
    const bar = root().querySelector(".error-bar") as HTMLElement;
    expect(bar.textContent).toContain("network problem");
    (bar.querySelector(".retry") as HTMLElement).click();
    await flush();
    expect(service.recorded).toEqual([{ task_id: "fix:GT:d1:0", idx: 0, action: "verify" }]);
  });

  it("surfaces server rejections verbatim and keeps local state unchanged", async () => {
    const service = new FakeService("a0", fixtureTasks());
    const healthy = service.fetchLike();
    const refusing: typeof healthy = async (input, init) => {
      if (init?.method === "POST" && input.endsWith("/outcome")) {
        return new Response(JSON.stringify({ detail: "assignment a0 is already finalized" }), {
          status: 409,
          headers: { "Content-Type": "application/json" },
        });
      }
      return healthy(input, init);
    };
    const app = new AnnotatorApp(
      root(),
      new CollectClient("", "a0", refusing),
      new StubSummaryProvider(),
    );
    await app.start();
    await flush();
    await openCard(0);
    await act(".action-verify");
    expect(service.recorded).toHaveLength(0);
    const bar = root().querySelector(".error-bar") as HTMLElement;
    expect(bar.textContent).toContain("already finalized");
    expect(bar.querySelector(".retry")).toBeNull(); // a refusal is not retried
    const mark = root().querySelector('mark[data-idx="0"]') as HTMLElement;
    expect(mark.className).not.toContain("answered");
  });
});
