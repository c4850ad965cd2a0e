import { describe, expect, it } from "vitest";

import { ApiError, CollectClient } from "../src/api.js";
import { FakeService, fixtureTasks } from "./fakeservice.js";

function client(service: FakeService): CollectClient {
  return new CollectClient("", service.assignmentId, service.fetchLike());
}

describe("CollectClient", () => {
  it("fetches the next task and signals completion with null", async () => {
    const service = new FakeService("a1", fixtureTasks());
    const c = client(service);
    const task = await c.nextTask();
    expect(task?.task_id).toBe("fix:GT:d1:0");

    // a task without annotations is auto-complete server-side
    const empty = new FakeService("a1", fixtureTasks().slice(3));
    expect(await client(empty).nextTask()).toBeNull();
  });

  it("posts outcome bodies unchanged", async () => {
    const service = new FakeService("a1", fixtureTasks());
    const c = client(service);
    await c.submitOutcome({ task_id: "fix:GT:d1:0", idx: 0, action: "verify" });
    await c.submitOutcome({
      task_id: "fix:GT:d1:0",
      idx: 1,
      action: "modify",
      new_link: "Argentina national football team",
    });
    expect(service.recorded).toEqual([
      { task_id: "fix:GT:d1:0", idx: 0, action: "verify" },
      {
        task_id: "fix:GT:d1:0",
        idx: 1,
        action: "modify",
        new_link: "Argentina national football team",
      },
    ]);
  });

  it("surfaces server rejections with their reasons", async () => {
    const service = new FakeService("a1", fixtureTasks());
    const c = client(service);
    await expect(
      c.submitOutcome({ task_id: "fix:GT:d1:0", idx: 9, action: "verify" }),
    ).rejects.toThrowError(ApiError);
    await expect(
      c.submitOutcome({ task_id: "fix:GT:d1:0", idx: 9, action: "verify" }),
    ).rejects.toThrowError(/no annotation 9/);
    expect(service.recorded).toHaveLength(0);
  });

  it("raises on unknown assignments", async () => {
    const service = new FakeService("a1", fixtureTasks());
    const wrong = new CollectClient("", "ghost", service.fetchLike());
    await expect(wrong.nextTask()).rejects.toThrowError(/unknown assignment/);
  });

  it("finalizes and reports the verdict", async () => {
    const service = new FakeService("a1", []);
    const result = await client(service).finalize();
    expect(result.status).toBe("accepted");
    expect(service.finalized).toBe("accepted");
  });
});
