/**
 * Entry point: ?assignment=<id> picks the assignment, ?offline=1 swaps the
 * Wikipedia summary client for the local stub, ?api=<base> points at a
 * non-default service origin.
 */

import { AnnotatorApp } from "./app.js";
import { CollectClient } from "./api.js";
import { makeSummaryProvider } from "./wiki.js";

function boot(): void {
  const params = new URLSearchParams(window.location.search);
  const assignmentId = params.get("assignment");
  const root = document.getElementById("app");
  if (!root) throw new Error("missing #app container");
  if (!assignmentId) {
    root.textContent = "Add ?assignment=<id> to the URL to start an assignment.";
    return;
  }
  const api = params.get("api") ?? "";
  const offline = params.get("offline") === "1";
  const app = new AnnotatorApp(
    root,
    new CollectClient(api, assignmentId),
    makeSummaryProvider(offline),
  );
  void app.start();
}

boot();
