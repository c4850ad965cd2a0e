import { describe, expect, it } from "vitest";

import { StubSummaryProvider, WikipediaSummaryProvider, makeSummaryProvider, wikiPageUrl } from "../src/wiki.js";

describe("wikiPageUrl", () => {
  it("underscores and escapes the title", () => {
    expect(wikiPageUrl("New York City")).toBe("https://en.wikipedia.org/wiki/New_York_City");
    expect(wikiPageUrl("Café")).toBe("https://en.wikipedia.org/wiki/Caf%C3%A9");
  });
});

describe("StubSummaryProvider", () => {
  it("answers offline", async () => {
    const summary = await new StubSummaryProvider().summary("Berlin");
    expect(summary.title).toBe("Berlin");
    expect(summary.extract).toContain("Berlin");
    expect(summary.url).toContain("wikipedia.org/wiki/Berlin");
  });
});

describe("WikipediaSummaryProvider", () => {
  it("reads the REST page-summary endpoint", async () => {
    let requested = "";
    const provider = new WikipediaSummaryProvider(async (input) => {
      requested = input;
      return new Response(
        JSON.stringify({
          title: "Berlin",
          extract: "Capital of Germany.",
          content_urls: { desktop: { page: "https://en.wikipedia.org/wiki/Berlin" } },
        }),
        { status: 200 },
      );
    });
    const summary = await provider.summary("Berlin");
    expect(requested).toBe("https://en.wikipedia.org/api/rest_v1/page/summary/Berlin");
    expect(summary.extract).toBe("Capital of Germany.");
  });

  it("falls back gracefully on failures", async () => {
    const failing = new WikipediaSummaryProvider(async () => {
      throw new Error("offline");
    });
    const summary = await failing.summary("Paris");
    expect(summary.title).toBe("Paris");
    expect(summary.url).toContain("/wiki/Paris");

    const notFound = new WikipediaSummaryProvider(
      async () => new Response("nope", { status: 404 }),
    );
    expect((await notFound.summary("Paris")).extract).toContain("no summary");
  });
});

describe("makeSummaryProvider", () => {
  it("picks the stub in offline mode", () => {
    expect(makeSummaryProvider(true)).toBeInstanceOf(StubSummaryProvider);
    expect(makeSummaryProvider(false)).toBeInstanceOf(WikipediaSummaryProvider);
  });
});
