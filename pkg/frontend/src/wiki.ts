/**
 * Entity summaries for the card shown when a mention is clicked.
 *
 * Online mode reads the public Wikipedia REST page-summary endpoint;
 * the stub keeps everything offline for tests and air-gapped runs.
 */

import type { FetchLike } from "./api.js";

export interface EntitySummary {
  title: string;
  extract: string;
  url: string;
}

export interface SummaryProvider {
  summary(title: string): Promise<EntitySummary>;
}

export function wikiPageUrl(title: string, lang = "en"): string {
  return `https://${lang}.wikipedia.org/wiki/${encodeURIComponent(title.replace(/ /g, "_"))}`;
}

export class WikipediaSummaryProvider implements SummaryProvider {
  constructor(
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
    private readonly lang = "en",
  ) {}

  async summary(title: string): Promise<EntitySummary> {
    const url = `https://${this.lang}.wikipedia.org/api/rest_v1/page/summary/${encodeURIComponent(
      title.replace(/ /g, "_"),
    )}`;
    const fallback: EntitySummary = {
      title,
      extract: "(no summary available)",
      url: wikiPageUrl(title, this.lang),
    };
    try {
      const response = await this.fetchFn(url);
      if (!response.ok) return fallback;
      const body = (await response.json()) as {
        title?: string;
        extract?: string;
        content_urls?: { desktop?: { page?: string } };
      };
      return {
        title: body.title ?? title,
        extract: body.extract ?? fallback.extract,
        url: body.content_urls?.desktop?.page ?? fallback.url,
      };
    } catch {
      return fallback;
    }
  }
}

export class StubSummaryProvider implements SummaryProvider {
  async summary(title: string): Promise<EntitySummary> {
    return {
      title,
      extract: `Offline summary for "${title}".`,
      url: wikiPageUrl(title),
    };
  }
}

export function makeSummaryProvider(offline: boolean, fetchFn?: FetchLike): SummaryProvider {
  return offline ? new StubSummaryProvider() : new WikipediaSummaryProvider(fetchFn);
}
