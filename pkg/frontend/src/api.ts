/** Thin client for the assessment service HTTP API.
 *
 * The fetch implementation is injected so tests can supply a stub that
 * serves fixture JSON; the browser app passes `window.fetch`.
 */

import type { Assessment, EpisodeList, StatusResponse } from "./types.js";

export type FetchLike = (
  input: string,
  init?: { method?: string; headers?: Record<string, string>; body?: string },
) => Promise<{ ok: boolean; status: number; json(): Promise<unknown> }>;

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly url: string,
    detail: string,
  ) {
    super(`${status} from ${url}: ${detail}`);
    this.name = "ApiError";
  }
}

export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: FetchLike,
  ) {}

  private async get<T>(path: string): Promise<T> {
    const url = this.baseUrl + path;
    const resp = await this.fetchImpl(url);
    if (!resp.ok) {
      throw new ApiError(resp.status, url, await describeBody(resp));
    }
    return (await resp.json()) as T;
  }

  getEpisodes(): Promise<EpisodeList> {
    return this.get<EpisodeList>("/episodes");
  }

  getAssessment(episodeId: string): Promise<Assessment> {
    return this.get<Assessment>(
      `/episodes/${encodeURIComponent(episodeId)}/assessment`,
    );
  }

  getStatus(episodeId: string): Promise<StatusResponse> {
    return this.get<StatusResponse>(
      `/episodes/${encodeURIComponent(episodeId)}/status`,
    );
  }

  /** Request (re-)analysis; the service responds 202 while it runs. */
  async analyze(episodeId: string): Promise<void> {
    const url = `${this.baseUrl}/episodes/${encodeURIComponent(episodeId)}/analyze`;
    const resp = await this.fetchImpl(url, { method: "POST" });
    if (!resp.ok && resp.status !== 202) {
      throw new ApiError(resp.status, url, await describeBody(resp));
    }
  }
}

async function describeBody(resp: {
  json(): Promise<unknown>;
}): Promise<string> {
  try {
    const body = (await resp.json()) as { detail?: string };
    return typeof body.detail === "string" ? body.detail : JSON.stringify(body);
  } catch {
    return "no detail";
  }
}
