/** HTTP client for the backend service.
 *
 * The dashboard is purely a client of the public API plus the authority
 * bearer token; it holds no private user data.
 */

import type { CtaDocument } from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
  }
}

export interface PublishReceipt {
  id: string;
  published_at: number;
  coverage_cells: string[];
}

export interface Feed {
  ctas: (CtaDocument & { published_at: number })[];
  now: number;
}

async function errorDetail(response: Response): Promise<string> {
  const body = await response.text();
  try {
    const parsed = JSON.parse(body) as { error?: string };
    if (parsed.error) return parsed.error;
  } catch {
    // non-JSON error body; fall through to the raw text
  }
  return body || response.statusText;
}

export class DashboardClient {
  constructor(
    readonly baseUrl: string,
    private readonly token: string,
  ) {}

  private async request(
    method: string,
    path: string,
    options: { body?: unknown; authorized?: boolean } = {},
  ): Promise<Response> {
    const headers: Record<string, string> = {};
    if (options.authorized) headers["Authorization"] = `Bearer ${this.token}`;
    if (options.body !== undefined) headers["Content-Type"] = "application/json";
    const response = await fetch(this.baseUrl + path, {
      method,
      headers,
      body: options.body === undefined ? undefined : JSON.stringify(options.body),
    });
    if (!response.ok) throw new ApiError(response.status, await errorDetail(response));
    return response;
  }

  async health(): Promise<boolean> {
    try {
      await this.request("GET", "/v1/health");
      return true;
    } catch {
      return false;
    }
  }

  async publishCta(document: CtaDocument): Promise<PublishReceipt> {
    const response = await this.request("POST", "/v1/cta", {
      body: document,
      authorized: true,
    });
    return (await response.json()) as PublishReceipt;
  }

  async revokeCta(id: string): Promise<void> {
    await this.request("POST", `/v1/cta/${encodeURIComponent(id)}/revoke`, {
      authorized: true,
    });
  }

  async fetchFeed(cells: string[], since = 0): Promise<Feed> {
    const params = new URLSearchParams({ cells: cells.join(","), since: String(since) });
    const response = await this.request("GET", `/v1/cta?${params}`);
    return (await response.json()) as Feed;
  }

  async fetchOpenDataCsv(): Promise<string> {
    const response = await this.request("GET", "/v1/opendata/daily.csv");
    return response.text();
  }
}

/**
 * Region index named in a competence-violation error, or null.
 *
 * The server's 403 reads "region <idx> centroid cell <i:j> outside
 * authority competence"; the index lets the form highlight the ring.
 */
export function offendingRegionIndex(error: ApiError): number | null {
  if (error.status !== 403) return null;
  const match = /^region (\d+) /.exec(error.detail);
  return match ? parseInt(match[1]!, 10) : null;
}
