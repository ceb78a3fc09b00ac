/**
 * Typed client for the review-service HTTP JSON API.
 *
 * The bearer token lives only in this object (shared clinic machines must
 * not retain it), and the fetch implementation is injectable so tests can
 * intercept every request and response.
 */

import type { BlindedItemView, DecisionKind, QueueView, SessionView, SubmitAck } from "./types";

export interface FetchResponseLike {
  ok: boolean;
  status: number;
  text(): Promise<string>;
}

export type FetchLike = (
  url: string,
  init?: { method?: string; headers?: Record<string, string>; body?: string }
) => Promise<FetchResponseLike>;

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly detail: string
  ) {
    super(`HTTP ${status}: ${detail}`);
  }
}

export class ApiClient {
  private readonly token: string;

  constructor(
    private readonly baseUrl: string,
    token: string,
    private readonly fetchImpl: FetchLike
  ) {
    this.token = token;
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const response = await this.fetchImpl(`${this.baseUrl}${path}`, {
      method,
      headers: {
        Authorization: `Bearer ${this.token}`,
        "Content-Type": "application/json",
      },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const text = await response.text();
    if (!response.ok) {
      let detail = text;
      try {
        const parsed = JSON.parse(text) as { detail?: string };
        if (typeof parsed.detail === "string") detail = parsed.detail;
      } catch {
        // keep the raw body as the detail
      }
      throw new ApiError(response.status, detail);
    }
    return JSON.parse(text) as T;
  }

  getSession(sessionId: string): Promise<SessionView> {
    return this.request("GET", `/sessions/${encodeURIComponent(sessionId)}`);
  }

  getItem(sessionId: string, itemId: string): Promise<BlindedItemView> {
    return this.request(
      "GET",
      `/sessions/${encodeURIComponent(sessionId)}/items/${encodeURIComponent(itemId)}`
    );
  }

  submitRanking(sessionId: string, itemId: string, ranking: string[]): Promise<SubmitAck> {
    return this.request(
      "POST",
      `/sessions/${encodeURIComponent(sessionId)}/items/${encodeURIComponent(itemId)}/ranking`,
      { ranking }
    );
  }

  getQueue(batchId: string): Promise<QueueView> {
    return this.request("GET", `/batches/${encodeURIComponent(batchId)}/queue`);
  }

  submitDecision(
    batchId: string,
    itemId: string,
    kind: DecisionKind,
    payload?: string
  ): Promise<SubmitAck> {
    return this.request(
      "POST",
      `/batches/${encodeURIComponent(batchId)}/items/${encodeURIComponent(itemId)}/decision`,
      { kind, payload: payload ?? null }
    );
  }
}

/** True when `ordering` uses each of `labels` exactly once. */
export function isPermutationOf(ordering: string[], labels: string[]): boolean {
  if (ordering.length !== labels.length) return false;
  const sortedOrdering = [...ordering].sort();
  const sortedLabels = [...labels].sort();
  return sortedOrdering.every((value, index) => value === sortedLabels[index]);
}
