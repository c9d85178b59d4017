/** Thin typed client for the composition service. */

import type {
  ApiErrorBody,
  Candidate,
  CatalogSnapshot,
  EvaluateResult,
  NetworkSnapshot,
  StateMap,
  VerifyReport,
  Violation,
} from "./types.js";

export class ApiError extends Error {
  constructor(readonly status: number, readonly body: ApiErrorBody) {
    super(`${body.code}: ${body.message}`);
    this.name = "ApiError";
  }
}

/** Service origin from a `?api=` query parameter; same origin otherwise. */
export function apiBase(search: string): string {
  const value = new URLSearchParams(search).get("api");
  if (!value) return "";
  return value.replace(/\/+$/, "");
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class Client {
  constructor(private readonly base: string,
              private readonly fetchFn: FetchLike =
                  globalThis.fetch.bind(globalThis)) {}

  private async request<T>(method: string, path: string,
                           payload?: unknown): Promise<T> {
    const init: RequestInit = { method };
    if (payload !== undefined) {
      init.headers = { "content-type": "application/json" };
      init.body = JSON.stringify(payload);
    }
    const response = await this.fetchFn(`${this.base}${path}`, init);
    if (!response.ok) {
      let body: ApiErrorBody;
      try {
        body = (await response.json()) as ApiErrorBody;
      } catch {
        body = { code: "HTTP_" + response.status, message: response.statusText };
      }
      throw new ApiError(response.status, body);
    }
    return (await response.json()) as T;
  }

  getCatalog(): Promise<CatalogSnapshot> {
    return this.request("GET", "/api/catalog");
  }

  getNetwork(): Promise<NetworkSnapshot> {
    return this.request("GET", "/api/network");
  }

  evaluate(state: StateMap, combination: unknown,
           iterationCap?: number): Promise<EvaluateResult> {
    const payload: Record<string, unknown> = { state, combination };
    if (iterationCap !== undefined) payload.iteration_cap = iterationCap;
    return this.request("POST", "/api/evaluate", payload);
  }

  verify(state: StateMap, combination: unknown,
         goal: string): Promise<VerifyReport> {
    return this.request("POST", "/api/verify", { state, combination, goal });
  }

  check(combination: unknown): Promise<{ violations: Violation[] }> {
    return this.request("POST", "/api/check", { combination });
  }

  successors(prefixAtoms: string[],
             artifacts?: string[]): Promise<{ pattern_ids: string[] }> {
    const payload: Record<string, unknown> = { prefix_atoms: prefixAtoms };
    if (artifacts !== undefined) payload.artifacts = artifacts;
    return this.request("POST", "/api/successors", payload);
  }

  plan(state: StateMap, goal: string, limits?: Record<string, number | boolean>,
       ranking?: string): Promise<{ candidates: Candidate[] }> {
    const payload: Record<string, unknown> = { state, goal };
    if (limits !== undefined) payload.limits = limits;
    if (ranking !== undefined) payload.ranking = ranking;
    return this.request("POST", "/api/plan", payload);
  }
}
