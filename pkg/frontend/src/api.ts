/** Thin HTTP client for the study service; all calls are serialized so at
 * most one request is in flight per session. */

import { MalformedPayloadError, parseTrialView } from "./protocol.js";
import type { SessionInfo, TrialView } from "./protocol.js";

export interface RatingResponse {
  trial_id: string;
  rating: number;
}

export interface ChoiceResponse {
  trial_id: string;
  choice: number;
  motion_finished: boolean;
  latency: number;
}

export type NextTrial = { done: true } | ({ done: false } & TrialView);

type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class StudyApi {
  private queue: Promise<unknown> = Promise.resolve();

  constructor(private baseUrl: string,
              private fetchImpl: FetchLike = fetch.bind(globalThis)) {}

  private enqueue<T>(job: () => Promise<T>): Promise<T> {
    const next = this.queue.then(job, job);
    this.queue = next.catch(() => undefined);
    return next;
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const res = await this.fetchImpl(`${this.baseUrl}${path}`, init);
    if (!res.ok) {
      throw new Error(`${path}: HTTP ${res.status} ${await res.text()}`);
    }
    return (await res.json()) as T;
  }

  createSession(participantId: string): Promise<SessionInfo> {
    return this.enqueue(() =>
      this.request<SessionInfo>("/sessions", {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: JSON.stringify({ participant_id: participantId }),
      }));
  }

  nextTrial(sessionId: string): Promise<NextTrial> {
    return this.enqueue(async () => {
      const raw = await this.request<Record<string, unknown>>(
        `/sessions/${sessionId}/trials/next`);
      if (raw.done === true) {
        return { done: true } as const;
      }
      if (raw.done !== false) {
        throw new MalformedPayloadError("missing done flag");
      }
      return { done: false as const, ...parseTrialView(raw) };
    });
  }

  submit(sessionId: string,
         body: RatingResponse | ChoiceResponse): Promise<unknown> {
    return this.enqueue(() =>
      this.request(`/sessions/${sessionId}/responses`, {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: JSON.stringify(body),
      }));
  }
}
