/** Session driver: fetches trials strictly in server order, gates responses
 * on playback state, and posts them back one at a time.
 *
 * Stage 1: a 1-5 naturalness rating, accepted only after playback ends and at
 * most once per trial (later submissions are ignored client-side).
 * Stage 2: a ray-confirmed sphere selection, only possible after motion end;
 * the posted body always carries motion_finished and the response latency.
 */

import { StudyApi } from "./api.js";
import { PlaybackClock } from "./playback.js";
import { MalformedPayloadError } from "./protocol.js";
import type { TrialView } from "./protocol.js";
import { SelectionState } from "./selection.js";
import type { Ray } from "./selection.js";

export interface ActiveTrial {
  view: TrialView;
  clock: PlaybackClock;
  /** Present only for stage-2 trials. */
  selection: SelectionState | null;
}

export interface AuditEntry {
  kind: "malformed-payload";
  detail: string;
}

export class ProtocolStateError extends Error {}

export class TrialRunner {
  sessionId: string | null = null;
  totalTrials = 0;
  current: ActiveTrial | null = null;
  done = false;
  /** Server-assigned order of every trial presented, for audit. */
  readonly presentedOrder: number[] = [];
  readonly audit: AuditEntry[] = [];
  private ratingSubmitted = false;
  private now: () => number;

  constructor(private api: StudyApi, now?: () => number) {
    this.now = now ?? (() => performance.now() / 1000);
  }

  async begin(participantId: string): Promise<void> {
    const info = await this.api.createSession(participantId);
    this.sessionId = info.session_id;
    this.totalTrials = info.total_trials;
  }

  /** Fetch and start the next trial; malformed payloads are recorded in the
   * audit log and reported via the error screen, never silently skipped. */
  async startNext(): Promise<ActiveTrial | null> {
    if (this.sessionId === null) {
      throw new ProtocolStateError("session not started");
    }
    let next;
    try {
      next = await this.api.nextTrial(this.sessionId);
    } catch (err) {
      if (err instanceof MalformedPayloadError) {
        this.audit.push({ kind: "malformed-payload", detail: err.message });
        throw err;
      }
      throw err;
    }
    if (next.done) {
      this.done = true;
      this.current = null;
      return null;
    }
    const view: TrialView = next;
    if (this.presentedOrder.length > 0
        && view.order_index <= this.presentedOrder[
          this.presentedOrder.length - 1]) {
      throw new ProtocolStateError(
        `server order violated: ${view.order_index} after `
        + `${this.presentedOrder[this.presentedOrder.length - 1]}`);
    }
    this.presentedOrder.push(view.order_index);
    const clock = new PlaybackClock(view.clip.frames.length, view.clip.fps);
    const selection = view.stage === 2
      ? new SelectionState(view.candidates!)
      : null;
    if (selection !== null) {
      clock.onMotionFinished(() => selection.finishMotion());
    }
    this.current = { view, clock, selection };
    this.ratingSubmitted = false;
    clock.start(this.now());
    return this.current;
  }

  /** Advance playback; returns the frame to render. */
  tick(): number {
    if (this.current === null) {
      throw new ProtocolStateError("no active trial");
    }
    return this.current.clock.frameAt(this.now());
  }

  /** Stage-1 rating; first submission wins, duplicates are ignored. */
  async submitRating(rating: number): Promise<boolean> {
    const trial = this.active(1);
    if (!trial.clock.motionFinished) {
      throw new ProtocolStateError("rate only after playback ends");
    }
    if (!Number.isInteger(rating) || rating < 1 || rating > 5) {
      throw new RangeError(`rating must be 1..5, got ${rating}`);
    }
    if (this.ratingSubmitted) {
      return false;
    }
    this.ratingSubmitted = true;
    await this.api.submit(this.sessionId!, {
      trial_id: trial.view.trial_id, rating,
    });
    return true;
  }

  /** Stage-2 ray confirmation; posts only on an actual sphere hit. The
   * selection state itself refuses any attempt before motion end, so no
   * network submission can happen early. */
  async confirmSelection(ray: Ray): Promise<number | null> {
    const trial = this.active(2);
    const started = this.now();
    const index = trial.selection!.select(ray);
    if (index === null) {
      return null;
    }
    await this.api.submit(this.sessionId!, {
      trial_id: trial.view.trial_id,
      choice: index,
      motion_finished: trial.clock.motionFinished,
      latency: this.now() - started,
    });
    return index;
  }

  private active(stage: 1 | 2): ActiveTrial {
    if (this.current === null) {
      throw new ProtocolStateError("no active trial");
    }
    if (this.current.view.stage !== stage) {
      throw new ProtocolStateError(
        `stage-${this.current.view.stage} trial cannot take this response`);
    }
    return this.current;
  }
}
