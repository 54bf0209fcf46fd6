/** Wire types for the study service and payload validation. */

export type Vec3 = [number, number, number];

export interface ClipPayload {
  link_names: string[];
  fps: number;
  /** frames[f][link] = [x, y, z] world position */
  frames: Vec3[][];
}

export interface TrialView {
  trial_id: string;
  stage: 1 | 2;
  condition: "across" | "side-by-side";
  order_index: number;
  clip: ClipPayload;
  /** Exactly 3 candidate positions for stage 2; absent for stage 1. */
  candidates?: Vec3[];
}

export interface SessionInfo {
  session_id: string;
  total_trials: number;
  cursor: number;
}

export class MalformedPayloadError extends Error {}

function isVec3(v: unknown): v is Vec3 {
  return Array.isArray(v) && v.length === 3 && v.every((x) => Number.isFinite(x));
}

/** Validate a served trial; stage-1 views must carry no candidate spheres and
 * stage-2 views exactly three. */
export function parseTrialView(raw: unknown): TrialView {
  const t = raw as Record<string, unknown>;
  if (typeof t !== "object" || t === null) {
    throw new MalformedPayloadError("trial payload is not an object");
  }
  if (typeof t.trial_id !== "string" || t.trial_id.length === 0) {
    throw new MalformedPayloadError("missing trial_id");
  }
  if (t.stage !== 1 && t.stage !== 2) {
    throw new MalformedPayloadError(`bad stage ${String(t.stage)}`);
  }
  if (t.condition !== "across" && t.condition !== "side-by-side") {
    throw new MalformedPayloadError(`bad condition ${String(t.condition)}`);
  }
  if (typeof t.order_index !== "number") {
    throw new MalformedPayloadError("missing order_index");
  }
  const clip = t.clip as Record<string, unknown>;
  if (typeof clip !== "object" || clip === null) {
    throw new MalformedPayloadError("missing clip");
  }
  if (!Array.isArray(clip.link_names) || clip.link_names.length === 0) {
    throw new MalformedPayloadError("clip has no link names");
  }
  if (typeof clip.fps !== "number" || clip.fps <= 0) {
    throw new MalformedPayloadError("clip fps must be positive");
  }
  const frames = clip.frames;
  if (!Array.isArray(frames) || frames.length === 0) {
    throw new MalformedPayloadError("clip has no frames");
  }
  const nLinks = clip.link_names.length;
  for (const frame of frames) {
    if (!Array.isArray(frame) || frame.length !== nLinks || !frame.every(isVec3)) {
      throw new MalformedPayloadError("frame shape does not match link names");
    }
  }
  const candidates = t.candidates;
  if (t.stage === 2) {
    if (!Array.isArray(candidates) || candidates.length !== 3
        || !candidates.every(isVec3)) {
      throw new MalformedPayloadError("stage-2 trial needs exactly 3 candidates");
    }
  } else if (candidates !== undefined) {
    throw new MalformedPayloadError("stage-1 trial must not carry candidates");
  }
  return t as unknown as TrialView;
}
