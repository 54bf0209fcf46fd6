/** Referential-game selection state and viewer-ray hit testing.
 *
 * Candidate spheres stay black for every frame while the motion plays and
 * turn white the moment it ends; selection is disabled until then, and only
 * one final selection is accepted.
 */

import type { Vec3 } from "./protocol.js";

export const SPHERE_RADIUS = 0.08;
export const COLOR_DURING_MOTION = "#000000";
export const COLOR_AFTER_MOTION = "#ffffff";

export interface Ray {
  origin: Vec3;
  /** Need not be normalized. */
  direction: Vec3;
}

export interface RayHit {
  index: number;
  /** Distance along the (normalized) ray to the near intersection point. */
  distance: number;
}

function sub(a: Vec3, b: Vec3): Vec3 {
  return [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
}

function dot(a: Vec3, b: Vec3): number {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

/** Nearest sphere hit by the ray, or null.
 *
 * Solves |o + t*d - c|^2 = r^2 per sphere and keeps the smallest
 * non-negative root; spheres behind the origin never match.
 */
export function pickSphere(ray: Ray, centers: Vec3[],
                           radius: number = SPHERE_RADIUS): RayHit | null {
  const len = Math.sqrt(dot(ray.direction, ray.direction));
  if (!(len > 0)) {
    throw new Error("ray direction must be non-zero");
  }
  const d: Vec3 = [ray.direction[0] / len, ray.direction[1] / len,
                   ray.direction[2] / len];
  let best: RayHit | null = null;
  centers.forEach((center, index) => {
    const oc = sub(ray.origin, center);
    const b = dot(oc, d);
    const disc = b * b - (dot(oc, oc) - radius * radius);
    if (disc < 0) return;
    const sq = Math.sqrt(disc);
    // near root first; if it is behind the origin, the origin may be inside
    // the sphere and the far root still counts
    let t = -b - sq;
    if (t < 0) t = -b + sq;
    if (t < 0) return;
    if (best === null || t < best.distance) {
      best = { index, distance: t };
    }
  });
  return best;
}

export class SubmissionBlockedError extends Error {}

export class SelectionState {
  readonly spheres: Vec3[];
  private motionFinished = false;
  private chosen: number | null = null;
  hovered: number | null = null;

  constructor(spheres: Vec3[]) {
    if (spheres.length !== 3) {
      throw new Error(`need exactly 3 candidate spheres, got ${spheres.length}`);
    }
    this.spheres = spheres;
  }

  /** Color every sphere must currently be rendered with. */
  get sphereColor(): string {
    return this.motionFinished ? COLOR_AFTER_MOTION : COLOR_DURING_MOTION;
  }

  get selectionEnabled(): boolean {
    return this.motionFinished && this.chosen === null;
  }

  get selection(): number | null {
    return this.chosen;
  }

  finishMotion(): void {
    this.motionFinished = true;
  }

  hover(ray: Ray): number | null {
    const hit = pickSphere(ray, this.spheres);
    this.hovered = hit === null ? null : hit.index;
    return this.hovered;
  }

  /** Confirm the sphere under the ray; no-op (null) on a miss.
   *
   * Selecting while the motion still plays, or after a selection was already
   * made, is a protocol violation surfaced to the caller.
   */
  select(ray: Ray): number | null {
    if (!this.motionFinished) {
      throw new SubmissionBlockedError("selection disabled until motion end");
    }
    if (this.chosen !== null) {
      throw new SubmissionBlockedError("selection already made");
    }
    const hit = pickSphere(ray, this.spheres);
    if (hit === null) {
      return null;
    }
    this.chosen = hit.index;
    return this.chosen;
  }
}
