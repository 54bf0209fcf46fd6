/** Fixed-fps playback clock for a served motion clip.
 *
 * Maps wall time to a frame index and raises the motion-finished flag exactly
 * when the last frame is reached; the flag never reverts.
 */

export class PlaybackClock {
  readonly frameCount: number;
  readonly fps: number;
  private startedAt: number | null = null;
  private finished = false;
  private listeners: Array<() => void> = [];

  constructor(frameCount: number, fps: number) {
    if (!Number.isInteger(frameCount) || frameCount <= 0) {
      throw new Error(`frame count must be a positive integer, got ${frameCount}`);
    }
    if (!(fps > 0)) {
      throw new Error(`fps must be positive, got ${fps}`);
    }
    this.frameCount = frameCount;
    this.fps = fps;
  }

  /** Clip duration in seconds (first frame at t=0, last at (n-1)/fps). */
  get duration(): number {
    return (this.frameCount - 1) / this.fps;
  }

  get motionFinished(): boolean {
    return this.finished;
  }

  onMotionFinished(cb: () => void): void {
    this.listeners.push(cb);
  }

  start(now: number): void {
    this.startedAt = now;
    if (this.frameCount === 1) {
      this.finish();
    }
  }

  /** Frame to display at wall time `now`; clamped to the final frame. */
  frameAt(now: number): number {
    if (this.startedAt === null) {
      return 0;
    }
    const raw = Math.floor((now - this.startedAt) * this.fps);
    const frame = Math.min(Math.max(raw, 0), this.frameCount - 1);
    if (frame === this.frameCount - 1) {
      this.finish();
    }
    return frame;
  }

  private finish(): void {
    if (this.finished) return;
    this.finished = true;
    for (const cb of this.listeners) cb();
  }
}
