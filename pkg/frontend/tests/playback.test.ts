import { describe, expect, it } from "vitest";

import { PlaybackClock } from "../src/playback.js";

describe("PlaybackClock", () => {
  it("plays a 3 s clip at 30 fps as 90 frames then fires motion-finished", () => {
    const clock = new PlaybackClock(90, 30);
    let fired = 0;
    clock.onMotionFinished(() => fired++);
    clock.start(10.0);
    const seen = new Set<number>();
    for (let t = 10.0; t < 13.2; t += 0.005) {
      seen.add(clock.frameAt(t));
    }
    expect(seen.size).toBe(90);
    expect(Math.min(...seen)).toBe(0);
    expect(Math.max(...seen)).toBe(89);
    expect(clock.motionFinished).toBe(true);
    expect(fired).toBe(1);
    expect(clock.duration).toBeCloseTo(89 / 30, 12);
  });

  it("is not finished before the last frame", () => {
    const clock = new PlaybackClock(61, 30);
    clock.start(0);
    expect(clock.frameAt(1.0)).toBe(30);
    expect(clock.motionFinished).toBe(false);
    clock.frameAt(2.0);
    expect(clock.motionFinished).toBe(true);
  });

  it("clamps to the final frame and never reverts the flag", () => {
    const clock = new PlaybackClock(10, 30);
    clock.start(0);
    expect(clock.frameAt(99)).toBe(9);
    expect(clock.motionFinished).toBe(true);
    expect(clock.frameAt(0.01)).toBe(0);
    expect(clock.motionFinished).toBe(true);
  });

  it("fires immediately for a single-frame clip", () => {
    const clock = new PlaybackClock(1, 30);
    let fired = false;
    clock.onMotionFinished(() => { fired = true; });
    clock.start(5);
    expect(fired).toBe(true);
  });

  it("rejects invalid frame counts and rates", () => {
    expect(() => new PlaybackClock(0, 30)).toThrow();
    expect(() => new PlaybackClock(2.5, 30)).toThrow();
    expect(() => new PlaybackClock(10, 0)).toThrow();
  });
});
