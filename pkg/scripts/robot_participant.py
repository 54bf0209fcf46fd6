#!/usr/bin/env python3
"""Scripted participant that answers a running study service over HTTP.

Useful for end-to-end checks of a deployed study server without a browser:
it rates every first-stage clip, and in the second stage picks the candidate
best aligned with the elbow-hand axis during the hold phase (like the
built-in machine referee, but computed purely from the served payload).

    python3 scripts/robot_participant.py --base-url http://localhost:8000 \
        --participant robot-1
"""
from __future__ import annotations

import argparse

import httpx
import numpy as np


def hold_indices(hand: np.ndarray, fps: float) -> np.ndarray:
    """Frames whose centered 0.15 s window keeps hand speed below 0.5 m/s."""
    speeds = np.linalg.norm(np.gradient(hand, 1.0 / fps, axis=0), axis=1)
    half = max(1, int(round(0.5 * 0.15 * fps)))
    out = [i for i in range(len(hand))
           if np.all(speeds[max(0, i - half):i + half + 1] < 0.5)]
    return np.array(out if out else [int(np.argmin(speeds))], dtype=int)


def pick_candidate(trial: dict, elbow_index: int, hand_index: int) -> int:
    frames = np.asarray(trial["clip"]["frames"])
    elbow = frames[:, elbow_index]
    hand = frames[:, hand_index]
    held = hold_indices(hand, trial["clip"]["fps"])
    v_eh = hand[held] - elbow[held]
    v_eh /= np.linalg.norm(v_eh, axis=1, keepdims=True)
    angles = []
    for cand in trial["candidates"]:
        v_hc = np.asarray(cand)[None] - hand[held]
        v_hc /= np.linalg.norm(v_hc, axis=1, keepdims=True)
        angles.append(np.arccos(
            np.clip((v_eh * v_hc).sum(axis=1), -1, 1)).mean())
    return int(np.argmin(angles))


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--base-url", default="http://localhost:8000")
    ap.add_argument("--participant", default="robot-1")
    ap.add_argument("--elbow-index", type=int, default=3)
    ap.add_argument("--hand-index", type=int, default=4)
    args = ap.parse_args()

    with httpx.Client(base_url=args.base_url, timeout=60.0) as client:
        sid = client.post("/sessions", json={
            "participant_id": args.participant}).json()["session_id"]
        answered = 0
        while True:
            trial = client.get(f"/sessions/{sid}/trials/next").json()
            if trial["done"]:
                break
            if trial["stage"] == 1:
                body = {"trial_id": trial["trial_id"], "rating": 4}
            else:
                choice = pick_candidate(trial, args.elbow_index,
                                        args.hand_index)
                body = {"trial_id": trial["trial_id"], "choice": choice,
                        "motion_finished": True, "latency": 1.0}
            r = client.post(f"/sessions/{sid}/responses", json=body)
            r.raise_for_status()
            answered += 1
        print(f"answered {answered} trials as {args.participant!r}")


if __name__ == "__main__":
    main()
