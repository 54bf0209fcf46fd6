"""Web service exposing the two-stage study to browser clients."""

from __future__ import annotations

import numpy as np
from fastapi import FastAPI, HTTPException
from pydantic import BaseModel

from .clips import MotionClip
from .study import (
    ResponseRecord,
    StudyConfig,
    StudyProtocolError,
    StudySession,
    StudyStore,
    Trial,
    export_records,
    create_session,
    next_trial,
    submit_response,
)
from .synthetic import make_pointing_clip


def clip_payload(clip: MotionClip) -> dict:
    """Renderable form of a clip: link names, fps, per-frame link positions."""
    return {
        "link_names": [l.name for l in clip.skeleton.links],
        "fps": clip.fps,
        "frames": clip.link_positions().tolist(),
    }


class ProceduralClipProvider:
    """Pre-rendered (model, position) stimuli from the procedural generator.

    Per-model aim error differentiates the anonymized models; caching keeps the
    stimulus identical across participants for the same position.
    """

    def __init__(self, skeleton, aim_errors: dict[str, float] | None = None):
        self.skeleton = skeleton
        self.aim_errors = aim_errors or {}
        self._cache: dict[tuple[str, int], MotionClip] = {}

    def __call__(self, model: str, position_index: int, target) -> MotionClip:
        key = (model, position_index)
        if key not in self._cache:
            err = self.aim_errors.get(model, 0.0)
            rng = np.random.default_rng(hash(key) & 0xFFFFFFFF)
            self._cache[key] = make_pointing_clip(
                self.skeleton, np.asarray(target, dtype=float),
                aim_error=err, rng=rng,
                source_id=f"{model}@{position_index}")
        return self._cache[key]


class CreateSessionRequest(BaseModel):
    participant_id: str


class ResponseBody(BaseModel):
    trial_id: str
    rating: int | None = None
    choice: int | None = None
    motion_finished: bool = False
    latency: float = 0.0


def trial_payload(trial: Trial, provider) -> dict:
    """Client-facing trial data; stage-1 payloads carry no candidate objects
    and neither stage reveals which candidate is the target."""
    clip = provider(trial.model, trial.position_index, trial.target.xyz)
    payload = {
        "trial_id": trial.trial_id,
        "stage": trial.stage,
        "condition": trial.condition,
        "order_index": trial.order_index,
        "clip": clip_payload(clip),
    }
    if trial.stage == 2:
        for d in trial.distractors:
            dist = float(np.linalg.norm(d.xyz - trial.target.xyz))
            if not 0.20 - 1e-9 <= dist <= 0.40 + 1e-9:
                raise RuntimeError(
                    f"trial {trial.trial_id}: distractor at {dist:.3f} m "
                    "violates the 0.20-0.40 m rule")
        payload["candidates"] = [list(c) for c in trial.candidate_order]
    return payload


def create_app(config: StudyConfig, store: StudyStore,
               provider) -> FastAPI:
    app = FastAPI(title="pointgen study service")
    sessions: dict[str, StudySession] = {}
    for sid in store.session_ids():
        sessions[sid] = store.restore_session(sid)

    @app.post("/sessions")
    def post_session(body: CreateSessionRequest):
        session = create_session(config, body.participant_id)
        if session.session_id not in sessions:
            sessions[session.session_id] = session
            store.record_session(session)
        return {"session_id": session.session_id,
                "total_trials": len(session.trials),
                "cursor": sessions[session.session_id].cursor}

    def _session(sid: str) -> StudySession:
        if sid not in sessions:
            raise HTTPException(status_code=404, detail="unknown session")
        return sessions[sid]

    @app.get("/sessions/{sid}/trials/next")
    def get_next(sid: str):
        session = _session(sid)
        trial = next_trial(session)
        if trial is None:
            return {"done": True}
        return {"done": False, **trial_payload(trial, provider)}

    @app.post("/sessions/{sid}/responses")
    def post_response(sid: str, body: ResponseBody):
        session = _session(sid)
        record = ResponseRecord(session_id=sid, trial_id=body.trial_id,
                                rating=body.rating, choice=body.choice,
                                motion_finished=body.motion_finished,
                                latency=body.latency)
        try:
            return submit_response(session, record, store)
        except StudyProtocolError as exc:
            raise HTTPException(status_code=422, detail=str(exc))

    @app.get("/export")
    def get_export():
        return export_records(store).to_dict(orient="records")

    return app
