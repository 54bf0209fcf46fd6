"""Two-stage perceptual study: trial scheduling, response validation,
append-only persistence, and export for the statistics pipeline."""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from .geometry import (
    HalfCylinderRange,
    TargetPoint,
    fit_half_cylinder,
    sample_distractors,
    sample_test_targets,
)

STUDY_SCHEMA = "pointgen-study/1"
CONDITIONS = ("across", "side-by-side")


class StudyProtocolError(ValueError):
    """Response violates the study protocol (stage, range, or ordering)."""


class SessionComplete(RuntimeError):
    pass


@dataclass
class StudyConfig:
    models: list[str]
    pool: list[TargetPoint]
    naturalness_trials: int = 5
    accuracy_trials: int = 10
    distractor_range: HalfCylinderRange | None = None
    conditions: tuple[str, str] = CONDITIONS
    seed: int = 0

    def __post_init__(self) -> None:
        if not self.models:
            raise ValueError("need at least one model")
        if self.naturalness_trials < 1 or self.accuracy_trials < 1:
            raise ValueError("trials per model must be >= 1")
        if len(self.pool) < max(self.naturalness_trials, self.accuracy_trials):
            raise ValueError("candidate pool smaller than trials per model")
        if self.distractor_range is None:
            self.distractor_range = fit_half_cylinder([p.xyz for p in self.pool])

    @property
    def trials_per_participant(self) -> int:
        return len(self.models) * (self.naturalness_trials + self.accuracy_trials)


def load_study_config(path: str | Path) -> StudyConfig:
    data = json.loads(Path(path).read_text())
    if data.get("schema") != STUDY_SCHEMA:
        raise ValueError(f"unsupported study schema {data.get('schema')!r}")
    pool_spec = data["pool"]
    if pool_spec["mode"] == "explicit":
        pool = [TargetPoint(*p) for p in pool_spec["positions"]]
        rng = None
    elif pool_spec["mode"] == "cylinder":
        rng = HalfCylinderRange(
            height=tuple(pool_spec["height"]),
            arc=tuple(pool_spec["arc"]),
            radius=tuple(pool_spec["radius"]),
            anchor=np.asarray(pool_spec.get("anchor", [0, 0, 0]), dtype=float),
        )
        pool = sample_test_targets(rng, n=int(pool_spec.get("n", 100)),
                                   seed=int(data.get("seed", 0)))
    else:
        raise ValueError(f"unknown pool mode {pool_spec['mode']!r}")
    return StudyConfig(
        models=list(data["models"]),
        pool=pool,
        naturalness_trials=int(data.get("naturalness_trials", 5)),
        accuracy_trials=int(data.get("accuracy_trials", 10)),
        distractor_range=rng,
        seed=int(data.get("seed", 0)),
    )


@dataclass
class Trial:
    trial_id: str
    stage: int
    model: str
    position_index: int
    target: TargetPoint
    order_index: int
    condition: str | None = None
    distractors: tuple[TargetPoint, TargetPoint] | None = None
    candidate_order: list[TargetPoint] | None = None  # shuffled, stage 2
    target_slot: int | None = None                    # index of target within order

    def to_dict(self) -> dict:
        return {
            "trial_id": self.trial_id,
            "stage": self.stage,
            "model": self.model,
            "position_index": self.position_index,
            "target": list(self.target),
            "order_index": self.order_index,
            "condition": self.condition,
            "distractors": None if self.distractors is None
            else [list(d) for d in self.distractors],
            "candidate_order": None if self.candidate_order is None
            else [list(c) for c in self.candidate_order],
            "target_slot": self.target_slot,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Trial":
        return cls(
            trial_id=d["trial_id"],
            stage=d["stage"],
            model=d["model"],
            position_index=d["position_index"],
            target=TargetPoint(*d["target"]),
            order_index=d["order_index"],
            condition=d.get("condition"),
            distractors=None if d.get("distractors") is None
            else tuple(TargetPoint(*x) for x in d["distractors"]),
            candidate_order=None if d.get("candidate_order") is None
            else [TargetPoint(*x) for x in d["candidate_order"]],
            target_slot=d.get("target_slot"),
        )


@dataclass
class ResponseRecord:
    session_id: str
    trial_id: str
    rating: int | None = None
    choice: int | None = None
    motion_finished: bool = False
    latency: float = 0.0
    timestamp: float = field(default_factory=time.time)

    def to_dict(self) -> dict:
        return {"session_id": self.session_id, "trial_id": self.trial_id,
                "rating": self.rating, "choice": self.choice,
                "motion_finished": self.motion_finished,
                "latency": self.latency, "timestamp": self.timestamp}

    @classmethod
    def from_dict(cls, d: dict) -> "ResponseRecord":
        return cls(**d)


@dataclass
class StudySession:
    session_id: str
    participant_id: str
    trials: list[Trial]
    cursor: int = 0
    responses: dict[str, ResponseRecord] = field(default_factory=dict)
    audit: list[str] = field(default_factory=list)

    @property
    def complete(self) -> bool:
        return self.cursor >= len(self.trials)

    def to_dict(self) -> dict:
        return {"session_id": self.session_id,
                "participant_id": self.participant_id,
                "trials": [t.to_dict() for t in self.trials]}


def _session_rng(seed: int, participant_id: str) -> np.random.Generator:
    digest = hashlib.sha256(f"{seed}:{participant_id}".encode()).digest()
    return np.random.default_rng(int.from_bytes(digest[:8], "little"))


def create_session(config: StudyConfig, participant_id: str) -> StudySession:
    """Deterministic per-participant schedule.

    Positions are drawn once per stage and shared across all models; stage-1
    trials all precede stage-2; order within each stage is randomized; stage-2
    conditions are balanced half/half per model.
    """
    rng = _session_rng(config.seed, participant_id)
    pool_n = len(config.pool)
    stage1_pos = rng.choice(pool_n, size=config.naturalness_trials, replace=False)
    stage2_pos = rng.choice(pool_n, size=config.accuracy_trials, replace=False)

    distractors = {}
    for pi in stage2_pos:
        distractors[int(pi)] = sample_distractors(
            config.pool[int(pi)], config.distractor_range, rng)

    stage1 = [(m, int(pi)) for m in config.models for pi in stage1_pos]
    rng.shuffle(stage1)

    stage2 = []
    half = config.accuracy_trials // 2
    for m in config.models:
        conds = [config.conditions[0]] * half
        conds += [config.conditions[1]] * (config.accuracy_trials - half)
        rng.shuffle(conds)
        for pi, cond in zip(stage2_pos, conds):
            stage2.append((m, int(pi), cond))
    rng.shuffle(stage2)

    trials = []
    for k, (m, pi) in enumerate(stage1):
        trials.append(Trial(
            trial_id=f"s1-{k:03d}", stage=1, model=m, position_index=pi,
            target=config.pool[pi], order_index=k))
    for k, (m, pi, cond) in enumerate(stage2):
        d1, d2 = distractors[pi]
        candidates = [config.pool[pi], d1, d2]
        order = list(rng.permutation(3))
        shuffled = [candidates[i] for i in order]
        trials.append(Trial(
            trial_id=f"s2-{k:03d}", stage=2, model=m, position_index=pi,
            target=config.pool[pi], order_index=len(stage1) + k,
            condition=cond, distractors=(d1, d2),
            candidate_order=shuffled, target_slot=order.index(0)))

    session_id = hashlib.sha256(
        f"{config.seed}:{participant_id}:session".encode()).hexdigest()[:16]
    return StudySession(session_id=session_id, participant_id=participant_id,
                        trials=trials)


def next_trial(session: StudySession) -> Trial | None:
    """Trial at the cursor, or None when the session is complete."""
    if session.complete:
        return None
    return session.trials[session.cursor]


def submit_response(session: StudySession, record: ResponseRecord,
                    store: "StudyStore | None" = None) -> dict:
    """Validate and append a response; idempotent on duplicate trial ids
    (last-write-wins with an audit note)."""
    trials_by_id = {t.trial_id: t for t in session.trials}
    if record.trial_id not in trials_by_id:
        raise StudyProtocolError(f"unknown trial id {record.trial_id!r}")
    trial = trials_by_id[record.trial_id]

    duplicate = record.trial_id in session.responses
    current = next_trial(session)
    if not duplicate and (current is None or trial.trial_id != current.trial_id):
        raise StudyProtocolError(
            f"out-of-order response for {record.trial_id!r}; "
            f"expected {current.trial_id if current else 'none (complete)'}")

    if trial.stage == 1:
        if record.rating is None or record.choice is not None:
            raise StudyProtocolError("stage-1 response must carry a rating only")
        if record.rating not in (1, 2, 3, 4, 5):
            raise StudyProtocolError(f"rating {record.rating} outside 1..5")
    else:
        if record.choice is None or record.rating is not None:
            raise StudyProtocolError("stage-2 response must carry a choice only")
        if record.choice not in (0, 1, 2):
            raise StudyProtocolError(f"choice {record.choice} outside 0..2")
        if not record.motion_finished:
            raise StudyProtocolError(
                "stage-2 selection submitted before motion finished")

    session.responses[record.trial_id] = record
    if duplicate:
        session.audit.append(
            f"duplicate response for {record.trial_id}; last write wins")
    else:
        session.cursor += 1
    if store is not None:
        store.append(session.session_id,
                     {"type": "response", "record": record.to_dict(),
                      "duplicate": duplicate})
    return {"ok": True, "duplicate": duplicate, "cursor": session.cursor}


class StudyStore:
    """Append-only JSONL event log, one file per session."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    def _path(self, session_id: str) -> Path:
        return self.root / f"{session_id}.jsonl"

    def append(self, session_id: str, event: dict) -> None:
        with open(self._path(session_id), "a") as f:
            f.write(json.dumps(event) + "\n")

    def events(self, session_id: str) -> list[dict]:
        path = self._path(session_id)
        if not path.exists():
            return []
        out = []
        for line in path.read_text().splitlines():
            if not line.strip():
                continue
            try:
                out.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise ValueError(f"corrupt store entry in {path}: {exc}") from exc
        return out

    def session_ids(self) -> list[str]:
        return sorted(p.stem for p in self.root.glob("*.jsonl"))

    def record_session(self, session: StudySession) -> None:
        self.append(session.session_id,
                    {"type": "created", "session": session.to_dict()})

    def restore_session(self, session_id: str) -> StudySession:
        events = self.events(session_id)
        if not events or events[0].get("type") != "created":
            raise ValueError(f"no creation event for session {session_id}")
        data = events[0]["session"]
        session = StudySession(
            session_id=data["session_id"],
            participant_id=data["participant_id"],
            trials=[Trial.from_dict(t) for t in data["trials"]],
        )
        for ev in events[1:]:
            if ev.get("type") == "response":
                submit_response(session,
                                ResponseRecord.from_dict(ev["record"]))
        return session


def export_records(store: StudyStore) -> pd.DataFrame:
    """Flat (participant, model, stage, condition, value) rows for
    perceptual_stats; stage-2 value is choice correctness."""
    rows = []
    for sid in store.session_ids():
        session = store.restore_session(sid)
        trials_by_id = {t.trial_id: t for t in session.trials}
        for trial_id, record in session.responses.items():
            trial = trials_by_id[trial_id]
            if trial.stage == 1:
                value = float(record.rating)
            else:
                value = 1.0 if record.choice == trial.target_slot else 0.0
            rows.append({
                "participant": session.participant_id,
                "model": trial.model,
                "stage": trial.stage,
                "condition": trial.condition,
                "value": value,
                "session_id": sid,
                "trial_id": trial_id,
                "latency": record.latency,
                "complete": session.complete,
            })
    columns = ["participant", "model", "stage", "condition", "value",
               "session_id", "trial_id", "latency", "complete"]
    return pd.DataFrame(rows, columns=columns)
