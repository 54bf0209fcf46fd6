"""Objective grid evaluation, the machine referee for the referential game,
and perceptual-study statistics."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path

import numpy as np
import pandas as pd

from .clips import MotionClip, clip_accuracy, hold_frames
from .density import KDEModel, kde_evaluate
from .geometry import TargetPoint
from .stats import (
    DegenerateDifferences,
    StatTestResult,
    holm_bonferroni,
    spearman,
    wilcoxon_signed_rank,
)


class NoHoldDetected(RuntimeError):
    """The gesture never steadies below the hold speed limit."""


def simulated_observer(clip: MotionClip, candidates) -> int:
    """Pick the candidate minimizing the mean elbow-hand alignment angle over
    hold-phase frames; exact ties go to the lower index."""
    if len(candidates) != 3:
        raise ValueError("need exactly 3 candidate positions")
    held = hold_frames(clip)
    if held.size == 0:
        raise NoHoldDetected("no hold phase detected in clip")
    elbow = clip.elbow_positions()[held]
    hand = clip.hand_positions()[held]
    v_eh = hand - elbow
    v_eh = v_eh / np.linalg.norm(v_eh, axis=1, keepdims=True)
    best = 0
    best_angle = np.inf
    for i, cand in enumerate(candidates):
        c = np.asarray(cand, dtype=float).reshape(3)
        v_hc = c[None, :] - hand
        v_hc = v_hc / np.linalg.norm(v_hc, axis=1, keepdims=True)
        angles = np.arccos(np.clip(np.sum(v_eh * v_hc, axis=1), -1.0, 1.0))
        mean_angle = float(angles.mean())
        if mean_angle < best_angle:
            best_angle = mean_angle
            best = i
    return best


@dataclass
class ModelSummary:
    mean: float
    q1: float
    median: float
    q3: float
    outliers: int
    no_hold: int
    failures: int


@dataclass
class EvalReport:
    """Per-model, per-grid-point normalized accuracy with density correlations."""

    grid: list[TargetPoint]
    densities: np.ndarray
    accuracies: dict[str, np.ndarray]          # normalized, 0 where no hold
    no_hold: dict[str, np.ndarray]             # bool mask
    failed: dict[str, np.ndarray]              # bool mask (rollout failure)
    summaries: dict[str, ModelSummary] = field(default_factory=dict)
    correlations: dict[str, StatTestResult] = field(default_factory=dict)


def _summary(acc: np.ndarray, no_hold: np.ndarray,
             failed: np.ndarray) -> ModelSummary:
    ok = acc[~failed]
    q1, med, q3 = np.percentile(ok, [25, 50, 75])
    iqr = q3 - q1
    outliers = int(np.sum((ok < q1 - 1.5 * iqr) | (ok > q3 + 1.5 * iqr)))
    return ModelSummary(mean=float(ok.mean()), q1=float(q1), median=float(med),
                        q3=float(q3), outliers=outliers,
                        no_hold=int(no_hold.sum()), failures=int(failed.sum()))


def objective_eval(models: dict, grid: list[TargetPoint],
                   kde: KDEModel, duration: float | None = None) -> EvalReport:
    """Generate a motion per model and grid point, score its hold-phase
    pointing accuracy, and correlate accuracy with training-target density.

    No-hold points enter summaries as accuracy 0 (flagged) and are excluded
    pairwise from correlations; rollout failures are excluded with a count.
    """
    from .training import generate_motion

    densities = kde_evaluate(kde, np.array([g.xyz for g in grid]))
    report = EvalReport(grid=grid, densities=densities, accuracies={},
                        no_hold={}, failed={})
    for name, model in models.items():
        n = len(grid)
        acc = np.zeros(n)
        no_hold = np.zeros(n, dtype=bool)
        failed = np.zeros(n, dtype=bool)
        for i, point in enumerate(grid):
            try:
                clip = generate_motion(model, point, duration)
                result = clip_accuracy(clip, target=point)
            except Exception:
                failed[i] = True
                continue
            acc[i] = result.normalized
            no_hold[i] = not result.hold_detected
        report.accuracies[name] = acc
        report.no_hold[name] = no_hold
        report.failed[name] = failed
        report.summaries[name] = _summary(acc, no_hold, failed)
        keep = ~(no_hold | failed)
        report.correlations[name] = spearman(acc[keep], densities[keep])
    return report


def export_eval_report(report: EvalReport, path: str | Path) -> None:
    path = Path(path)
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["model", "point", "x", "y", "z", "density",
                    "accuracy", "no_hold", "failed"])
        for name in report.accuracies:
            for i, g in enumerate(report.grid):
                w.writerow([name, i, g.x, g.y, g.z, report.densities[i],
                            report.accuracies[name][i],
                            int(report.no_hold[name][i]),
                            int(report.failed[name][i])])
    summary_path = path.with_suffix(".summary.txt")
    lines = ["model accuracy distributions (normalized):"]
    for name, s in report.summaries.items():
        lines.append(
            f"  {name}: mean={s.mean:.3f} q1={s.q1:.3f} median={s.median:.3f} "
            f"q3={s.q3:.3f} outliers={s.outliers} no_hold={s.no_hold} "
            f"failures={s.failures}")
    lines.append("accuracy vs training-density correlation (Spearman):")
    for name, c in report.correlations.items():
        lines.append(f"  {name}: r={c.statistic:.3f} p={c.p_value:.4g} n={c.n}")
    summary_path.write_text("\n".join(lines) + "\n")


# --- perceptual-study statistics ----------------------------------------------

@dataclass
class PerceptualStats:
    participant_means: pd.DataFrame   # participant x model means per measure
    model_means: pd.DataFrame         # per-model mean +- sd, split by condition
    pairwise: pd.DataFrame | None     # all model pairs with Wilcoxon + Holm
    tests_refused: str | None = None


def perceptual_stats(records, alpha: float = 0.01) -> PerceptualStats:
    """Aggregate study records participant-first, then across participants.

    ``records``: iterable of dicts (or a DataFrame) with columns participant,
    model, stage (1 = naturalness rating, 2 = referential choice correctness),
    condition, value.
    """
    df = records if isinstance(records, pd.DataFrame) else pd.DataFrame(records)
    required = {"participant", "model", "stage", "condition", "value"}
    if not required.issubset(df.columns):
        raise ValueError(f"records missing columns {required - set(df.columns)}")
    models = sorted(df["model"].unique())
    participants = sorted(df["participant"].unique())
    for p in participants:
        for m in models:
            for stage in (1, 2):
                sub = df[(df.participant == p) & (df.model == m)
                         & (df.stage == stage)]
                if sub.empty:
                    raise ValueError(
                        f"participant {p!r} has no stage-{stage} trials "
                        f"for model {m!r}")

    measure = df.stage.map({1: "mos", 2: "accuracy"})
    df = df.assign(measure=measure)
    pm = (df.groupby(["participant", "model", "measure"])["value"]
            .mean().unstack("measure").reset_index())

    rows = []
    for m in models:
        sub = pm[pm.model == m]
        row = {"model": m,
               "mos_mean": sub["mos"].mean(), "mos_sd": sub["mos"].std(ddof=1),
               "accuracy_mean": sub["accuracy"].mean(),
               "accuracy_sd": sub["accuracy"].std(ddof=1)}
        for cond in sorted(df[df.stage == 2]["condition"].unique()):
            cd = df[(df.model == m) & (df.stage == 2) & (df.condition == cond)]
            by_p = cd.groupby("participant")["value"].mean()
            row[f"accuracy_{cond}_mean"] = by_p.mean()
            row[f"accuracy_{cond}_sd"] = by_p.std(ddof=1)
        rows.append(row)
    model_means = pd.DataFrame(rows)

    if len(participants) < 2:
        return PerceptualStats(pm, model_means, None,
                               tests_refused="fewer than 2 participants")

    pair_rows = []
    for measure_name in ("mos", "accuracy"):
        for a, b in combinations(models, 2):
            va = pm[pm.model == a].set_index("participant")[measure_name]
            vb = pm[pm.model == b].set_index("participant")[measure_name]
            vb = vb.reindex(va.index)
            try:
                res = wilcoxon_signed_rank(va.values, vb.values)
                pair_rows.append({"measure": measure_name, "a": a, "b": b,
                                  "statistic": res.statistic,
                                  "p_value": res.p_value, "n": res.n})
            except DegenerateDifferences as exc:
                pair_rows.append({"measure": measure_name, "a": a, "b": b,
                                  "statistic": np.nan, "p_value": np.nan,
                                  "n": 0, "note": str(exc)})
    pairwise = pd.DataFrame(pair_rows)
    for measure_name in ("mos", "accuracy"):
        mask = (pairwise.measure == measure_name) & pairwise.p_value.notna()
        if mask.any():
            rej = holm_bonferroni(pairwise.loc[mask, "p_value"].values, alpha)
            pairwise.loc[mask, "significant"] = rej
    return PerceptualStats(pm, model_means, pairwise)
