"""Per-trial kinematic parameters and subject-level aggregation.

Four parameters per trial: posture speed (median hold speed before
TARGET_ON), reaction time (TARGET_ON to movement onset), movement time
(onset to offset), max speed (peak between onset and offset). Onset/offset
come from a fixed threshold detector so recorded and forecasted trials pass
through the identical estimator; metadata mode instead trusts the
acquisition log's RT/MT.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .core import (
    AGG_MEAN,
    AGG_MEDIAN,
    PARAMETERS,
    Cohort,
    DomainError,
    SpeedTrace,
    SubjectRecord,
    Trial,
)

# Detector constants: absolute floor, fraction of post-target peak, and the
# number of consecutive samples a crossing must persist.
SPEED_FLOOR_MPS = 0.05
PEAK_FRACTION = 0.10
PERSISTENCE = 3

MODE_TRACE = "trace"
MODE_METADATA = "metadata"

_EPS = 1e-9


class NoMovementError(DomainError):
    """No sustained supra-threshold movement after TARGET_ON."""


class NoPostureSegmentError(DomainError):
    """target_on_offset_ms maps to zero samples; no hold segment to measure."""


class EmptyInputError(DomainError):
    pass


@dataclass(frozen=True)
class KstFeatures:
    posture_speed_mps: float
    reaction_time_ms: float
    movement_time_ms: float
    max_speed_mps: float
    onset_ms: float
    offset_ms: float
    detector_used: str

    def __post_init__(self):
        if self.offset_ms <= self.onset_ms:
            raise DomainError("offset must follow onset")
        for v in (
            self.posture_speed_mps,
            self.reaction_time_ms,
            self.movement_time_ms,
            self.max_speed_mps,
        ):
            if not (math.isfinite(v) and v >= 0):
                raise DomainError(f"feature value {v} must be a non-negative real")


@dataclass(frozen=True)
class TrialFeatureRow:
    """Per-trial values with None where a parameter could not be computed;
    flags record why (no_movement, no_posture_segment)."""

    posture_speed: float | None
    reaction_time: float | None
    movement_time: float | None
    max_speed: float | None
    onset_ms: float | None
    offset_ms: float | None
    flags: tuple[str, ...] = ()

    def value(self, parameter: str) -> float | None:
        return getattr(self, parameter)


@dataclass(frozen=True)
class SubjectSummary:
    values: dict
    n_trials_used: int
    aggregation: dict


def _posture_sample_count(trace: SpeedTrace) -> int:
    # samples strictly before TARGET_ON: i * dt < target_on_offset
    return int(np.ceil(trace.target_on_offset_ms / trace.dt_ms - _EPS))


def _first_post_target_index(trace: SpeedTrace) -> int:
    return int(np.ceil(trace.target_on_offset_ms / trace.dt_ms - _EPS))


def _first_run_at_or_above(x: np.ndarray, start: int, theta: float) -> int | None:
    ok = x >= theta
    for i in range(start, x.size - PERSISTENCE + 1):
        if ok[i : i + PERSISTENCE].all():
            return i
    return None


def _first_run_below(x: np.ndarray, start: int, theta: float) -> int | None:
    below = x < theta
    for i in range(start, x.size - PERSISTENCE + 1):
        if below[i : i + PERSISTENCE].all():
            return i
    return None


def detect_onset_offset(trace: SpeedTrace) -> tuple[float, float]:
    """Threshold detector: theta = max(0.05 m/s, 10% of post-target peak);
    onset is the first post-TARGET_ON sample at/above theta for 3 consecutive
    samples, offset the first sample after the post-onset peak below theta
    for 3 consecutive samples (trace end when it never re-crosses)."""
    x = trace.samples
    i0 = _first_post_target_index(trace)
    if i0 >= x.size:
        raise NoMovementError("no samples after TARGET_ON")
    theta = max(SPEED_FLOOR_MPS, PEAK_FRACTION * float(x[i0:].max()))
    onset = _first_run_at_or_above(x, i0, theta)
    if onset is None:
        raise NoMovementError(f"speed never sustains theta={theta:.4f}")
    peak = onset + int(np.argmax(x[onset:]))
    offset = _first_run_below(x, peak + 1, theta)
    if offset is None:
        offset = x.size - 1
    dt = trace.dt_ms
    return onset * dt, offset * dt


def _posture_speed(trace: SpeedTrace) -> float:
    n = _posture_sample_count(trace)
    if n <= 0:
        raise NoPostureSegmentError("no samples before TARGET_ON")
    return float(np.median(trace.samples[:n]))


def compute_features(trial: Trial, mode: str = MODE_TRACE) -> KstFeatures:
    """Strict per-trial extraction; raises NoPostureSegmentError /
    NoMovementError. Metadata mode passes the logged RT/MT through exactly."""
    trace = trial.trace
    posture = _posture_speed(trace)
    dt = trace.dt_ms
    ton = trace.target_on_offset_ms
    if mode == MODE_TRACE:
        onset_ms, offset_ms = detect_onset_offset(trace)
        rt = onset_ms - ton
        mt = offset_ms - onset_ms
    elif mode == MODE_METADATA:
        if trial.metadata_rt_ms is None or trial.metadata_mt_ms is None:
            raise DomainError("metadata mode requires logged RT and MT")
        rt = trial.metadata_rt_ms
        mt = trial.metadata_mt_ms
        onset_ms = ton + rt
        offset_ms = min(onset_ms + mt, trace.duration_ms)
    else:
        raise DomainError(f"unknown feature mode {mode!r}")
    i_on = int(np.ceil(onset_ms / dt - _EPS))
    i_off = min(int(np.floor(offset_ms / dt + _EPS)), trace.samples.size - 1)
    i_on = min(i_on, i_off)
    max_speed = float(trace.samples[i_on : i_off + 1].max())
    return KstFeatures(
        posture_speed_mps=posture,
        reaction_time_ms=rt,
        movement_time_ms=offset_ms - onset_ms if mode == MODE_METADATA else mt,
        max_speed_mps=max_speed,
        onset_ms=onset_ms,
        offset_ms=offset_ms,
        detector_used=mode,
    )


def trial_feature_row(trial: Trial, mode: str = MODE_TRACE) -> TrialFeatureRow:
    """Lenient extraction: a trial missing movement still contributes its
    posture speed, and vice versa."""
    flags: list[str] = []
    try:
        posture = _posture_speed(trial.trace)
    except NoPostureSegmentError:
        posture = None
        flags.append("no_posture_segment")
    rt = mt = ms = onset = offset = None
    try:
        if mode == MODE_TRACE:
            onset, offset = detect_onset_offset(trial.trace)
        else:
            if trial.metadata_rt_ms is None or trial.metadata_mt_ms is None:
                raise NoMovementError("no logged RT/MT")
            onset = trial.trace.target_on_offset_ms + trial.metadata_rt_ms
            offset = min(onset + trial.metadata_mt_ms, trial.trace.duration_ms)
        dt = trial.trace.dt_ms
        i_on = int(np.ceil(onset / dt - _EPS))
        i_off = min(int(np.floor(offset / dt + _EPS)), trial.trace.samples.size - 1)
        i_on = min(i_on, i_off)
        rt = onset - trial.trace.target_on_offset_ms
        mt = offset - onset
        ms = float(trial.trace.samples[i_on : i_off + 1].max())
    except NoMovementError:
        flags.append("no_movement")
    return TrialFeatureRow(
        posture_speed=posture,
        reaction_time=rt,
        movement_time=mt,
        max_speed=ms,
        onset_ms=onset,
        offset_ms=offset,
        flags=tuple(flags),
    )


def _as_row(item) -> TrialFeatureRow:
    if isinstance(item, TrialFeatureRow):
        return item
    if isinstance(item, KstFeatures):
        return TrialFeatureRow(
            posture_speed=item.posture_speed_mps,
            reaction_time=item.reaction_time_ms,
            movement_time=item.movement_time_ms,
            max_speed=item.max_speed_mps,
            onset_ms=item.onset_ms,
            offset_ms=item.offset_ms,
        )
    raise DomainError(f"cannot summarize {type(item).__name__}")


def aggregate(values: Sequence[float], how: str) -> float:
    if len(values) == 0:
        return math.nan
    if how == AGG_MEAN:
        return float(np.mean(values))
    if how == AGG_MEDIAN:
        return float(np.median(values))
    raise DomainError(f"unknown aggregator {how!r}")


def summarize_subject(features: Iterable, aggregation: dict | None = None) -> SubjectSummary:
    """Per-parameter aggregate (default median for all four) over the usable
    per-trial values; permutation-invariant in the input order."""
    rows = [_as_row(f) for f in features]
    if not rows:
        raise EmptyInputError("no feature rows to summarize")
    aggregation = aggregation or {p: AGG_MEDIAN for p in PARAMETERS}
    values = {}
    for p in PARAMETERS:
        usable = [r.value(p) for r in rows if r.value(p) is not None]
        values[p] = aggregate(usable, aggregation.get(p, AGG_MEDIAN))
    return SubjectSummary(values=values, n_trials_used=len(rows), aggregation=dict(aggregation))


def subject_metric(
    trials: Sequence[Trial], parameter: str, how: str = AGG_MEDIAN, mode: str = MODE_TRACE
) -> float:
    """Aggregate one parameter over a trial set (NaN when no trial yields it)."""
    usable = []
    for t in trials:
        v = trial_feature_row(t, mode).value(parameter)
        if v is not None:
            usable.append(v)
    return aggregate(usable, how)


def session_time(record: SubjectRecord, first_n: int | None = None) -> float:
    """Total recorded time in seconds: sum of trial durations (catch trials
    included), optionally restricted to the first ``first_n`` recorded trials."""
    if not record.trials:
        raise EmptyInputError(f"subject {record.subject_id} has no trials")
    recorded = [t for t in record.trials if t.trace.provenance.is_recorded]
    if first_n is not None:
        recorded = recorded[: max(0, first_n)]
    return sum(t.trace.duration_ms for t in recorded) / 1000.0


FEATURE_TABLE_HEADER = [
    "subject_id",
    "cohort",
    "protocol",
    "sequence_index",
    "provenance",
    "posture_speed",
    "reaction_time_ms",
    "movement_time_ms",
    "max_speed",
    "onset_ms",
    "offset_ms",
    "flags",
]


def write_feature_table(cohort: Cohort, path: str | Path, mode: str = MODE_TRACE) -> None:
    def fmt(v):
        return "" if v is None else repr(float(v))

    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(FEATURE_TABLE_HEADER)
        for s in cohort.subjects:
            for t in s.trials:
                if not t.is_valid:
                    continue
                row = trial_feature_row(t, mode)
                writer.writerow(
                    [
                        s.subject_id,
                        s.cohort,
                        s.protocol,
                        t.sequence_index,
                        t.trace.provenance.to_str(),
                        fmt(row.posture_speed),
                        fmt(row.reaction_time),
                        fmt(row.movement_time),
                        fmt(row.max_speed),
                        fmt(row.onset_ms),
                        fmt(row.offset_ms),
                        ";".join(row.flags),
                    ]
                )
