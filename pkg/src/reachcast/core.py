"""Shared domain types: traces, trials, subjects, cohorts, run configuration.

All types are immutable value objects; construction validates the trace and
record invariants so downstream code never re-checks them.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

TRACE_LEN = 64
N_DIRECTIONS = 8
RECORDED_TARGET_ON_MS = 200.0

COHORT_LABELS = ("control", "stroke")
PROTOCOLS = ("P1", "P2", "P3")
PROTOCOL_MAX_TRIALS = {"P1": 64, "P2": 64, "P3": 40}

PARAMETERS = ("posture_speed", "reaction_time", "movement_time", "max_speed")

AGG_MEAN = "mean"
AGG_MEDIAN = "median"


class DomainError(ValueError):
    """Base for invariant violations raised at construction or ingestion."""


def flatten_direction(target: int, phase: int) -> int:
    """4-target protocols: (target 0..3, phase 0=out/1=return) -> code 0..7."""
    if not (0 <= target <= 3 and phase in (0, 1)):
        raise DomainError(f"bad target/phase ({target},{phase})")
    return target * 2 + phase

def unflatten_direction(code: int) -> tuple[int, int]:
    check_direction(code)
    return code // 2, code % 2

def check_direction(code: int) -> int:
    if not isinstance(code, (int, np.integer)) or not 0 <= int(code) <= 7:
        raise DomainError(f"direction code {code!r} outside 0..7")
    return int(code)


@dataclass(frozen=True)
class Provenance:
    """Origin of a trace: recorded on the robot, or produced by a forecaster."""

    kind: str                      # "recorded" | "forecasted"
    model_id: str | None = None    # forecaster id for kind == "forecasted"

    def __post_init__(self):
        if self.kind not in ("recorded", "forecasted"):
            raise DomainError(f"bad provenance kind {self.kind!r}")
        if (self.kind == "forecasted") != (self.model_id is not None):
            raise DomainError("model_id must be set iff provenance is forecasted")

    @property
    def is_recorded(self) -> bool:
        return self.kind == "recorded"

    def to_str(self) -> str:
        return "recorded" if self.is_recorded else f"forecasted:{self.model_id}"

    @staticmethod
    def from_str(s: str) -> "Provenance":
        if s == "recorded":
            return RECORDED
        if s.startswith("forecasted:"):
            return Provenance("forecasted", s.split(":", 1)[1])
        raise DomainError(f"bad provenance string {s!r}")


RECORDED = Provenance("recorded")


@dataclass(frozen=True, eq=False)
class SpeedTrace:
    """Fixed-length resampled hand-speed trial.

    samples: exactly 64 non-negative finite speeds (m/s) spanning
    ``duration_ms`` of original time; ``target_on_offset_ms`` is the time
    from window start to TARGET_ON (200 ms for recorded trials).
    """

    samples: np.ndarray
    duration_ms: float
    target_on_offset_ms: float
    provenance: Provenance = RECORDED

    def __post_init__(self):
        arr = np.ascontiguousarray(self.samples, dtype=np.float64)
        if arr.shape != (TRACE_LEN,):
            raise DomainError(f"trace must have {TRACE_LEN} samples, got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise DomainError("trace contains non-finite samples")
        if np.any(arr < 0):
            raise DomainError("trace contains negative speeds")
        if not (math.isfinite(self.duration_ms) and self.duration_ms > 0):
            raise DomainError(f"bad duration_ms {self.duration_ms}")
        if not (0 <= self.target_on_offset_ms < self.duration_ms):
            raise DomainError(
                f"target_on_offset_ms {self.target_on_offset_ms} outside "
                f"[0, {self.duration_ms})"
            )
        arr.flags.writeable = False
        object.__setattr__(self, "samples", arr)

    @property
    def dt_ms(self) -> float:
        """Time step between consecutive resampled samples."""
        return self.duration_ms / (TRACE_LEN - 1)

    def __eq__(self, other):
        if not isinstance(other, SpeedTrace):
            return NotImplemented
        return (
            np.array_equal(self.samples, other.samples)
            and self.duration_ms == other.duration_ms
            and self.target_on_offset_ms == other.target_on_offset_ms
            and self.provenance == other.provenance
        )


@dataclass(frozen=True, eq=False)
class Trial:
    trace: SpeedTrace
    direction: int
    sequence_index: int
    is_catch: bool = False
    metadata_rt_ms: float | None = None
    metadata_mt_ms: float | None = None

    def __post_init__(self):
        check_direction(self.direction)
        if self.sequence_index < 0:
            raise DomainError("sequence_index must be >= 0")
        if not self.trace.provenance.is_recorded and (
            self.metadata_rt_ms is not None or self.metadata_mt_ms is not None
        ):
            raise DomainError("forecasted trials carry no acquisition metadata")
        for v in (self.metadata_rt_ms, self.metadata_mt_ms):
            if v is not None and not (math.isfinite(v) and v > 0):
                raise DomainError(f"metadata time {v} must be a positive real")

    @property
    def is_valid(self) -> bool:
        """Non-catch with a usable trace (finiteness is enforced at build)."""
        return not self.is_catch

    def __eq__(self, other):
        if not isinstance(other, Trial):
            return NotImplemented
        return (
            self.trace == other.trace
            and self.direction == other.direction
            and self.sequence_index == other.sequence_index
            and self.is_catch == other.is_catch
            and self.metadata_rt_ms == other.metadata_rt_ms
            and self.metadata_mt_ms == other.metadata_mt_ms
        )


@dataclass(frozen=True, eq=False)
class SubjectRecord:
    subject_id: str
    cohort: str
    protocol: str
    trials: tuple[Trial, ...]

    def __post_init__(self):
        if self.cohort not in COHORT_LABELS:
            raise DomainError(f"cohort {self.cohort!r} not in {COHORT_LABELS}")
        if self.protocol not in PROTOCOLS:
            raise DomainError(f"protocol {self.protocol!r} not in {PROTOCOLS}")
        trials = tuple(self.trials)
        object.__setattr__(self, "trials", trials)
        seqs = [t.sequence_index for t in trials]
        if seqs != sorted(seqs):
            raise DomainError("trials must be ordered by sequence_index")
        if len(set(seqs)) != len(seqs):
            raise DomainError("duplicate sequence_index")
        n_reach = sum(1 for t in trials if not t.is_catch)
        if n_reach > PROTOCOL_MAX_TRIALS[self.protocol]:
            raise DomainError(
                f"{n_reach} reach trials exceeds {self.protocol} max "
                f"{PROTOCOL_MAX_TRIALS[self.protocol]}"
            )

    def valid_trials(self) -> list[Trial]:
        return [t for t in self.trials if t.is_valid]

    def __eq__(self, other):
        if not isinstance(other, SubjectRecord):
            return NotImplemented
        return (
            self.subject_id == other.subject_id
            and self.cohort == other.cohort
            and self.protocol == other.protocol
            and self.trials == other.trials
        )


@dataclass(frozen=True, eq=False)
class Cohort:
    label: str
    subjects: tuple[SubjectRecord, ...]

    def __post_init__(self):
        subjects = tuple(self.subjects)
        object.__setattr__(self, "subjects", subjects)
        ids = [s.subject_id for s in subjects]
        if len(set(ids)) != len(ids):
            raise DomainError("duplicate subject_id in cohort")

    def __eq__(self, other):
        if not isinstance(other, Cohort):
            return NotImplemented
        return self.label == other.label and self.subjects == other.subjects


@dataclass(frozen=True)
class EvalConfig:
    """Knobs for the reliability evaluation (houses c, K, B, R, M, L symbols)."""

    context_size: int = 8                     # c
    forecast_counts: tuple[int, ...] = (0, 8, 16, 24, 32, 40, 48, 56)  # k grid
    bootstrap_b: int = 1000                   # B
    repeats_r: int = 50                       # R
    pool_size_m: int = 64                     # M
    seed: int = 0
    aggregation: dict = field(
        default_factory=lambda: {p: AGG_MEDIAN for p in PARAMETERS}
    )
    baseline_counts: tuple[int, ...] | None = None  # derived when None
    sample_mode: str = "hybrid"  # pool sampling: "hybrid" | "with"

    def __post_init__(self):
        if self.context_size not in (8, 16):
            raise DomainError("context_size must be 8 or 16")
        if any(k < 0 for k in self.forecast_counts):
            raise DomainError("forecast counts must be >= 0")
        if min(self.bootstrap_b, self.repeats_r, self.pool_size_m) < 1:
            raise DomainError("B, R, M must be >= 1")
        for p in PARAMETERS:
            if self.aggregation.get(p) not in (AGG_MEAN, AGG_MEDIAN):
                raise DomainError(f"aggregation for {p} must be mean or median")
        if self.sample_mode not in ("hybrid", "with"):
            raise DomainError("sample_mode must be 'hybrid' or 'with'")

    @staticmethod
    def from_dict(d: dict) -> "EvalConfig":
        kw = {}
        for key in ("context_size", "bootstrap_b", "repeats_r", "pool_size_m", "seed"):
            if key in d:
                kw[key] = int(d[key])
        if "forecast_counts" in d:
            kw["forecast_counts"] = tuple(int(k) for k in d["forecast_counts"])
        if "baseline_counts" in d and d["baseline_counts"] is not None:
            kw["baseline_counts"] = tuple(int(k) for k in d["baseline_counts"])
        if "aggregation" in d:
            agg = {p: AGG_MEDIAN for p in PARAMETERS}
            agg.update(d["aggregation"])
            kw["aggregation"] = agg
        if "sample_mode" in d:
            kw["sample_mode"] = d["sample_mode"]
        return EvalConfig(**kw)

    def to_dict(self) -> dict:
        return {
            "context_size": self.context_size,
            "forecast_counts": list(self.forecast_counts),
            "bootstrap_b": self.bootstrap_b,
            "repeats_r": self.repeats_r,
            "pool_size_m": self.pool_size_m,
            "seed": self.seed,
            "aggregation": dict(self.aggregation),
            "baseline_counts": (
                None if self.baseline_counts is None else list(self.baseline_counts)
            ),
            "sample_mode": self.sample_mode,
        }


@dataclass(frozen=True)
class ValidationResult:
    admitted: bool
    reason: str | None = None

    @staticmethod
    def ok() -> "ValidationResult":
        return ValidationResult(True)

    @staticmethod
    def excluded(reason: str) -> "ValidationResult":
        return ValidationResult(False, reason)


def validate_subject(record: SubjectRecord, min_trials: int) -> ValidationResult:
    """Admit a subject iff it has at least ``min_trials`` valid reach trials.

    Exclusion is a value, not an error; callers filter on ``admitted``.
    """
    if len(record.valid_trials()) < min_trials:
        return ValidationResult.excluded("insufficient_trials")
    return ValidationResult.ok()


# -- cohort JSON persistence -------------------------------------------------
# One document per cohort; floats keep full round-trip precision (json uses
# repr, which is shortest-round-trip in Python 3).

def _trial_to_obj(t: Trial) -> dict:
    obj = {
        "direction": t.direction,
        "sequence_index": t.sequence_index,
        "is_catch": t.is_catch,
        "duration_ms": t.trace.duration_ms,
        "target_on_offset_ms": t.trace.target_on_offset_ms,
        "provenance": t.trace.provenance.to_str(),
        "samples": [float(x) for x in t.trace.samples],
    }
    if t.metadata_rt_ms is not None:
        obj["metadata_rt_ms"] = t.metadata_rt_ms
    if t.metadata_mt_ms is not None:
        obj["metadata_mt_ms"] = t.metadata_mt_ms
    return obj


def _trial_from_obj(obj: dict) -> Trial:
    trace = SpeedTrace(
        samples=np.asarray(obj["samples"], dtype=np.float64),
        duration_ms=float(obj["duration_ms"]),
        target_on_offset_ms=float(obj["target_on_offset_ms"]),
        provenance=Provenance.from_str(obj["provenance"]),
    )
    return Trial(
        trace=trace,
        direction=int(obj["direction"]),
        sequence_index=int(obj["sequence_index"]),
        is_catch=bool(obj["is_catch"]),
        metadata_rt_ms=obj.get("metadata_rt_ms"),
        metadata_mt_ms=obj.get("metadata_mt_ms"),
    )


def cohort_to_json(cohort: Cohort) -> str:
    doc = {
        "label": cohort.label,
        "subjects": [
            {
                "subject_id": s.subject_id,
                "cohort": s.cohort,
                "protocol": s.protocol,
                "trials": [_trial_to_obj(t) for t in s.trials],
            }
            for s in cohort.subjects
        ],
    }
    return json.dumps(doc, indent=1)


def cohort_from_json(text: str) -> Cohort:
    doc = json.loads(text)
    subjects = tuple(
        SubjectRecord(
            subject_id=s["subject_id"],
            cohort=s["cohort"],
            protocol=s["protocol"],
            trials=tuple(_trial_from_obj(t) for t in s["trials"]),
        )
        for s in doc["subjects"]
    )
    return Cohort(label=doc["label"], subjects=subjects)


def save_cohort(cohort: Cohort, path: str | Path) -> None:
    Path(path).write_text(cohort_to_json(cohort))


def load_cohort(path: str | Path) -> Cohort:
    return cohort_from_json(Path(path).read_text())
