"""Raw-trace windowing, fixed-length resampling, context selection, loading.

Raw trials are anchored to the TARGET_ON event: the window starts 200 ms
before it and ends at TARGET_ON + ReactionTime + TotalMovementTime when both
log values are present, else at the end of the record. Every window is then
linearly resampled to 64 points.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import (
    N_DIRECTIONS,
    RECORDED,
    TRACE_LEN,
    Cohort,
    DomainError,
    SpeedTrace,
    SubjectRecord,
    Trial,
    check_direction,
)

log = logging.getLogger(__name__)

PRE_TARGET_MS = 200.0


class DegenerateWindowError(DomainError):
    """Window collapsed to zero or negative length."""


class TooShortError(DomainError):
    """Fewer than 2 samples available for interpolation."""


class MissingDirectionError(DomainError):
    """A direction code has no (or not enough) valid trials for the context."""


class ParseError(DomainError):
    """Malformed raw input file; message carries line/field detail."""


@dataclass(frozen=True)
class RawTrialRecord:
    """One trial as it comes out of the acquisition log (1 kHz by default)."""

    speed_samples: np.ndarray
    target_on_ms: float
    direction: int
    is_catch: bool = False
    reaction_time_ms: float | None = None
    total_movement_time_ms: float | None = None
    sample_rate_hz: float = 1000.0

    def __post_init__(self):
        arr = np.ascontiguousarray(self.speed_samples, dtype=np.float64)
        if arr.ndim != 1 or arr.size < 2:
            raise DomainError("raw trial needs >= 2 speed samples")
        object.__setattr__(self, "speed_samples", arr)
        check_direction(self.direction)
        if not 0 <= self.target_on_ms <= self.end_ms:
            raise DomainError("target_on_ms outside record span")

    @property
    def end_ms(self) -> float:
        """Time of the last sample."""
        return (self.speed_samples.size - 1) / self.sample_rate_hz * 1000.0


def extract_window(raw: RawTrialRecord) -> tuple[float, float]:
    """Window bounds (ms): TARGET_ON - 200 (clamped at 0) to TARGET_ON+RT+TMT,
    or to the end of the record when RT/TMT are not logged."""
    start_ms = max(0.0, raw.target_on_ms - PRE_TARGET_MS)
    if raw.reaction_time_ms is not None and raw.total_movement_time_ms is not None:
        stop_ms = raw.target_on_ms + raw.reaction_time_ms + raw.total_movement_time_ms
    else:
        stop_ms = raw.end_ms
    if stop_ms <= start_ms:
        raise DegenerateWindowError(f"window [{start_ms}, {stop_ms}] is degenerate")
    return start_ms, stop_ms


def resample_linear(samples: np.ndarray, length: int) -> np.ndarray:
    """Linear resampling to ``length`` points; sample i maps to source
    position i*(N-1)/(L-1), so endpoints are preserved exactly."""
    arr = np.asarray(samples, dtype=np.float64)
    if arr.size < 2:
        raise TooShortError(f"cannot resample {arr.size} samples")
    if length < 2:
        raise DomainError("target length must be >= 2")
    positions = np.linspace(0.0, arr.size - 1, length)
    return np.interp(positions, np.arange(arr.size), arr)


def window_trial(raw: RawTrialRecord) -> SpeedTrace:
    """Windowed, clamped, resampled trace for one raw trial."""
    start_ms, stop_ms = extract_window(raw)
    stop_ms = min(stop_ms, raw.end_ms)  # logs can overrun truncated records
    rate = raw.sample_rate_hz
    i0 = int(round(start_ms * rate / 1000.0))
    i1 = int(round(stop_ms * rate / 1000.0))
    i1 = min(i1, raw.speed_samples.size - 1)
    window = raw.speed_samples[i0 : i1 + 1]
    if window.size < 2:
        raise DegenerateWindowError(f"window [{start_ms}, {stop_ms}] has <2 samples")
    duration_ms = (window.size - 1) / rate * 1000.0
    resampled = np.clip(resample_linear(window, TRACE_LEN), 0.0, None)
    return SpeedTrace(
        samples=resampled,
        duration_ms=duration_ms,
        target_on_offset_ms=raw.target_on_ms - start_ms,
        provenance=RECORDED,
    )


def select_context(
    record: SubjectRecord, c: int
) -> tuple[list[Trial], list[Trial]]:
    """First ``c`` direction-balanced trials plus the remaining valid trials.

    c=8: the earliest valid trial of each of the 8 direction codes (for the
    4-target protocol that code space already flattens out/return pairs).
    c=16: the first two presentations per direction. Remainder keeps
    sequence order.
    """
    if c % N_DIRECTIONS != 0 or c <= 0:
        raise DomainError(f"context size {c} must be a positive multiple of 8")
    reps = c // N_DIRECTIONS
    valid = record.valid_trials()
    picked: list[Trial] = []
    taken_per_dir = {d: 0 for d in range(N_DIRECTIONS)}
    for trial in valid:
        if taken_per_dir[trial.direction] < reps:
            taken_per_dir[trial.direction] += 1
            picked.append(trial)
    short = [d for d, n in taken_per_dir.items() if n < reps]
    if short:
        raise MissingDirectionError(
            f"subject {record.subject_id}: directions {short} lack "
            f"{reps} valid trial(s)"
        )
    picked_ids = {id(t) for t in picked}
    remainder = [t for t in valid if id(t) not in picked_ids]
    return picked, remainder


_CSV_FIELDS = [
    "subject_id",
    "cohort",
    "protocol",
    "sequence_index",
    "direction",
    "is_catch",
    "target_on_ms",
    "reaction_time_ms",
    "total_movement_time_ms",
    "speed_samples",
]


def _parse_row(row: dict, line_no: int) -> tuple[str, str, str, Trial]:
    def bad(field: str, msg: str):
        return ParseError(f"line {line_no}, field {field!r}: {msg}")

    try:
        seq = int(row["sequence_index"])
        direction = int(row["direction"])
        is_catch = row["is_catch"].strip().lower() in ("1", "true", "yes")
        target_on = float(row["target_on_ms"])
    except (KeyError, ValueError) as e:
        raise bad("sequence_index/direction/is_catch/target_on_ms", str(e))

    def opt(field: str) -> float | None:
        s = row.get(field, "").strip()
        return float(s) if s else None

    try:
        rt = opt("reaction_time_ms")
        tmt = opt("total_movement_time_ms")
        samples = np.array(
            [float(x) for x in row["speed_samples"].split(";") if x.strip()],
            dtype=np.float64,
        )
    except ValueError as e:
        raise bad("speed_samples", str(e))
    if samples.size < 2:
        raise bad("speed_samples", f"{samples.size} samples")
    if not np.all(np.isfinite(samples)):
        raise bad("speed_samples", "non-finite sample")

    raw = RawTrialRecord(
        speed_samples=np.clip(samples, 0.0, None),
        target_on_ms=target_on,
        direction=direction,
        is_catch=is_catch,
        reaction_time_ms=rt,
        total_movement_time_ms=tmt,
    )
    trial = Trial(
        trace=window_trial(raw),
        direction=direction,
        sequence_index=seq,
        is_catch=is_catch,
        metadata_rt_ms=rt,
        metadata_mt_ms=tmt,
    )
    return row["subject_id"], row["cohort"], row["protocol"], trial


def ingest_raw(path: str | Path) -> Cohort:
    """Load a raw-trial CSV into a cohort; corrupt rows are dropped with a
    warning, file-level problems raise ParseError."""
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise ParseError(f"{path}: empty file")
        missing = [f for f in _CSV_FIELDS if f not in reader.fieldnames]
        if missing:
            raise ParseError(f"{path}: missing columns {missing}")
        per_subject: dict[str, dict] = {}
        n_rows = 0
        for line_no, row in enumerate(reader, start=2):
            n_rows += 1
            try:
                sid, cohort, protocol, trial = _parse_row(row, line_no)
            except (ParseError, DegenerateWindowError, DomainError) as e:
                log.warning("dropping trial at %s:%d: %s", path.name, line_no, e)
                continue
            entry = per_subject.setdefault(
                sid, {"cohort": cohort, "protocol": protocol, "trials": []}
            )
            entry["trials"].append(trial)
    if n_rows == 0:
        raise ParseError(f"{path}: no trial rows")
    subjects = tuple(
        SubjectRecord(
            subject_id=sid,
            cohort=entry["cohort"],
            protocol=entry["protocol"],
            trials=tuple(sorted(entry["trials"], key=lambda t: t.sequence_index)),
        )
        for sid, entry in per_subject.items()
    )
    return Cohort(label=path.stem, subjects=subjects)
