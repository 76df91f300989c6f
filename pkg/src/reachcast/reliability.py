"""ICC(2,1) reliability: recorded-only baseline curves with subject
bootstrap, forecast-augmented points with repeat-based uncertainty, and
report rows (ICC@context / Best / delta).

The baseline curve reduces each subject to the first X valid trials in
sequence order; the forecast arm instead starts from the direction-balanced
context. Paired measurements put the reduced metric in column 1 and the
complete-trial reference in column 2.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import (
    AGG_MEDIAN,
    PARAMETERS,
    Cohort,
    DomainError,
    EvalConfig,
    SubjectRecord,
    Trial,
    validate_subject,
)
from .features import MODE_TRACE, aggregate, trial_feature_row
from .forecast import ForecastPool, direction_schedule, forecast, request_for, sample_pool
from .ingest import MissingDirectionError, select_context
from .rng import substream

log = logging.getLogger(__name__)


class TooFewSubjectsError(DomainError):
    pass


class DegenerateMatrixError(DomainError):
    pass


class InsufficientSubjectsError(DomainError):
    pass


class MissingBaselinePointError(DomainError):
    pass


@dataclass(frozen=True)
class PairedMeasurements:
    matrix: np.ndarray           # n subjects x k measurements
    parameter: str = ""
    units: str = ""

    def __post_init__(self):
        m = np.ascontiguousarray(self.matrix, dtype=np.float64)
        if m.ndim != 2 or m.shape[1] < 2:
            raise DomainError("matrix must be n x k with k >= 2")
        if m.shape[0] < 3:
            raise TooFewSubjectsError(f"need >= 3 subjects, got {m.shape[0]}")
        if not np.all(np.isfinite(m)):
            raise DegenerateMatrixError("matrix contains non-finite cells")
        object.__setattr__(self, "matrix", m)


@dataclass(frozen=True)
class CurvePoint:
    x: int
    icc: float
    ci_low: float
    ci_high: float


@dataclass(frozen=True)
class ReliabilityCurve:
    points: tuple[CurvePoint, ...]
    parameter: str
    cohort_label: str = ""
    protocol_label: str = ""

    def at(self, x: int) -> CurvePoint:
        for pt in self.points:
            if pt.x == x:
                return pt
        raise MissingBaselinePointError(f"no baseline point at X={x}")


@dataclass(frozen=True)
class AugmentedPoint:
    parameter: str
    context_size: int
    k: int
    mean_icc: float
    sd_icc: float
    forecaster_id: str


@dataclass(frozen=True)
class ReportRow:
    parameter: str
    cohort_label: str
    protocol_label: str
    forecaster_id: str
    context_size: int
    icc_at_context: float
    best_icc: float
    delta: float
    percent_change: float


def _icc_from_matrix(m: np.ndarray) -> float:
    n, k = m.shape
    grand = m.mean()
    row_means = m.mean(axis=1)
    col_means = m.mean(axis=0)
    msr = k * float(np.sum((row_means - grand) ** 2)) / (n - 1)
    msc = n * float(np.sum((col_means - grand) ** 2)) / (k - 1)
    resid = m - row_means[:, None] - col_means[None, :] + grand
    mse = float(np.sum(resid**2)) / ((n - 1) * (k - 1))
    denom = msr + (k - 1) * mse + (k / n) * (msc - mse)
    if denom == 0.0:
        return 0.0
    return (msr - mse) / denom


def icc_2_1(m: PairedMeasurements | np.ndarray) -> float:
    """Two-way random-effects, absolute-agreement, single-measurement ICC:
    (MSR - MSE) / (MSR + (k-1) MSE + (k/n)(MSC - MSE)); 0 when the
    denominator vanishes."""
    if not isinstance(m, PairedMeasurements):
        m = PairedMeasurements(np.asarray(m))
    return _icc_from_matrix(m.matrix)


def classify_icc(value: float) -> str:
    """Koo & Li bands; upper-boundary values take the better class."""
    if not math.isfinite(value):
        raise DomainError("ICC must be finite")
    if value < 0.50:
        return "poor"
    if value < 0.75:
        return "moderate"
    if value < 0.90:
        return "good"
    return "excellent"


def bootstrap_ci(
    pairs: np.ndarray, b: int, rng: np.random.Generator
) -> tuple[float, float]:
    """Percentile bootstrap over subjects (rows resampled with replacement):
    2.5/97.5 percentiles of the replicate ICCs, linear-interpolation
    percentile definition. Degenerate resamples contribute 0 by the ICC
    zero-denominator convention."""
    pairs = np.asarray(pairs, dtype=np.float64)
    n = pairs.shape[0]
    if n < 3:
        raise TooFewSubjectsError(f"need >= 3 subjects, got {n}")
    if b < 1:
        raise DomainError("B must be >= 1")
    replicates = np.empty(b)
    for i in range(b):
        idx = rng.integers(0, n, size=n)
        replicates[i] = _icc_from_matrix(pairs[idx])
    lo, hi = np.percentile(replicates, [2.5, 97.5], method="linear")
    return float(lo), float(hi)


def _subject_param_values(trials: list[Trial], mode: str = MODE_TRACE) -> dict:
    """parameter -> np.array of per-trial values (NaN where unavailable)."""
    rows = [trial_feature_row(t, mode) for t in trials]
    out = {}
    for p in PARAMETERS:
        out[p] = np.array(
            [math.nan if r.value(p) is None else r.value(p) for r in rows]
        )
    return out


def _agg(values: np.ndarray, how: str) -> float:
    usable = values[np.isfinite(values)]
    if usable.size == 0:
        return math.nan
    return aggregate(usable, how)


def baseline_curve(
    cohort: Cohort,
    parameter: str,
    counts: list[int],
    config: EvalConfig,
) -> ReliabilityCurve:
    """Recorded-only reliability: for each X, ICC between the first-X-trial
    metric and the complete-trial reference, with subject-bootstrap CI."""
    if parameter not in PARAMETERS:
        raise DomainError(f"unknown parameter {parameter!r}")
    counts = sorted(set(int(x) for x in counts))
    if not counts or counts[0] < 1:
        raise DomainError("counts must be positive")
    how = config.aggregation[parameter]
    admitted = [
        s for s in cohort.subjects if validate_subject(s, max(counts)).admitted
    ]
    if len(admitted) < 3:
        raise InsufficientSubjectsError(
            f"{len(admitted)} subjects with >= {max(counts)} valid trials"
        )
    per_subject = []
    for s in admitted:
        values = _subject_param_values(s.valid_trials())[parameter]
        reference = _agg(values, how)
        per_subject.append((values, reference))

    points = []
    for x in counts:
        pairs = np.array(
            [[_agg(values[:x], how), ref] for values, ref in per_subject]
        )
        keep = np.all(np.isfinite(pairs), axis=1)
        if keep.sum() < 3:
            raise InsufficientSubjectsError(
                f"X={x}: only {int(keep.sum())} subjects with finite metrics"
            )
        pairs = pairs[keep]
        icc = _icc_from_matrix(pairs)
        rng = substream(config.seed, "bootstrap", cohort.label, parameter, x)
        lo, hi = bootstrap_ci(pairs, config.bootstrap_b, rng)
        points.append(CurvePoint(x=x, icc=icc, ci_low=min(lo, icc), ci_high=max(hi, icc)))

    cohorts = sorted({s.cohort for s in admitted})
    protocols = sorted({s.protocol for s in admitted})
    return ReliabilityCurve(
        points=tuple(points),
        parameter=parameter,
        cohort_label=cohorts[0] if len(cohorts) == 1 else "mixed",
        protocol_label=protocols[0] if len(protocols) == 1 else "mixed",
    )


def _prepare_subject(record, forecaster, config, k_max):
    """Per-subject working set: context values, pool values, reference."""
    context, remainder = select_context(record, config.context_size)
    request = request_for(
        record,
        config.context_size,
        k_max=max(k_max, 1),
        pool_size=config.pool_size_m,
        seed=int(substream(config.seed, "forecast", record.subject_id).integers(0, 2**63 - 1)),
    )
    pool = forecast(forecaster, request)
    # schedule: the subject's own remaining-trial direction order, extended
    # cyclically when more forecasts than remaining trials are requested
    schedule = [t.direction for t in remainder] + direction_schedule(
        record.protocol, max(0, k_max - len(remainder))
    )
    context_vals = _subject_param_values(list(context))
    all_vals = _subject_param_values(record.valid_trials())
    reference = {p: _agg(all_vals[p], config.aggregation[p]) for p in PARAMETERS}
    trace_vals = {}
    for d, candidates in pool.pools.items():
        for trace in candidates:
            if id(trace) not in trace_vals:
                row = trial_feature_row(
                    Trial(trace=trace, direction=d, sequence_index=0), MODE_TRACE
                )
                trace_vals[id(trace)] = {
                    p: (math.nan if row.value(p) is None else row.value(p))
                    for p in PARAMETERS
                }
    return {
        "record": record,
        "pool": pool,
        "schedule": schedule,
        "context_vals": context_vals,
        "reference": reference,
        "trace_vals": trace_vals,
    }


def augmented_eval(
    cohort: Cohort, forecaster, config: EvalConfig
) -> list[AugmentedPoint]:
    """Forecast-augmented reliability: for each k, R repeated pool draws;
    each repeat recomputes the (context + k)-trial metric per subject and its
    ICC against the complete-trial reference. Points report mean +/- SD over
    repeats (k=0 is deterministic, SD exactly 0)."""
    c = config.context_size
    k_values = sorted(set(int(k) for k in config.forecast_counts))
    if any(k < 0 for k in k_values):
        raise DomainError("forecast counts must be >= 0")
    k_max = max(k_values)

    prepared = []
    for record in cohort.subjects:
        if not validate_subject(record, c).admitted:
            log.warning("subject %s excluded: insufficient trials", record.subject_id)
            continue
        try:
            prepared.append(_prepare_subject(record, forecaster, config, k_max))
        except (MissingDirectionError, DomainError) as e:
            log.warning("subject %s dropped from augmented eval: %s", record.subject_id, e)
    if len(prepared) < 3:
        raise InsufficientSubjectsError(f"{len(prepared)} usable subjects")

    points = []
    for parameter in PARAMETERS:
        how = config.aggregation[parameter]
        ref = np.array([s["reference"][parameter] for s in prepared])
        ctx = [s["context_vals"][parameter] for s in prepared]
        for k in k_values:
            iccs = []
            n_repeats = 1 if k == 0 else config.repeats_r
            for r in range(n_repeats):
                metrics = np.empty(len(prepared))
                for i, sub in enumerate(prepared):
                    if k == 0:
                        values = ctx[i]
                    else:
                        rng = substream(
                            config.seed, "draw", sub["record"].subject_id, k, r
                        )
                        drawn = sample_pool(
                            sub["pool"], k, sub["schedule"], rng, mode=config.sample_mode
                        )
                        extra = np.array(
                            [sub["trace_vals"][id(t.trace)][parameter] for t in drawn]
                        )
                        values = np.concatenate([ctx[i], extra])
                    metrics[i] = _agg(values, how)
                pairs = np.column_stack([metrics, ref])
                keep = np.all(np.isfinite(pairs), axis=1)
                if keep.sum() < 3:
                    iccs.append(math.nan)
                else:
                    iccs.append(_icc_from_matrix(pairs[keep]))
            arr = np.asarray(iccs)
            mean = float(np.mean(arr))
            sd = 0.0 if k == 0 else float(np.std(arr))
            points.append(
                AugmentedPoint(
                    parameter=parameter,
                    context_size=c,
                    k=k,
                    mean_icc=mean,
                    sd_icc=sd,
                    forecaster_id=getattr(forecaster, "model_id", "unknown"),
                )
            )
    return points


def delta_summary(
    baseline: ReliabilityCurve, points: list[AugmentedPoint]
) -> ReportRow:
    """Table row: ICC at the context size, best augmented ICC over k, the
    absolute change, and the percent change (negative deltas pass through)."""
    mine = [p for p in points if p.parameter == baseline.parameter]
    if not mine:
        raise DomainError(f"no augmented points for {baseline.parameter}")
    c = mine[0].context_size
    icc_at_c = baseline.at(c).icc
    best = max(p.mean_icc for p in mine)
    delta = best - icc_at_c
    percent = math.nan if icc_at_c == 0 else delta / icc_at_c
    return ReportRow(
        parameter=baseline.parameter,
        cohort_label=baseline.cohort_label,
        protocol_label=baseline.protocol_label,
        forecaster_id=mine[0].forecaster_id,
        context_size=c,
        icc_at_context=icc_at_c,
        best_icc=best,
        delta=delta,
        percent_change=percent,
    )


CURVE_HEADER = [
    "parameter", "cohort", "protocol", "x_or_k", "kind", "icc", "lo_or_sd", "hi", "forecaster",
]
REPORT_HEADER = [
    "parameter", "cohort", "protocol", "forecaster", "context",
    "icc_at_context", "best_icc", "delta", "percent_change",
]


def _fmt(v: float) -> str:
    return repr(float(v))


def write_curves_csv(path: str | Path, curves: list[ReliabilityCurve]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CURVE_HEADER)
        for curve in curves:
            for pt in curve.points:
                w.writerow(
                    [curve.parameter, curve.cohort_label, curve.protocol_label,
                     pt.x, "recorded", _fmt(pt.icc), _fmt(pt.ci_low), _fmt(pt.ci_high), ""]
                )


def write_points_csv(
    path: str | Path, labelled_points: list[tuple[str, str, AugmentedPoint]]
) -> None:
    """Rows of (cohort_label, protocol_label, point)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CURVE_HEADER)
        for cohort_label, protocol_label, pt in labelled_points:
            w.writerow(
                [pt.parameter, cohort_label, protocol_label, pt.k, "augmented",
                 _fmt(pt.mean_icc), _fmt(pt.sd_icc), "", pt.forecaster_id]
            )


def write_report_csv(path: str | Path, rows: list[ReportRow]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(REPORT_HEADER)
        for r in rows:
            w.writerow(
                [r.parameter, r.cohort_label, r.protocol_label, r.forecaster_id,
                 r.context_size, _fmt(r.icc_at_context), _fmt(r.best_icc),
                 _fmt(r.delta), _fmt(r.percent_change)]
            )
