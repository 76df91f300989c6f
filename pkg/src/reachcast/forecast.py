"""Forecaster hub: built-in ARIMA and replay-oracle forecasters, an
external-process forecaster speaking newline-delimited JSON (reachcast/1)
over its standard streams, and repeatable sampling from forecast pools.

Forecasted traces inherit duration and TARGET_ON offset from the subject's
context trials of the same direction (mean; all-context fallback), since a
64-sample forecast carries no time scale of its own.
"""

from __future__ import annotations

import json
import logging
import queue
import subprocess
import threading
from dataclasses import dataclass, field

import numpy as np

from . import arima
from .core import (
    N_DIRECTIONS,
    TRACE_LEN,
    DomainError,
    Provenance,
    SpeedTrace,
    SubjectRecord,
    Trial,
    check_direction,
)
from .ingest import select_context
from .rng import substream

log = logging.getLogger(__name__)

PROTOCOL = "reachcast/1"

SAMPLE_HYBRID = "hybrid"            # without replacement until exhausted, then with
SAMPLE_WITH_REPLACEMENT = "with"


class ForecasterUnavailableError(DomainError):
    pass


class ProtocolViolationError(DomainError):
    pass


class MalformedOutputError(DomainError):
    pass


class ChildExitError(DomainError):
    pass


class ForecastTimeoutError(DomainError):
    pass


class EmptyPoolError(DomainError):
    pass


@dataclass(frozen=True)
class ForecastRequest:
    subject_id: str
    context: tuple[SpeedTrace, ...]
    context_dirs: tuple[int, ...]
    targets: tuple[tuple[int, int], ...]   # (direction, count) in schedule order
    pool_size: int
    seed: int

    def __post_init__(self):
        if not self.context or len(self.context) != len(self.context_dirs):
            raise DomainError("context traces and direction codes must align")
        for d in self.context_dirs:
            check_direction(d)
        if not self.targets:
            raise DomainError("at least one target direction required")
        for d, count in self.targets:
            check_direction(d)
            if count < 1:
                raise DomainError("target counts must be >= 1")
        if self.pool_size < 1:
            raise DomainError("pool_size must be >= 1")


@dataclass(frozen=True)
class ForecastPool:
    """Per-direction candidate traces produced by one forecaster call."""

    pools: dict
    model_id: str

    def candidates(self, direction: int) -> list[SpeedTrace]:
        return self.pools.get(direction, [])

    def sizes(self) -> dict:
        return {d: len(v) for d, v in self.pools.items()}


def request_for(record: SubjectRecord, c: int, k_max: int, pool_size: int, seed: int) -> ForecastRequest:
    """Standard request: direction-balanced context and per-direction trial
    counts covering k_max forecasted trials."""
    context, _ = select_context(record, c)
    per_dir = max(1, -(-k_max // N_DIRECTIONS))  # ceil; >=1 so pools are never empty
    return ForecastRequest(
        subject_id=record.subject_id,
        context=tuple(t.trace for t in context),
        context_dirs=tuple(t.direction for t in context),
        targets=tuple((d, per_dir) for d in range(N_DIRECTIONS)),
        pool_size=pool_size,
        seed=seed,
    )


def direction_schedule(protocol: str, n: int, directions: tuple[int, ...] | None = None) -> list[int]:
    """Balanced forecast-trial schedule: cycles the 8 direction codes (for
    the 4-target protocol this is exactly out/return alternation)."""
    dirs = directions if directions is not None else tuple(range(N_DIRECTIONS))
    return [dirs[i % len(dirs)] for i in range(n)]


def _context_time_stats(request: ForecastRequest) -> dict:
    """direction -> (duration_ms, target_on_offset_ms) from context means."""
    overall_dur = float(np.mean([t.duration_ms for t in request.context]))
    overall_ton = float(np.mean([t.target_on_offset_ms for t in request.context]))
    stats = {}
    for d in range(N_DIRECTIONS):
        matching = [t for t, cd in zip(request.context, request.context_dirs) if cd == d]
        if matching:
            stats[d] = (
                float(np.mean([t.duration_ms for t in matching])),
                float(np.mean([t.target_on_offset_ms for t in matching])),
            )
        else:
            stats[d] = (overall_dur, overall_ton)
    return stats


def _expand_targets(targets: tuple[tuple[int, int], ...]) -> list[int]:
    """Round-robin expansion of (direction, count) pairs into a slot list."""
    remaining = [list(t) for t in targets]
    slots: list[int] = []
    while True:
        progressed = False
        for entry in remaining:
            if entry[1] > 0:
                slots.append(entry[0])
                entry[1] -= 1
                progressed = True
        if not progressed:
            return slots


class ArimaForecaster:
    """Direction-agnostic statistical baseline: fits one ARIMA on the
    concatenated context signal and partitions simulated continuation paths
    into synthetic trials; direction labels come from the schedule.

    Like recorded trials, each segment inherits its time scale and TARGET_ON
    offset from the subject's context trials of the matching direction.
    """

    model_id = "arima"

    def forecast(self, request: ForecastRequest) -> ForecastPool:
        series = np.concatenate([t.samples for t in request.context])
        order = arima.select_order(series)
        model = arima.fit(series, order)
        slots = _expand_targets(request.targets)
        k_total = len(slots)
        stats = _context_time_stats(request)
        durations = [stats[d][0] for d in slots]
        offsets = [stats[d][1] for d in slots]
        rng = substream(request.seed, "arima-paths", request.subject_id)
        paths = arima.simulate_paths(model, h=TRACE_LEN * k_total, n_paths=request.pool_size, rng=rng)
        pools: dict[int, list[SpeedTrace]] = {d: [] for d, _ in request.targets}
        for path in paths:
            traces = arima.paths_to_trials(
                path, k_total, duration_ms=np.asarray(durations),
                target_on_offset_ms=np.asarray(offsets), model_id=self.model_id,
            )
            for slot_dir, trace in zip(slots, traces):
                pools[slot_dir].append(trace)
        return ForecastPool(pools=pools, model_id=self.model_id)


class ReplayOracleForecaster:
    """Test double: 'forecasts' are the subject's actual held-out trials."""

    model_id = "replay"

    def __init__(self, cohort):
        self._records = {s.subject_id: s for s in cohort.subjects}

    def forecast(self, request: ForecastRequest) -> ForecastPool:
        record = self._records.get(request.subject_id)
        if record is None:
            raise ForecasterUnavailableError(f"unknown subject {request.subject_id}")
        _, remainder = select_context(record, len(request.context))
        pools: dict[int, list[SpeedTrace]] = {d: [] for d, _ in request.targets}
        for trial in remainder:
            if trial.direction in pools:
                pools[trial.direction].append(trial.trace)
        return ForecastPool(pools=pools, model_id=self.model_id)


class _StreamReader:
    """Background line reader so protocol reads can time out."""

    def __init__(self, stream):
        self._queue: queue.Queue = queue.Queue()
        self._thread = threading.Thread(target=self._pump, args=(stream,), daemon=True)
        self._thread.start()

    def _pump(self, stream):
        for line in stream:
            self._queue.put(line)
        self._queue.put(None)  # EOF marker

    def read_line(self, timeout: float):
        try:
            return self._queue.get(timeout=timeout)
        except queue.Empty:
            raise ForecastTimeoutError(f"no response within {timeout} s")


class ExternalForecaster:
    """Child-process forecaster speaking reachcast/1: one handshake line,
    then strictly one JSON request line -> one JSON response line."""

    def __init__(self, argv: list[str], timeout_s: float = 60.0, model_id: str = "external"):
        self.model_id = model_id
        self._timeout = timeout_s
        self._next_id = 0
        try:
            self._proc = subprocess.Popen(
                argv,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                stderr=subprocess.PIPE,
                text=True,
            )
        except OSError as e:
            raise ForecasterUnavailableError(f"cannot start {argv!r}: {e}")
        self._stdout = _StreamReader(self._proc.stdout)
        self._stderr_lines: list[str] = []
        self._stderr_thread = threading.Thread(
            target=self._collect_stderr, daemon=True
        )
        self._stderr_thread.start()
        self._handshake()

    def _collect_stderr(self):
        for line in self._proc.stderr:
            self._stderr_lines.append(line.rstrip("\n"))
            del self._stderr_lines[:-20]

    def _diag(self) -> str:
        return " | ".join(self._stderr_lines[-5:])

    def _read_json_line(self) -> dict:
        line = self._stdout.read_line(self._timeout)
        if line is None:
            code = self._proc.poll()
            raise ChildExitError(f"forecaster exited (code={code}): {self._diag()}")
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as e:
            raise ProtocolViolationError(f"non-JSON line from forecaster: {e}")
        if not isinstance(obj, dict):
            raise ProtocolViolationError("protocol messages must be JSON objects")
        return obj

    def _handshake(self):
        try:
            hello = self._read_json_line()
        except ChildExitError:
            raise
        if hello.get("protocol") != PROTOCOL:
            self.close()
            raise ProtocolViolationError(
                f"handshake advertises {hello.get('protocol')!r}, expected {PROTOCOL!r}"
            )
        self.capabilities = hello.get("capabilities", [])

    def forecast(self, request: ForecastRequest) -> ForecastPool:
        self._next_id += 1
        req_id = self._next_id
        wire = {
            "id": req_id,
            "subject_id": request.subject_id,
            "context": [[float(x) for x in t.samples] for t in request.context],
            "context_dirs": [int(d) for d in request.context_dirs],
            "targets": [{"dir": int(d), "count": int(c)} for d, c in request.targets],
            "pool_size": int(request.pool_size),
            "seed": int(request.seed),
        }
        try:
            self._proc.stdin.write(json.dumps(wire) + "\n")
            self._proc.stdin.flush()
        except (BrokenPipeError, OSError):
            raise ChildExitError(f"forecaster stdin closed: {self._diag()}")
        reply = self._read_json_line()
        if reply.get("id") != req_id:
            raise ProtocolViolationError(
                f"response id {reply.get('id')!r} does not match request {req_id}"
            )
        if "error" in reply:
            raise MalformedOutputError(f"forecaster error: {reply['error']}")
        pools_obj = reply.get("pools")
        if not isinstance(pools_obj, dict):
            raise ProtocolViolationError("response lacks a pools object")
        stats = _context_time_stats(request)
        pools: dict[int, list[SpeedTrace]] = {}
        for key, arrays in pools_obj.items():
            try:
                direction = check_direction(int(key))
            except (ValueError, DomainError):
                raise ProtocolViolationError(f"bad direction key {key!r}")
            duration, ton = stats[direction]
            traces = []
            for arr in arrays:
                samples = np.asarray(arr, dtype=np.float64)
                if samples.shape != (TRACE_LEN,):
                    raise MalformedOutputError(
                        f"direction {direction}: got {samples.shape} samples, want {TRACE_LEN}"
                    )
                if not np.all(np.isfinite(samples)):
                    raise MalformedOutputError(f"direction {direction}: non-finite sample")
                traces.append(
                    SpeedTrace(
                        samples=np.clip(samples, 0.0, None),
                        duration_ms=duration,
                        target_on_offset_ms=ton,
                        provenance=Provenance("forecasted", self.model_id),
                    )
                )
            pools[direction] = traces
        return ForecastPool(pools=pools, model_id=self.model_id)

    def close(self):
        if self._proc.poll() is None:
            try:
                self._proc.stdin.close()
            except OSError:
                pass
            try:
                self._proc.wait(timeout=5)
            except subprocess.TimeoutExpired:
                self._proc.kill()
                self._proc.wait()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def forecast(forecaster, request: ForecastRequest) -> ForecastPool:
    """Run a forecaster and validate its pool against the request:
    every requested direction needs at least one valid 64-sample trace."""
    pool = forecaster.forecast(request)
    for direction, _ in request.targets:
        candidates = pool.candidates(direction)
        if not candidates:
            raise MalformedOutputError(
                f"{pool.model_id}: no candidates for direction {direction}"
            )
        for trace in candidates:
            if trace.samples.shape != (TRACE_LEN,):
                raise MalformedOutputError(f"{pool.model_id}: wrong trace length")
    return pool


def sample_pool(
    pool: ForecastPool,
    k: int,
    schedule: list[int],
    rng: np.random.Generator,
    start_index: int = 0,
    mode: str = SAMPLE_HYBRID,
) -> list[Trial]:
    """Draw k forecast trials following the direction schedule. Within a
    direction, candidates are used without replacement while any remain,
    then with replacement (mode="with" always draws with replacement)."""
    if k == 0:
        return []
    if len(schedule) < k:
        raise DomainError(f"schedule of {len(schedule)} cannot cover k={k}")
    needed = sorted(set(schedule[:k]))
    orders: dict[int, list[int]] = {}
    for d in needed:
        candidates = pool.candidates(d)
        if not candidates:
            raise EmptyPoolError(f"no pool candidates for direction {d}")
        orders[d] = list(rng.permutation(len(candidates)))
    trials = []
    for i, d in enumerate(schedule[:k]):
        candidates = pool.candidates(d)
        if mode == SAMPLE_HYBRID and orders[d]:
            idx = orders[d].pop(0)
        else:
            idx = int(rng.integers(0, len(candidates)))
        trials.append(
            Trial(
                trace=candidates[idx],
                direction=d,
                sequence_index=start_index + i,
                is_catch=False,
            )
        )
    return trials
