"""Deterministic synthetic reach cohorts with known ground-truth latents.

Trials are built at 1 kHz as hold + latent reaction delay + minimum-jerk
pulse (optionally followed by a smaller corrective pulse), then pushed
through the standard windowing/resampling path so synthetic and ingested
data share one code path. Impairment in [0,1] inflates RT/MT, adds jitter,
and raises the corrective-pulse probability.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .core import Cohort, DomainError, SubjectRecord, Trial, PROTOCOL_MAX_TRIALS
from .ingest import RawTrialRecord, window_trial
from .rng import substream


@dataclass(frozen=True)
class SubjectProfile:
    """Subject-level latents the per-trial draws are centered on."""

    rt_mean_ms: float
    rt_sd_ms: float
    move_mean_ms: float
    move_sd_ms: float
    amplitude_m: float = 0.1    # 10 cm target distance
    posture_noise_sd: float = 0.004
    impairment: float = 0.0
    per_direction_gain: tuple[float, ...] = (1.0,) * 8

    def __post_init__(self):
        if not 0.0 <= self.impairment <= 1.0:
            raise DomainError("impairment must be in [0,1]")
        for name in ("rt_mean_ms", "rt_sd_ms", "move_mean_ms", "move_sd_ms", "amplitude_m"):
            if getattr(self, name) <= 0:
                raise DomainError(f"{name} must be positive")
        if self.posture_noise_sd < 0:
            raise DomainError("posture_noise_sd must be >= 0")
        if len(self.per_direction_gain) != 8 or any(
            g <= 0 for g in self.per_direction_gain
        ):
            raise DomainError("per_direction_gain needs 8 positive entries")


def minjerk_speed(t, distance_m: float = 1.0, duration_s: float = 1.0):
    """Speed of a minimum-jerk reach at normalized time t in [0,1]:
    (distance/duration) * 30 t^2 (1-t)^2. Zero at both endpoints, single
    peak of 1.875*distance/duration at t=0.5."""
    arr = np.asarray(t, dtype=np.float64)
    if np.any(arr < 0) or np.any(arr > 1):
        raise DomainError("t must lie in [0,1]")
    out = (distance_m / duration_s) * 30.0 * arr**2 * (1.0 - arr) ** 2
    return float(out) if np.isscalar(t) else out


# population hyper-parameters for profile sampling
POSTURE_NOISE_MEDIAN = 0.005   # lognormal median of the hold-noise sd (m/s)
POSTURE_NOISE_LOG_SD = 0.5
POSTURE_NOISE_IMPAIR = 0.02    # extra hold noise per unit impairment

# speeds idle around a drift pedestal proportional to the noise scale;
# zero noise still means a perfectly still hold
HOLD_PEDESTAL_RATIO = 1.75
TRIAL_NOISE_LOG_SD = 0.4       # per-trial wobble of the noise scale


def sample_profile(rng: np.random.Generator, impairment: float) -> SubjectProfile:
    """Population draw of a subject profile, inflated by impairment."""
    infl = 1.0 + 0.6 * impairment
    return SubjectProfile(
        rt_mean_ms=float(np.clip(rng.normal(320.0, 70.0), 180.0, 650.0) * infl),
        rt_sd_ms=float(max(15.0, rng.normal(90.0, 22.0)) * (1.0 + 0.8 * impairment)),
        move_mean_ms=float(np.clip(rng.normal(800.0, 130.0), 450.0, 1500.0) * infl),
        move_sd_ms=float(max(25.0, rng.normal(140.0, 30.0)) * (1.0 + 0.8 * impairment)),
        amplitude_m=0.1,
        posture_noise_sd=float(
            np.exp(rng.normal(np.log(POSTURE_NOISE_MEDIAN), POSTURE_NOISE_LOG_SD))
            + POSTURE_NOISE_IMPAIR * impairment * rng.uniform(0.5, 1.5)
        ),
        impairment=float(impairment),
        per_direction_gain=tuple(rng.uniform(0.85, 1.15, size=8)),
    )


def _direction_schedule(protocol: str, n_reach: int, rng: np.random.Generator) -> list[int]:
    """Reach-direction order. P1/P2: shuffled blocks of the 8 targets.
    P3: per round, shuffled target order with out/return pairs (codes
    target*2 and target*2+1), so every block of 8 covers all 8 codes."""
    dirs: list[int] = []
    while len(dirs) < n_reach:
        if protocol in ("P1", "P2"):
            dirs.extend(int(d) for d in rng.permutation(8))
        else:
            for t in rng.permutation(4):
                dirs.extend((int(t) * 2, int(t) * 2 + 1))
    return dirs[:n_reach]


def _reach_samples(
    profile: SubjectProfile, direction: int, rng: np.random.Generator
) -> tuple[np.ndarray, float, float]:
    """1 kHz speed samples plus the (rt, total movement time) latents."""
    imp = profile.impairment
    rt = max(100.0, rng.normal(profile.rt_mean_ms, profile.rt_sd_ms))
    t_main = max(180.0, rng.normal(profile.move_mean_ms, profile.move_sd_ms))
    t_corr = 0.0
    d_corr = 0.0
    if rng.random() < 0.5 * imp:
        t_corr = t_main * rng.uniform(0.35, 0.6)
        d_corr = profile.amplitude_m * rng.uniform(0.15, 0.35)
    gain = profile.per_direction_gain[direction] * max(
        0.3, rng.normal(1.0, 0.12 + 0.08 * imp)
    )
    trial_sd = profile.posture_noise_sd * np.exp(rng.normal(0.0, TRIAL_NOISE_LOG_SD))

    total_ms = 200.0 + rt + t_main + t_corr
    n = int(round(total_ms)) + 1
    t = np.arange(n, dtype=np.float64)

    # sensorimotor noise floor over the whole window: drift pedestal + tremor
    speed = np.zeros(n)
    if trial_sd > 0:
        speed += HOLD_PEDESTAL_RATIO * trial_sd + rng.normal(0.0, trial_sd, size=n)

    main = (t >= 200.0 + rt) & (t < 200.0 + rt + t_main)
    tau = (t[main] - 200.0 - rt) / t_main
    speed[main] += gain * minjerk_speed(tau, profile.amplitude_m, t_main / 1000.0)

    if t_corr > 0:
        corr = t >= 200.0 + rt + t_main
        tau2 = np.clip((t[corr] - 200.0 - rt - t_main) / t_corr, 0.0, 1.0)
        speed[corr] += minjerk_speed(tau2, d_corr, t_corr / 1000.0)

    np.clip(speed, 0.0, None, out=speed)
    return speed, rt, t_main + t_corr


def _catch_samples(
    profile: SubjectProfile, rng: np.random.Generator
) -> np.ndarray:
    dur = max(600.0, rng.normal(1100.0, 150.0))
    n = int(round(dur)) + 1
    trial_sd = profile.posture_noise_sd * np.exp(rng.normal(0.0, TRIAL_NOISE_LOG_SD))
    if trial_sd <= 0:
        return np.full(n, 1e-9)
    return np.clip(
        HOLD_PEDESTAL_RATIO * trial_sd + rng.normal(0.0, trial_sd, size=n), 0.0, None
    )


def gen_subject(
    profile: SubjectProfile,
    protocol: str,
    n_trials: int,
    rng_seed: int,
    subject_id: str = "synth-000",
    cohort: str = "control",
    n_catch: int = 4,
) -> SubjectRecord:
    """Deterministic subject: same arguments always give bitwise-equal output."""
    if n_trials > PROTOCOL_MAX_TRIALS[protocol]:
        raise DomainError(
            f"{n_trials} trials exceeds {protocol} max {PROTOCOL_MAX_TRIALS[protocol]}"
        )
    rng = substream(rng_seed, "subject-trials")
    n_catch = min(n_catch, max(0, n_trials - 8))
    n_reach = n_trials - n_catch
    catch_positions = set()
    if n_catch > 0:
        catch_positions = set(
            int(i) for i in rng.choice(np.arange(1, n_trials), size=n_catch, replace=False)
        )
    dirs = iter(_direction_schedule(protocol, n_reach, rng))

    trials = []
    for seq in range(n_trials):
        if seq in catch_positions:
            raw = RawTrialRecord(
                speed_samples=_catch_samples(profile, rng),
                target_on_ms=200.0,
                direction=0,
                is_catch=True,
            )
            trials.append(
                Trial(trace=window_trial(raw), direction=0, sequence_index=seq, is_catch=True)
            )
            continue
        direction = next(dirs)
        samples, rt, tmt = _reach_samples(profile, direction, rng)
        raw = RawTrialRecord(
            speed_samples=samples,
            target_on_ms=200.0,
            direction=direction,
            reaction_time_ms=rt,
            total_movement_time_ms=tmt,
        )
        trials.append(
            Trial(
                trace=window_trial(raw),
                direction=direction,
                sequence_index=seq,
                metadata_rt_ms=rt,
                metadata_mt_ms=tmt,
            )
        )
    return SubjectRecord(
        subject_id=subject_id, cohort=cohort, protocol=protocol, trials=tuple(trials)
    )


def gen_cohort(
    n_control: int,
    n_stroke: int,
    protocol_mix: str | Sequence[str] = "P2",
    seed: int = 0,
    label: str = "synthetic",
    profile_overrides: dict | None = None,
) -> Cohort:
    """Cohort with controls (impairment 0) and stroke subjects
    (impairment ~ U(0.2, 1.0)); protocols cycle through ``protocol_mix``.

    Each subject draws from its own seed substream, so generation is
    order-independent: hash(seed, cohort, index) names the stream.
    """
    if n_control < 0 or n_stroke < 0:
        raise DomainError("subject counts must be >= 0")
    protocols = [protocol_mix] if isinstance(protocol_mix, str) else list(protocol_mix)
    if not protocols:
        raise DomainError("protocol_mix must name at least one protocol")

    subjects = []
    specs = [("control", i) for i in range(n_control)] + [
        ("stroke", i) for i in range(n_stroke)
    ]
    for group, idx in specs:
        protocol = protocols[(idx if group == "control" else n_control + idx) % len(protocols)]
        rng = substream(seed, "profile", group, idx)
        impairment = 0.0 if group == "control" else float(rng.uniform(0.2, 1.0))
        profile = sample_profile(rng, impairment)
        if profile_overrides:
            profile = replace(profile, **profile_overrides)
        trial_seed = int(substream(seed, "trials", group, idx).integers(0, 2**63 - 1))
        subjects.append(
            gen_subject(
                profile,
                protocol,
                n_trials=PROTOCOL_MAX_TRIALS[protocol],
                rng_seed=trial_seed,
                subject_id=f"{group}-{idx:03d}",
                cohort=group,
            )
        )
    return Cohort(label=label, subjects=tuple(subjects))
