"""Command line: synth / run / session-times.

Exit codes: 0 ok, 2 input error, 3 forecaster error. All randomness flows
from the config seed through named substreams, so a rerun with the same
inputs produces byte-identical CSV outputs.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import shlex
import sys
import time
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .core import (
    Cohort,
    DomainError,
    EvalConfig,
    load_cohort,
    save_cohort,
    validate_subject,
    PARAMETERS,
)
from .features import session_time
from .forecast import (
    ArimaForecaster,
    ChildExitError,
    ExternalForecaster,
    ForecasterUnavailableError,
    ProtocolViolationError,
    ReplayOracleForecaster,
)
from .ingest import ParseError
from .reliability import (
    InsufficientSubjectsError,
    augmented_eval,
    baseline_curve,
    delta_summary,
    write_curves_csv,
    write_points_csv,
    write_report_csv,
)
from .synth import gen_cohort

log = logging.getLogger("reachcast")

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_FORECASTER = 3


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def cmd_synth(spec_path: str, out_path: str) -> int:
    try:
        spec = json.loads(Path(spec_path).read_text())
    except (OSError, json.JSONDecodeError) as e:
        print(f"error: cannot read generator spec {spec_path}: {e}", file=sys.stderr)
        return EXIT_INPUT
    try:
        cohort = gen_cohort(
            n_control=int(spec.get("n_control", 0)),
            n_stroke=int(spec.get("n_stroke", 0)),
            protocol_mix=spec.get("protocol", "P2"),
            seed=int(spec.get("seed", 0)),
            label=spec.get("label", Path(spec_path).stem),
            profile_overrides=spec.get("profile_overrides"),
        )
    except (DomainError, TypeError, ValueError) as e:
        print(f"error: bad generator spec: {e}", file=sys.stderr)
        return EXIT_INPUT
    save_cohort(cohort, out_path)
    n_trials = sum(len(s.trials) for s in cohort.subjects)
    print(f"wrote {out_path}: {len(cohort.subjects)} subjects, {n_trials} trials")
    return EXIT_OK


def _group_key(subject) -> tuple[str, str]:
    return subject.cohort, subject.protocol


def _derived_baseline_counts(config: EvalConfig, group: Cohort) -> list[int]:
    admitted = [s for s in group.subjects if validate_subject(s, config.context_size).admitted]
    full = min(len(s.valid_trials()) for s in admitted)
    counts = {min(config.context_size + k, full) for k in config.forecast_counts}
    counts.add(full)
    return sorted(counts)


def cmd_run(
    cohort_path: str,
    config_path: str,
    forecaster_spec: str,
    out_dir: str,
    external_cmd: list[str] | None = None,
    context: int | None = None,
) -> int:
    t_start = time.perf_counter()
    try:
        cohort = load_cohort(cohort_path)
        config_doc = json.loads(Path(config_path).read_text())
        config = EvalConfig.from_dict(config_doc)
    except (OSError, json.JSONDecodeError, KeyError, DomainError, ValueError) as e:
        print(f"error: cannot load inputs: {e}", file=sys.stderr)
        return EXIT_INPUT
    if context is not None:
        config = EvalConfig.from_dict({**config.to_dict(), "context_size": context})

    try:
        if forecaster_spec == "arima":
            forecaster = ArimaForecaster()
        elif forecaster_spec == "replay":
            forecaster = ReplayOracleForecaster(cohort)
        elif forecaster_spec == "external":
            if not external_cmd:
                print("error: --forecaster external requires --external-cmd", file=sys.stderr)
                return EXIT_INPUT
            if len(external_cmd) == 1 and " " in external_cmd[0]:
                external_cmd = shlex.split(external_cmd[0])
            forecaster = ExternalForecaster(external_cmd)
        else:
            print(f"error: unknown forecaster {forecaster_spec!r}", file=sys.stderr)
            return EXIT_INPUT
    except (ForecasterUnavailableError, ProtocolViolationError, ChildExitError, DomainError) as e:
        print(f"error: forecaster unavailable: {e}", file=sys.stderr)
        return EXIT_FORECASTER

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    durations: dict[str, float] = {}
    curves = []
    labelled_points = []
    report_rows = []
    try:
        groups = sorted({_group_key(s) for s in cohort.subjects})
        for cohort_label, protocol in groups:
            subjects = tuple(
                s for s in cohort.subjects if _group_key(s) == (cohort_label, protocol)
            )
            group = Cohort(label=f"{cohort.label}:{cohort_label}:{protocol}", subjects=subjects)
            t0 = time.perf_counter()
            try:
                counts = (
                    list(config.baseline_counts)
                    if config.baseline_counts
                    else _derived_baseline_counts(config, group)
                )
                group_curves = {
                    p: baseline_curve(group, p, counts, config) for p in PARAMETERS
                }
            except (InsufficientSubjectsError, DomainError, ValueError) as e:
                log.warning("group %s skipped: %s", group.label, e)
                continue
            durations[f"baseline:{group.label}"] = time.perf_counter() - t0
            t0 = time.perf_counter()
            points = augmented_eval(group, forecaster, config)
            durations[f"augmented:{group.label}"] = time.perf_counter() - t0
            curves.extend(group_curves.values())
            labelled_points.extend((cohort_label, protocol, pt) for pt in points)
            for p in PARAMETERS:
                report_rows.append(delta_summary(group_curves[p], points))
    except (ChildExitError, ProtocolViolationError) as e:
        print(f"error: forecaster failed: {e}", file=sys.stderr)
        return EXIT_FORECASTER
    finally:
        if hasattr(forecaster, "close"):
            forecaster.close()

    write_curves_csv(out / "curves.csv", curves)
    write_points_csv(out / "points.csv", labelled_points)
    write_report_csv(out / "report.csv", report_rows)

    manifest = {
        "tool": "reachcast",
        "version": __version__,
        "created_utc": datetime.now(timezone.utc).isoformat(),
        "seed": config.seed,
        "config": config.to_dict(),
        "forecaster": forecaster_spec,
        "external_cmd": external_cmd,
        "inputs": {
            str(cohort_path): _sha256(Path(cohort_path)),
            str(config_path): _sha256(Path(config_path)),
        },
        "outputs": ["curves.csv", "points.csv", "report.csv"],
        "stage_durations_s": {k: round(v, 3) for k, v in durations.items()},
        "total_duration_s": round(time.perf_counter() - t_start, 3),
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=1))
    print(f"wrote {out}/curves.csv,points.csv,report.csv,manifest.json "
          f"({len(report_rows)} report rows)")
    return EXIT_OK


def cmd_session_times(cohort_path: str, out_path: str) -> int:
    try:
        cohort = load_cohort(cohort_path)
    except (OSError, json.JSONDecodeError, KeyError, DomainError) as e:
        print(f"error: cannot load cohort: {e}", file=sys.stderr)
        return EXIT_INPUT
    rows = []
    for s in cohort.subjects:
        if not s.trials:
            log.warning("subject %s has no trials", s.subject_id)
            continue
        rows.append(
            (s.cohort, s.protocol, s.subject_id, session_time(s), session_time(s, 8))
        )
    with open(out_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["record", "cohort", "protocol", "subject_id", "scope", "seconds", "cum_fraction"])
        for cohort_label, protocol, sid, t_all, t_first8 in rows:
            w.writerow(["session", cohort_label, protocol, sid, "all", repr(t_all), ""])
            w.writerow(["session", cohort_label, protocol, sid, "first8", repr(t_first8), ""])
        groups = sorted({(r[0], r[1]) for r in rows})
        for cohort_label, protocol in groups:
            for scope, col in (("all", 3), ("first8", 4)):
                values = sorted(r[col] for r in rows if (r[0], r[1]) == (cohort_label, protocol))
                n = len(values)
                for i, v in enumerate(values):
                    w.writerow(
                        ["ecdf", cohort_label, protocol, "", scope, repr(v), repr((i + 1) / n)]
                    )
    if not rows:
        print("warning: empty cohort, wrote header only", file=sys.stderr)
    print(f"wrote {out_path}: {len(rows)} subjects")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="reachcast",
        description="Forecast-augmented reaching assessment pipeline",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_synth = sub.add_parser("synth", help="generate a synthetic cohort")
    p_synth.add_argument("--spec", required=True, help="generator spec JSON")
    p_synth.add_argument("--out", required=True, help="output cohort JSON")

    p_run = sub.add_parser("run", help="baseline + forecast-augmented reliability")
    p_run.add_argument("--cohort", required=True)
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--forecaster", required=True, choices=["arima", "replay", "external"])
    p_run.add_argument("--external-cmd", nargs=argparse.REMAINDER, default=None,
                       help="argv of the external forecaster (consumes the rest of the line)")
    p_run.add_argument("--out", required=True, help="output directory")
    p_run.add_argument("--context", type=int, choices=[8, 16], default=None)

    p_st = sub.add_parser("session-times", help="per-subject session durations and ECDF data")
    p_st.add_argument("--cohort", required=True)
    p_st.add_argument("--out", required=True)
    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    if args.command == "synth":
        return cmd_synth(args.spec, args.out)
    if args.command == "run":
        return cmd_run(
            args.cohort, args.config, args.forecaster, args.out,
            external_cmd=args.external_cmd, context=args.context,
        )
    if args.command == "session-times":
        return cmd_session_times(args.cohort, args.out)
    return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
