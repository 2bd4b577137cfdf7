"""Command-line front end.

Subcommands:

* ``estimate``: one-shot localization from a measurement file
  (``x y azimuth`` per line in 2-D, ``x y z azimuth elevation`` in 3-D).
* ``campaign``: run Monte Carlo scenarios from a preset or a TOML config,
  emit a CSV table and an aligned summary.
* ``bench``: median wall time of the estimators over an n sweep.

Exit codes: 0 success, 2 input error, 3 numerical/geometry error,
4 threshold failure in ``--check`` mode.  The environment variable
``AOA_SEED`` overrides every scenario's base seed.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import os
import sys
import time
from dataclasses import replace

import numpy as np

from .config import ConfigError, parse_config
from .errors import EstimationError
from .estim2d import build_regression, pls, two_step_2d
from .estim3d import pls_3d, two_step_3d
from .crlb import rcrlb_2d, rcrlb_3d
from .harness import (
    CampaignResult,
    McCell,
    Scenario,
    materialize_array,
    run_campaign,
    run_estimator,
)
from .model import MeasurementSet, NoiseModel, SensorArray, synthesize_measurements
from .presets import PRESETS, check_cells, get_preset
from .seeding import derive_run_seed

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERIC = 3
EXIT_CHECK = 4

CSV_COLUMNS = ("scenario", "n", "estimator", "bias", "rmse", "rcrlb", "runs", "failures", "seed")


class InputError(Exception):
    """User input problem (file format, flags); maps to exit code 2."""


def read_measurement_file(path: str, degrees: bool = False):
    """Parse a sensors+measurements file into (SensorArray, MeasurementSet).

    Lines starting with '#' and blank lines are skipped; fields are
    whitespace-separated.  All rows must have the same arity: 3 fields for
    2-D, 5 for 3-D.
    """
    rows: list[tuple[int, list[float]]] = []
    arity = None
    try:
        handle = open(path, "r", encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot open {path}: {exc}") from exc
    with handle:
        for lineno, line in enumerate(handle, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            fields = stripped.split()
            if len(fields) not in (3, 5):
                raise InputError(
                    f"{path}:{lineno}: expected 3 fields (2-D) or 5 fields (3-D), got {len(fields)}"
                )
            if arity is None:
                arity = len(fields)
            elif len(fields) != arity:
                raise InputError(
                    f"{path}:{lineno}: row has {len(fields)} fields, earlier rows had {arity}"
                )
            values = []
            for col, field in enumerate(fields, start=1):
                try:
                    values.append(float(field))
                except ValueError as exc:
                    raise InputError(
                        f"{path}:{lineno}: column {col}: not a number: {field!r}"
                    ) from exc
            rows.append((lineno, values))
    if len(rows) < 3:
        raise InputError(f"{path}: need at least 3 measurement rows, got {len(rows)}")
    data = np.array([v for _, v in rows])
    scale = math.pi / 180.0 if degrees else 1.0
    if arity == 3:
        array = SensorArray(positions=data[:, :2])
        meas = MeasurementSet(azimuths=scale * data[:, 2])
    else:
        array = SensorArray(positions=data[:, :3])
        meas = MeasurementSet(
            azimuths=scale * data[:, 3], elevations=scale * data[:, 4]
        )
    return array, meas


def _fmt(value: float) -> str:
    return format(value, ".12g")


def cmd_estimate(args) -> int:
    array, meas = read_measurement_file(args.input, degrees=args.degrees)
    if meas.dim == 3 and (args.sigma_a is None) != (args.sigma_e is None):
        raise InputError("give both --sigma-a and --sigma-e, or neither")
    noise = NoiseModel(sigma_a=args.sigma_a, sigma_e=args.sigma_e)
    lines = [f"file: {args.input}", f"dim: {meas.dim}", f"n: {array.n}"]
    if args.estimator == "pls":
        est = pls(build_regression(array, meas)) if meas.dim == 2 else pls_3d(array, meas)
    elif meas.dim == 2:
        est = two_step_2d(array, meas, noise, gn_iters=args.gn_iters)
    else:
        est = two_step_3d(array, meas, noise, gn_iters=args.gn_iters)
    lines.append(f"method: {est.method}")
    lines.append("estimate: " + " ".join(_fmt(v) for v in est.p_hat))
    source = "known" if args.sigma_a is not None else "estimated"
    if est.v_sin_a is not None:
        lines.append(f"v_sin_a: {_fmt(est.v_sin_a)} ({source})")
    if est.v_sin_e is not None:
        lines.append(f"v_sin_e: {_fmt(est.v_sin_e)} ({source})")
    for key in sorted(est.diagnostics):
        lines.append(f"{key}: {est.diagnostics[key]}")
    if args.sigma_a is not None and args.sigma_a > 0:
        # Fisher information needs the (unknown) true source; evaluate at the
        # estimate, which is the standard plug-in benchmark for a report.
        try:
            if meas.dim == 2:
                bound = rcrlb_2d(array, est.p_hat, args.sigma_a)
            else:
                bound = rcrlb_3d(array, est.p_hat, args.sigma_a, args.sigma_e)
            lines.append(f"rcrlb_at_estimate: {_fmt(bound)}")
        except EstimationError:
            lines.append("rcrlb_at_estimate: unavailable (singular geometry)")
    print("\n".join(lines))
    return EXIT_OK


def _cell_row(cell: McCell) -> list[str]:
    return [
        cell.scenario,
        str(cell.n),
        cell.estimator,
        _fmt(cell.bias),
        _fmt(cell.rmse),
        "" if cell.rcrlb is None else _fmt(cell.rcrlb),
        str(cell.runs_completed),
        str(cell.runs_failed),
        str(cell.base_seed),
    ]


def cells_to_csv(cells: list[McCell]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for cell in cells:
        writer.writerow(_cell_row(cell))
    return buf.getvalue()


def runs_to_csv(result: CampaignResult) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(
        ("scenario", "n", "estimator", "run", "seed", "est_x", "est_y", "est_z")
    )
    for rec in result.runs or []:
        coords = ["", "", ""]
        if rec.estimate is not None:
            for i, v in enumerate(rec.estimate):
                coords[i] = _fmt(v)
        writer.writerow(
            (rec.scenario, rec.n, rec.estimator, rec.run_index, rec.seed, *coords)
        )
    return buf.getvalue()


def summary_table(cells: list[McCell]) -> str:
    headers = ("scenario", "n", "estimator", "bias", "rmse", "rcrlb", "rmse/rcrlb", "fail")
    rows = []
    for cell in cells:
        ratio = (
            ""
            if cell.rcrlb in (None, 0.0) or not math.isfinite(cell.rmse)
            else f"{cell.rmse / cell.rcrlb:.3f}"
        )
        flag = " INVALID" if cell.invalid else ""
        rows.append(
            (
                cell.scenario,
                str(cell.n),
                cell.estimator,
                f"{cell.bias:.5g}",
                f"{cell.rmse:.5g}",
                "" if cell.rcrlb is None else f"{cell.rcrlb:.5g}",
                ratio,
                f"{cell.runs_failed}{flag}",
            )
        )
    widths = [max(len(h), *(len(r[i]) for r in rows)) if rows else len(h) for i, h in enumerate(headers)]
    out = ["  ".join(h.ljust(w) for h, w in zip(headers, widths))]
    for row in rows:
        out.append("  ".join(v.ljust(w) for v, w in zip(row, widths)))
    return "\n".join(out)


def _load_scenarios(args) -> tuple[list[Scenario], str | None, str | None, str | None]:
    """Scenarios plus (csv_path, per_run_path, preset_name)."""
    if args.preset and args.config:
        raise InputError("give either --preset or a config file, not both")
    if args.preset:
        try:
            scenarios = get_preset(args.preset, runs=args.runs)
        except KeyError as exc:
            raise InputError(str(exc.args[0])) from exc
        csv_path, per_run = None, None
        preset = args.preset
    elif args.config:
        try:
            with open(args.config, "r", encoding="utf-8") as handle:
                text = handle.read()
        except OSError as exc:
            raise InputError(f"cannot open {args.config}: {exc}") from exc
        try:
            scenarios, output = parse_config(text)
        except ConfigError as exc:
            raise InputError(f"{args.config}: {exc}") from exc
        if args.runs is not None:
            scenarios = [replace(s, runs=args.runs) for s in scenarios]
        csv_path, per_run = output.csv, output.per_run
        preset = None
    else:
        raise InputError("campaign needs --preset NAME or a config file")
    seed_env = os.environ.get("AOA_SEED")
    if seed_env is not None:
        try:
            seed = int(seed_env)
        except ValueError as exc:
            raise InputError(f"AOA_SEED must be an integer, got {seed_env!r}") from exc
        scenarios = [replace(s, base_seed=seed) for s in scenarios]
    return scenarios, csv_path, per_run, preset


def cmd_campaign(args) -> int:
    if args.list_presets:
        for name in sorted(PRESETS):
            print(f"{name}: {PRESETS[name][1]}")
        return EXIT_OK
    scenarios, cfg_csv, cfg_per_run, preset = _load_scenarios(args)
    csv_path = args.out or cfg_csv
    per_run_path = args.dump_runs or cfg_per_run
    all_cells: list[McCell] = []
    all_runs = []
    for scenario in scenarios:
        result = run_campaign(
            scenario, parallelism=args.jobs, collect_runs=per_run_path is not None
        )
        all_cells.extend(result.cells)
        if result.runs:
            all_runs.extend(result.runs)
    print(summary_table(all_cells))
    table = cells_to_csv(all_cells)
    if csv_path:
        with open(csv_path, "w", encoding="utf-8") as handle:
            handle.write(table)
        print(f"wrote {csv_path}")
    else:
        print(table, end="")
    if per_run_path:
        with open(per_run_path, "w", encoding="utf-8") as handle:
            handle.write(runs_to_csv(CampaignResult(cells=[], runs=all_runs)))
        print(f"wrote {per_run_path}")
    if args.check:
        if preset is None:
            raise InputError("--check is only defined for --preset campaigns")
        failures = 0
        for label, ok, detail in check_cells(preset, all_cells):
            print(f"{'PASS' if ok else 'FAIL'}: {label}: {detail}")
            failures += 0 if ok else 1
        if failures:
            return EXIT_CHECK
    return EXIT_OK


def cmd_bench(args) -> int:
    scenarios, _, _, _ = _load_scenarios(args)
    writer_buf = io.StringIO()
    writer = csv.writer(writer_buf, lineterminator="\n")
    writer.writerow(("scenario", "n", "estimator", "median_seconds", "ratio_vs_min_n"))
    for scenario in scenarios:
        base: dict[str, float] = {}
        for n in scenario.n_list:
            seed = derive_run_seed(scenario.base_seed, n, 0)
            array = materialize_array(scenario.array_spec, n, scenario.dim, seed)
            meas = synthesize_measurements(array, scenario.source, scenario.noise, seed)
            for est in scenario.estimators:
                times = []
                for _ in range(args.repeat):
                    start = time.perf_counter()
                    run_estimator(est, array, meas, scenario.noise)
                    times.append(time.perf_counter() - start)
                med = sorted(times)[len(times) // 2]
                key = est
                if key not in base:
                    base[key] = med
                writer.writerow(
                    (scenario.name, n, est, _fmt(med), _fmt(med / base[key]))
                )
    print(writer_buf.getvalue(), end="")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="aoaloc",
        description="Bearing-only source localization: estimators, CRLB, Monte Carlo campaigns.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    est = sub.add_parser("estimate", help="estimate a source from a measurement file")
    est.add_argument("input", help="measurement file: 'x y azimuth' or 'x y z azimuth elevation'")
    est.add_argument("--estimator", choices=("two-step", "pls"), default="two-step")
    est.add_argument("--sigma-a", type=float, default=None, help="known azimuth noise sigma (radians)")
    est.add_argument("--sigma-e", type=float, default=None, help="known elevation noise sigma (radians)")
    est.add_argument("--degrees", action="store_true", help="angles in the file are degrees")
    est.add_argument("--gn-iters", type=int, default=1, help="Gauss-Newton iterations (default 1)")
    est.set_defaults(func=cmd_estimate)

    camp = sub.add_parser("campaign", help="run Monte Carlo scenarios")
    camp.add_argument("config", nargs="?", default=None, help="TOML scenario config")
    camp.add_argument("--preset", default=None, help="built-in scenario preset name")
    camp.add_argument("--list-presets", action="store_true", help="list preset names and exit")
    camp.add_argument("--runs", type=int, default=None, help="override Monte Carlo run count")
    camp.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    camp.add_argument("--out", default=None, help="write the summary CSV here")
    camp.add_argument("--dump-runs", default=None, help="write one CSV row per run here")
    camp.add_argument("--check", action="store_true", help="verify preset thresholds; exit 4 on failure")
    camp.set_defaults(func=cmd_campaign)

    bench = sub.add_parser("bench", help="time the estimators over an n sweep")
    bench.add_argument("config", nargs="?", default=None, help="TOML scenario config")
    bench.add_argument("--preset", default=None, help="built-in scenario preset name")
    bench.add_argument("--runs", type=int, default=None, help=argparse.SUPPRESS)
    bench.add_argument("--repeat", type=int, default=5, help="timing repetitions (median reported)")
    bench.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (InputError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except EstimationError as exc:
        print(f"estimation error ({type(exc).__name__}): {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
