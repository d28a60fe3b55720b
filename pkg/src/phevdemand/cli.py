"""Command-line front end.

    phevdemand expected --preset fig9-uniform --out results --svg
    phevdemand simulate --config my.yaml --seed 7 --workers 4
    phevdemand compare --preset fig9-uniform --preset fig8-rician --svg
    phevdemand presets [--show NAME]

Exit codes: 0 success, 2 usage, 3 invalid config, 4 numerical failure,
5 I/O error, 6 grid mismatch between compared profiles.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
from dataclasses import asdict, dataclass, field, replace

from . import __version__
from .analytic import QuadratureError, WindowTooSmallError, fold_to_day
from .distributions import InvalidParameterError, NoSolutionError
from .montecarlo import simulate_fleet
from .plotting import emit_svg
from .profile import (
    GridMismatchError,
    compare_profiles,
    daily_energy,
    evening_morning_ratio,
    profile_to_csv,
)
from .scenario import ConfigError, load_config, load_preset, preset_names, preset_text

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_CONFIG = 3
EXIT_NUMERIC = 4
EXIT_IO = 5
EXIT_GRID = 6

OUT_ENV = "PHEVDEMAND_OUT"


@dataclass
class RunReport:
    mode: str
    scenarios: dict = field(default_factory=dict)
    files: list = field(default_factory=list)
    metrics: dict = field(default_factory=dict)
    wall_time_s: float = 0.0

    def write(self, path):
        with open(path, "w") as fh:
            json.dump(asdict(self), fh, indent=2, sort_keys=True)
            fh.write("\n")
        return path


def profile_metrics(profile):
    return {
        "energy_kwh": daily_energy(profile),
        "peak_kw": profile.peak,
        "peak_time_h": profile.peak_time,
        "evening_morning_ratio": evening_morning_ratio(profile),
    }


def _configs(args):
    configs = []
    for name in args.preset or []:
        configs.append(load_preset(name))
    for path in args.config or []:
        configs.append(load_config(path))
    if args.seed is not None:
        configs = [c.with_seed(args.seed) for c in configs]
    return configs


def _out_dir(args):
    out = args.out or os.environ.get(OUT_ENV) or "."
    os.makedirs(out, exist_ok=True)
    return out


def analytic_profile(cfg):
    model = cfg.session_model()
    return fold_to_day(model, cfg.resolution, cfg.fold_window)


def cmd_expected(args):
    configs = _configs(args)
    if len(configs) != 1:
        raise UsageError("expected takes exactly one --config or --preset")
    cfg = configs[0]
    out = _out_dir(args)
    start = time.perf_counter()
    profile = analytic_profile(cfg)
    report = RunReport("analytic", {cfg.name: cfg.scenario_hash()})
    csv_path = profile_to_csv(profile, os.path.join(out, f"{cfg.name}_expected.csv"))
    report.files.append(csv_path)
    if args.svg:
        svg = emit_svg([profile], os.path.join(out, f"{cfg.name}_expected.svg"),
                       labels=[f"{cfg.name} ({profile.meta['method']})"])
        report.files.append(svg)
    report.metrics = profile_metrics(profile)
    report.metrics["method"] = profile.meta["method"]
    report.metrics["fold_tail_fraction"] = profile.meta["tail_fraction"]
    report.metrics["expected_energy_kwh"] = cfg.session_model().mean_energy
    report.wall_time_s = time.perf_counter() - start
    report.files.append(report.write(os.path.join(out, f"{cfg.name}_expected_report.json")))
    print(f"{cfg.name}: {profile.meta['method']} profile, energy "
          f"{report.metrics['energy_kwh']:.6g} kWh, peak {profile.peak:.4g} kW "
          f"at {profile.peak_time:.2f} h -> {csv_path}")
    return EXIT_OK


def cmd_simulate(args):
    configs = _configs(args)
    if len(configs) != 1:
        raise UsageError("simulate takes exactly one --config or --preset")
    cfg = configs[0]
    if args.sessions is not None:
        cfg = replace(cfg, fleet_size=args.sessions)
    out = _out_dir(args)
    start = time.perf_counter()
    profile = simulate_fleet(cfg, workers=args.workers)
    report = RunReport("mc", {cfg.name: cfg.scenario_hash()})
    csv_path = profile_to_csv(profile, os.path.join(out, f"{cfg.name}_simulated.csv"))
    report.files.append(csv_path)
    report.metrics = profile_metrics(profile)
    report.metrics["sessions"] = profile.meta["sessions"]
    report.metrics["seed"] = cfg.seed
    report.metrics["energy_stderr_kwh"] = profile.meta["energy_stderr_kwh"]
    report.metrics["max_stderr_kw"] = float(profile.stderr.max())
    if args.svg:
        profiles, labels = [profile], [f"{cfg.name} Monte Carlo (N={cfg.fleet_size})"]
        try:
            exact = analytic_profile(cfg)
        except WindowTooSmallError:
            exact = None
        if exact is not None:
            delta = compare_profiles(profile, exact)
            report.metrics["max_diff_vs_analytic_kw"] = delta.max_abs_kw
            profiles.append(exact)
            labels.append(f"analytic ({exact.meta['method']})")
        svg = emit_svg(profiles, os.path.join(out, f"{cfg.name}_simulated.svg"), labels=labels)
        report.files.append(svg)
    report.wall_time_s = time.perf_counter() - start
    report.files.append(report.write(os.path.join(out, f"{cfg.name}_simulated_report.json")))
    print(f"{cfg.name}: {profile.meta['sessions']} sessions, energy "
          f"{report.metrics['energy_kwh']:.6g} kWh -> {csv_path}")
    return EXIT_OK


COMPARE_FIELDS = ("profile_a", "profile_b", "max_abs_kw", "max_frac_of_peak", "rms_kw")


def cmd_compare(args):
    configs = _configs(args)
    if len(configs) < 2:
        raise UsageError("compare needs at least two --config/--preset entries")
    names = [c.name for c in configs]
    if len(set(names)) != len(names):
        raise UsageError(f"scenario names must be distinct, got {names}")
    out = _out_dir(args)
    start = time.perf_counter()
    report = RunReport("compare", {c.name: c.scenario_hash() for c in configs})
    if args.mc:
        profiles = [simulate_fleet(c, workers=args.workers) for c in configs]
    else:
        profiles = [analytic_profile(c) for c in configs]
    suffix = "simulated" if args.mc else "expected"
    for cfg, prof in zip(configs, profiles):
        report.files.append(profile_to_csv(prof, os.path.join(out, f"{cfg.name}_{suffix}.csv")))

    rows = []
    for i in range(len(configs)):
        for j in range(i + 1, len(configs)):
            d = compare_profiles(profiles[i], profiles[j])
            rows.append((names[i], names[j], *d))
    metrics_path = os.path.join(out, "compare_metrics.csv")
    with open(metrics_path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(COMPARE_FIELDS)
        for r in rows:
            w.writerow(r[:2] + tuple(format(x, ".17g") for x in r[2:]))
    report.files.append(metrics_path)
    if args.svg:
        report.files.append(emit_svg(profiles, os.path.join(out, "overlay.svg"), labels=names))
    report.metrics = {
        "pairs": [dict(zip(COMPARE_FIELDS, r)) for r in rows],
        "max_frac_of_peak": max(r[3] for r in rows),
        "profiles": {n: profile_metrics(p) for n, p in zip(names, profiles)},
    }
    report.wall_time_s = time.perf_counter() - start
    report.files.append(report.write(os.path.join(out, "compare_report.json")))
    for r in rows:
        print(f"{r[0]} vs {r[1]}: max diff {r[2]:.4g} kW ({100 * r[3]:.2f}% of peak), rms {r[4]:.4g} kW")
    return EXIT_OK


def cmd_presets(args):
    if args.show:
        sys.stdout.write(preset_text(args.show))
    else:
        for name in preset_names():
            print(name)
    return EXIT_OK


class UsageError(Exception):
    pass


def build_parser():
    parser = argparse.ArgumentParser(
        prog="phevdemand",
        description="Expected daily charging demand of plug-in vehicles.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, workers=False):
        p.add_argument("--config", action="append", metavar="PATH", help="scenario YAML file")
        p.add_argument("--preset", action="append", metavar="NAME", help="shipped scenario preset")
        p.add_argument("--out", metavar="DIR", help=f"output directory (default ${OUT_ENV} or .)")
        p.add_argument("--seed", type=int, metavar="U64", help="override the scenario seed")
        p.add_argument("--svg", action="store_true", help="also write an SVG figure")
        if workers:
            p.add_argument("--workers", type=int, default=os.cpu_count() or 1, metavar="N",
                           help="worker processes for Monte Carlo (result does not depend on N)")

    p = sub.add_parser("expected", help="analytic expected daily profile")
    common(p)
    p.set_defaults(func=cmd_expected)

    p = sub.add_parser("simulate", help="Monte Carlo fleet simulation")
    common(p, workers=True)
    p.add_argument("--sessions", type=int, metavar="N", help="override fleet_size")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("compare", help="pairwise differences between scenarios")
    common(p, workers=True)
    p.add_argument("--mc", action="store_true", help="compare Monte Carlo instead of analytic profiles")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("presets", help="list shipped presets")
    p.add_argument("--show", metavar="NAME", help="print a preset's YAML")
    p.set_defaults(func=cmd_presets)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"phevdemand: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConfigError as exc:
        print(f"phevdemand: invalid config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except GridMismatchError as exc:
        print(f"phevdemand: grid mismatch: {exc}", file=sys.stderr)
        return EXIT_GRID
    except (QuadratureError, WindowTooSmallError, NoSolutionError, InvalidParameterError) as exc:
        print(f"phevdemand: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"phevdemand: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
