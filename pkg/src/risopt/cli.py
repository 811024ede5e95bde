"""Command-line front end.

    risopt gen-impedances --config cfg.toml --out run/
    risopt optimize       --config cfg.toml --out run/ [--coupling-unaware] [--max-iters N] [--r0 R ...]
    risopt sweep-spacing  --config cfg.toml --out run/ [--jobs N] [--max-iters N]
    risopt default-config > cfg.toml

Impedances are cached as JSON under ``$RIS_OPT_CACHE_DIR`` (default
``~/.cache/risopt``), keyed by a hash of the geometry settings.

Exit codes: 0 success, 2 configuration error, 3 numerical error,
4 line-search stall, 1 anything else.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import config as cfgmod
from .channel import transfer_function
from .config import ScenarioConfig
from .em_model import assemble_impedances, build_grid_scenario, load_impedances, save_impedances
from .errors import ConfigError, ImpedanceFileError, LineSearchStallError, NumericalError
from .metrics import complexity_proposed
from .optimizer import (
    OptimizerConfig, default_initializer, optimize, summarize, unaware_counterpart, write_trace_csv,
)

log = logging.getLogger("risopt")

EXIT_OK, EXIT_OTHER, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_STALL = 0, 1, 2, 3, 4

SWEEP_HEADER = ("spacing", "n_ris", "objective_aware", "objective_unaware")


def cache_dir() -> Path:
    env = os.environ.get("RIS_OPT_CACHE_DIR")
    return Path(env) if env else Path.home() / ".cache" / "risopt"


def impedances_for(cfg: ScenarioConfig, use_cache: bool = True):
    """Load, fetch from cache, or synthesize the impedance set for ``cfg``."""
    if cfg.impedance_file:
        iset = load_impedances(cfg.impedance_file)
    else:
        path = cache_dir() / f"impedances-{cfg.geometry_key()}.json"
        if use_cache and path.exists():
            try:
                iset = load_impedances(path)
            except ImpedanceFileError:
                log.warning("ignoring corrupt cache file %s", path)
                iset = None
        else:
            iset = None
        if iset is None:
            log.info("synthesizing impedances (%s)", path.name)
            iset = assemble_impedances(build_grid_scenario(cfg), cfg.include_direct_link)
            if use_cache:
                path.parent.mkdir(parents=True, exist_ok=True)
                tmp = path.with_suffix(f".{os.getpid()}.tmp")
                save_impedances(iset, tmp)
                tmp.replace(path)
    return iset.replace(z_g=cfg.z_g, z_l=cfg.z_l)


def run_pipeline(cfg: ScenarioConfig, r0: float, coupling_aware: bool):
    """Optimize for one R0; returns ``(trace, summary)``.

    In the coupling-unaware pipeline the optimizer sees only the self
    impedances and the resulting loads are then scored on the full model.
    """
    iset = impedances_for(cfg)
    model = iset if coupling_aware else unaware_counterpart(iset)
    init = default_initializer(model, r0, cfg.bounds_ohm)
    load, trace = optimize(model, init, cfg.optimizer)
    summary = summarize(trace)
    n = iset.n_ris
    summary.update(
        r0_ohm=r0,
        n_ris=n,
        coupling_aware=coupling_aware,
        true_objective=transfer_function(iset, load).objective,
        # the estimator counts only the trials after the mandatory first one
        complexity_estimate=complexity_proposed(n, max(summary["iters_to_95pct"], 1),
                                                max(summary["mean_inner_loops"] - 1, 0.0)),
        reactances_ohm=load.x.tolist(),
    )
    return trace, summary


def _sweep_point(args):
    cfg, spacing = args
    point = cfg.replace(ris=cfgmod.RisSpec(None, None, cfg.ris.aperture_m, spacing))
    aware = run_pipeline(point, cfg.r0_ohm, True)[1]
    unaware = run_pipeline(point, cfg.r0_ohm, False)[1]
    return spacing, aware["n_ris"], aware["true_objective"], unaware["true_objective"]


def cmd_gen_impedances(cfg: ScenarioConfig, out: Path) -> Path:
    iset = impedances_for(cfg)
    return save_impedances(iset, out / "impedances.json")


def cmd_optimize(cfg: ScenarioConfig, out: Path, r0_values=None) -> list[dict]:
    summaries = []
    r0_values = r0_values or [cfg.r0_ohm]
    for r0 in r0_values:
        trace, summary = run_pipeline(cfg, r0, cfg.coupling_aware)
        suffix = "" if len(r0_values) == 1 else f"_r0={r0:g}"
        mode = "aware" if cfg.coupling_aware else "unaware"
        summary["trace_csv"] = str(write_trace_csv(trace, out / f"trace_{mode}{suffix}.csv"))
        summaries.append(summary)
    (out / "summary.json").write_text(json.dumps(summaries, indent=2))
    return summaries


def cmd_sweep_spacing(cfg: ScenarioConfig, out: Path, jobs: int = 1) -> Path:
    if cfg.ris.aperture_m is None:
        raise ConfigError("sweep-spacing needs ris.aperture_m (fixed-aperture RIS)")
    spacings = sorted(cfg.sweep.spacings_wavelengths, reverse=True)
    tasks = [(cfg, s) for s in spacings]
    if jobs > 1:
        for _, s in tasks:
            impedances_for(cfg.replace(ris=cfgmod.RisSpec(None, None, cfg.ris.aperture_m, s)))
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_sweep_point, tasks))
    else:
        rows = [_sweep_point(t) for t in tasks]
    path = out / "sweep_spacing.csv"
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SWEEP_HEADER)
        for spacing, n, fa, fu in rows:
            w.writerow([f"{spacing:.17g}", n, f"{fa:.17g}", f"{fu:.17g}"])
    return path


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="risopt", description=__doc__.split("\n\n")[0])
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", type=Path, help="TOML scenario file (defaults: 14x14 RIS at 3.5 GHz)")
        p.add_argument("--out", type=Path, default=Path("."), help="output directory")
        p.add_argument("--max-iters", type=int, help="override optimizer.max_outer_iters")
        p.add_argument("--coupling-unaware", action="store_true",
                       help="optimize against the model without RIS-RIS coupling")

    common(sub.add_parser("gen-impedances", help="synthesize and write the impedance file"))
    p = sub.add_parser("optimize", help="run the projected-gradient optimizer")
    common(p)
    p.add_argument("--r0", type=float, action="append", help="load resistance (repeat to sweep)")
    p = sub.add_parser("sweep-spacing", help="fixed-aperture sweep over element spacing")
    common(p)
    p.add_argument("--jobs", type=int, default=1)
    sub.add_parser("default-config", help="print the default configuration as TOML")
    return parser


def _load(args) -> ScenarioConfig:
    cfg = cfgmod.load_config(args.config) if args.config else ScenarioConfig()
    if args.coupling_unaware:
        cfg.coupling_aware = False
        cfg.optimizer.coupling_aware = False
    if args.max_iters is not None:
        cfg.optimizer = OptimizerConfig(**{**vars(cfg.optimizer), "max_outer_iters": args.max_iters})
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * args.verbose,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "default-config":
            sys.stdout.write(cfgmod.dumps(ScenarioConfig()))
            return EXIT_OK
        cfg = _load(args)
        args.out.mkdir(parents=True, exist_ok=True)
        if args.command == "gen-impedances":
            print(cmd_gen_impedances(cfg, args.out))
        elif args.command == "optimize":
            for s in cmd_optimize(cfg, args.out, args.r0):
                print(f"r0={s['r0_ohm']:g} iters={s['iterations']} f={s['final_objective']:.6e} "
                      f"f_true={s['true_objective']:.6e} L={s['mean_inner_loops']:.3f} -> {s['trace_csv']}")
        elif args.command == "sweep-spacing":
            print(cmd_sweep_spacing(cfg, args.out, args.jobs))
    except (ConfigError, ImpedanceFileError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except LineSearchStallError as exc:
        print(f"line search stalled: {exc} {exc.diagnostics}", file=sys.stderr)
        return EXIT_STALL
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
