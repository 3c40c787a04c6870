"""Command-line front end.

``intervalthermo --config run.ini`` computes a pressure curve and writes
``<label>_curve.csv``, ``<label>_report.json`` and ``<label>_pressure.svg``.
Exit codes: 0 on success, 2 when some grid points failed (the curve is still
written), 1 on configuration errors.
"""

import argparse
import logging
import os
import sys

from .errors import ConfigError, ThermoError

log = logging.getLogger("intervalthermo")

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_POINT_FAILURES = 2


def build_parser():
    ap = argparse.ArgumentParser(prog="intervalthermo",
                                 description="Pressure function p(t) = P(-t log|Df|) of an interval map.")
    ap.add_argument("--config", metavar="PATH", help="INI run configuration")
    ap.add_argument("--selftest", action="store_true", help="run the oracle suite and exit")
    ap.add_argument("--out-dir", metavar="PATH", help="output directory (overrides the config)")
    ap.add_argument("--threads", type=int, metavar="N", help="worker threads, 0 = auto (overrides the config)")
    ap.add_argument("--verbose", "-v", action="store_true")
    return ap


def run(cfg):
    """Execute a validated :class:`~intervalthermo.config.RunConfig`; return ``(exit_code, paths)``."""
    from . import pressure, report

    fmap = cfg.build_map()
    os.makedirs(cfg.out_dir, exist_ok=True)
    log.info("map %s, %d grid points on [%g, %g]", fmap.name, cfg.t_steps, cfg.t_min, cfg.t_max)
    curve = pressure.pressure_curve(fmap, cfg.grid(), cfg.curve_config())
    cc = cfg.curve_config()
    trans = pressure.detect_transitions(curve, kink_factor=cc.kink_factor, slope_tol=cc.slope_tol,
                                        acip_tol=cc.acip_tol)
    base = os.path.join(cfg.out_dir, cfg.label)
    paths = {"csv": base + "_curve.csv", "json": base + "_report.json"}
    report.write_csv(curve, paths["csv"], trans)
    extra = {"shape": pressure.curve_shape_check(curve),
             "config": {"t_min": cfg.t_min, "t_max": cfg.t_max, "t_steps": cfg.t_steps, "depth": cfg.depth,
                        "T_max": cfg.T_max, "R": cfg.R, "map": cfg.map_name, "map_params": cfg.map_params}}
    report.write_json(curve, trans, paths["json"], extra)
    if cfg.emit_plot:
        paths["svg"] = base + "_pressure.svg"
        report.plot_svg(curve, trans, paths["svg"])
    for k, v in paths.items():
        log.info("wrote %s: %s", k, v)
    if curve.failed:
        log.warning("%d grid points failed", len(curve.failed))
        return EXIT_POINT_FAILURES, paths
    return EXIT_OK, paths


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    if args.selftest:
        from .selftest import run_selftest

        results = run_selftest()
        return 0 if all(r.passed for r in results) else 1
    if not args.config:
        print("error: --config or --selftest is required", file=sys.stderr)
        return EXIT_CONFIG
    from .config import load_config

    try:
        cfg = load_config(args.config)
        if args.out_dir is not None:
            cfg.out_dir = args.out_dir
        if args.threads is not None:
            cfg.threads = args.threads
        cfg.validate()
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        code, _ = run(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ThermoError as exc:
        print(f"run failed: {exc}", file=sys.stderr)
        return EXIT_POINT_FAILURES
    return code


if __name__ == "__main__":
    sys.exit(main())
