"""Command-line front end.

Exit codes: 0 all checks pass, 2 a physics check failed, 1 I/O or validation error.
Logging verbosity is taken from ``PAGECURVE_LOG`` (error, info or debug).
"""
import argparse
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import davies, scenarios
from .opcore import load_matrix

EXIT_OK, EXIT_ERROR, EXIT_PHYSICS = 0, 1, 2

log = logging.getLogger("pagecurve")


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors; 2 is reserved for failed physics checks
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def _setup_logging():
    level = os.environ.get("PAGECURVE_LOG", "error").upper()
    logging.basicConfig(level=getattr(logging, level, logging.ERROR),
                        format="%(levelname)s %(name)s: %(message)s")


def _report(result, stream=None):
    stream = stream or sys.stdout
    cfg = result.config
    for name, ok in result.checks.passed.items():
        detail = result.checks.details.get(name, "")
        print(f"[{cfg.name}] {name}: {'PASS' if ok else 'FAIL'} ({detail})", file=stream)
    if result.page is not None:
        p = result.page
        print(f"[{cfg.name}] page: t* = {p.t_star:.6g}, S* = {p.S_star:.6g}, "
              f"energy fraction = {p.energy_fraction_at_t_star:.4f}", file=stream)
    else:
        print(f"[{cfg.name}] page: {result.page_error}", file=stream)


def _execute(cfg, out_dir):
    out_dir = Path(out_dir)
    created = not out_dir.exists()
    try:
        result = scenarios.run(cfg, out_dir)
    except Exception as exc:
        if created and out_dir.exists() and not any(out_dir.iterdir()):
            out_dir.rmdir()
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    _report(result)
    return EXIT_OK if result.checks.ok else EXIT_PHYSICS


def cmd_run(args):
    try:
        cfg = scenarios.load_config(args.config)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    return _execute(cfg, args.out_dir)


def _run_builtin(name, out_dir, dump=True):
    cfg = scenarios.builtin(name)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    config_path = out_dir / f"{name}.json"
    config_path.write_text(json.dumps(cfg.to_dict(), indent=2))
    code = _execute(cfg, out_dir)
    if code == EXIT_ERROR:
        config_path.unlink(missing_ok=True)
    return code


def cmd_builtin(args):
    names = list(scenarios.BUILTINS) if args.name == "all" else args.name.split(",")
    bad = [n for n in names if n not in scenarios.BUILTINS]
    if bad:
        print(f"error: unknown built-in {', '.join(bad)}; valid names: "
              f"{', '.join(scenarios.BUILTINS)}, all", file=sys.stderr)
        return EXIT_ERROR
    if len(names) == 1:
        return _run_builtin(names[0], args.out_dir)
    out = Path(args.out_dir)
    dirs = [out / n for n in names]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            codes = list(pool.map(_run_builtin, names, dirs))
    else:
        codes = [_run_builtin(n, d) for n, d in zip(names, dirs)]
    if EXIT_ERROR in codes:
        return EXIT_ERROR
    return EXIT_PHYSICS if EXIT_PHYSICS in codes else EXIT_OK


def cmd_validate(args):
    try:
        cfg = scenarios.load_config(args.config)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    print(json.dumps(cfg.to_dict(), indent=2))
    return EXIT_OK


def cmd_davies_inspect(args):
    try:
        H = load_matrix(args.hs)
        S = load_matrix(args.s)
        bath = davies.BathSpec(temperature=args.temp, coupling_strength=args.gamma)
        L = davies.build_generator(H, S, bath)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    print(json.dumps(davies.describe(L), indent=2))
    return EXIT_OK


def build_parser():
    p = _Parser(prog="pagecurve", description="Page-curve entropy dynamics under Davies master equations.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    r = sub.add_parser("run", help="run a scenario config")
    r.add_argument("config", help="scenario JSON file")
    r.add_argument("out_dir", help="directory for CSV/JSON outputs")
    r.set_defaults(func=cmd_run)

    b = sub.add_parser("builtin", help="run a built-in reference scenario")
    b.add_argument("name", help=f"one of {', '.join(scenarios.BUILTINS)}, a comma list, or 'all'")
    b.add_argument("out_dir", help="directory for outputs (one subdirectory per scenario for lists)")
    b.add_argument("--jobs", type=int, default=1, help="parallel workers for several scenarios")
    b.set_defaults(func=cmd_builtin)

    d = sub.add_parser("davies-inspect", help="print the Davies channels of (H_S, S) as JSON")
    d.add_argument("--hs", required=True, help="system Hamiltonian matrix file")
    d.add_argument("--s", required=True, help="coupling operator matrix file")
    d.add_argument("--temp", type=float, required=True, help="bath temperature (>= 0)")
    d.add_argument("--gamma", type=float, required=True, help="coupling strength (> 0)")
    d.set_defaults(func=cmd_davies_inspect)

    v = sub.add_parser("validate", help="check a scenario config and print it normalised")
    v.add_argument("config", help="scenario JSON file")
    v.set_defaults(func=cmd_validate)
    return p


def main(argv=None):
    _setup_logging()
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
