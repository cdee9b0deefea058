"""Command line entry point: ``perflab run | sweep | report``.

Exit codes: 0 success, 1 runtime failure (partial outputs kept), 2 invalid
config or arguments.
"""
from __future__ import annotations

import argparse
import logging
import sys
from importlib import resources
from pathlib import Path

from . import config as cfgmod
from .config import SWEEPABLE
from .errors import ArgumentError, ConfigError, PerflabError
from . import experiment

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def bundled_configs() -> dict[str, Path]:
    root = resources.files("perflab") / "configs"
    return {p.name[:-5]: Path(str(p)) for p in root.iterdir() if p.name.endswith(".toml")}


def resolve_config_path(arg: str) -> Path:
    """A file path, or the name of a bundled config such as ``circles_featuresim``."""
    p = Path(arg)
    if p.exists():
        return p
    bundled = bundled_configs()
    if arg in bundled:
        return bundled[arg]
    raise ConfigError(f"no such config file or bundled config: {arg}", 1)


def parse_values(raw: str) -> list[float]:
    items = [v.strip() for v in raw.split(",") if v.strip()]
    if not items:
        raise ArgumentError("--values must list at least one value")
    try:
        return [float(v) for v in items]
    except ValueError:
        raise ArgumentError(f"--values must be numbers, got {raw!r}") from None


def _output_dir(cfg, override, suffix=""):
    if override:
        return Path(override)
    return Path(cfg["experiment"]["output_dir"] + suffix)


def cmd_run(args) -> int:
    cfg = cfgmod.load(resolve_config_path(args.config))
    out = _output_dir(cfg, args.output_dir)
    code = experiment.execute(cfg, out)
    print(f"wrote {out / 'summary.csv'}")
    return code


def cmd_sweep(args) -> int:
    cfg = cfgmod.load(resolve_config_path(args.config))
    if args.param not in SWEEPABLE:
        raise ArgumentError(f"--param must be one of {sorted(SWEEPABLE)}, got {args.param!r}")
    values = parse_values(args.values)
    section, key = SWEEPABLE[args.param]
    extra = {"sweep": {"param": args.param, "values": values}}
    out = _output_dir(cfg, args.output_dir, f"_sweep_{args.param}")
    if args.param == "d":
        try:
            cfg = cfg.with_value(section, key, values)
        except ConfigError as exc:
            raise ArgumentError(f"invalid --values for d: {exc}") from None
        code = experiment.execute(cfg, out, extra=extra)
    else:
        for a in values:
            if not 0 < a < 0.5:
                raise ArgumentError(f"alpha must lie in (0, 0.5), got {a}")
        code = experiment.execute(cfg, out, alphas=values, extra=extra)
    print(f"wrote {out / 'summary.csv'}")
    return code


def cmd_report(args) -> int:
    problems = experiment.audit(args.dir)
    if problems:
        for p in problems:
            print(p, file=sys.stderr)
        return EXIT_FAIL
    print((Path(args.dir) / "summary.csv").read_text(encoding="utf-8"), end="")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="perflab", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run every (method, d) cell of a config")
    p.add_argument("config", help="TOML config path or bundled config name")
    p.add_argument("--output-dir", help="override experiment.output_dir")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="rerun a config over several values of one parameter")
    p.add_argument("config")
    p.add_argument("--param", required=True, help="alpha or d")
    p.add_argument("--values", required=True, help="comma separated list, e.g. 0.2,0.3,0.4,0.49")
    p.add_argument("--output-dir")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("report", help="rebuild the summary from traces and compare")
    p.add_argument("dir")
    p.set_defaults(func=cmd_report)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ConfigError, ArgumentError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except PerflabError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
