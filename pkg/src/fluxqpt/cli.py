"""Command-line entry point: ``fluxqpt run CONFIG`` or one metric at a time."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .dynamics import AccuracyError
from .eigensolver import ConvergenceError
from .network import MemoryBudgetError
from .runner import ConfigError, run, validate_config

EXIT_CODES = {"config": 2, "memory": 3, "accuracy": 4, "convergence": 5, "io": 6, "internal": 1}

_SINGLE = {
    "chi": {"chi_f": True},
    "witness": {"witness": True},
    "macro": {"macro": True},
    "dynamics-verify": {"dynamics_verify": True},
}


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--n", type=int, help="number of sites")
    p.add_argument("--topology", choices=["triangle", "nn-nnn-chain", "custom"])
    p.add_argument("--grid", type=int, help="number of grid points along the sweep")
    p.add_argument("--out", help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fluxqpt", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("run", help="run a config file (YAML or JSON)")
    p.add_argument("config", help="path to the config file")
    _add_common(p)
    for name in _SINGLE:
        p = sub.add_parser(name, help=f"compute only the {name} output")
        p.add_argument("--config", help="optional config file providing other settings")
        _add_common(p)
    return parser


def _overrides(args) -> dict:
    out = {}
    if args.topology is not None:
        out["topology"] = args.topology
        if args.topology == "triangle" and args.n is None:
            out["n"] = None
    if args.n is not None:
        out["n"] = args.n
        if args.topology is None and args.n != 3:
            out.setdefault("topology", "nn-nnn-chain")
    if args.grid is not None:
        out["grid_points"] = args.grid
    if args.out is not None:
        out["out"] = args.out
    return out


def _fail(category: str, exc: BaseException, **extra) -> int:
    payload = {"error": category, "message": str(exc), **extra}
    print(json.dumps(payload), file=sys.stderr)
    return EXIT_CODES[category]


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        path = args.config
        data = {}
        if path:
            import yaml

            data = yaml.safe_load(Path(path).read_text(encoding="utf-8")) or {}
            if not isinstance(data, dict):
                raise ConfigError("<config>", "top level must be a mapping")
        if args.command in _SINGLE:
            data.update({"chi_f": False, "witness": False, "macro": False, "dynamics_verify": False})
            data.update(_SINGLE[args.command])
        data.update(_overrides(args))
        cfg = validate_config(data)
        manifest = run(cfg)
    except ConfigError as exc:
        return _fail("config", exc, key=exc.key)
    except MemoryBudgetError as exc:
        return _fail("memory", exc, required_bytes=exc.required)
    except AccuracyError as exc:
        return _fail("accuracy", exc)
    except ConvergenceError as exc:
        return _fail("convergence", exc, residual=exc.residual)
    except OSError as exc:
        return _fail("io", exc)
    print(json.dumps({"out": cfg.out, "files": sorted(manifest.files), "summary": manifest.summary,
                      "warnings": manifest.warnings}, indent=2, sort_keys=True))
    return 0
