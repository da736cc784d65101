"""Command line entry point.

Exit codes: 0 success, 2 configuration error, 3 exact-RIP budget refusal,
4 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from ..chaos import DivergentIntegralError
from ..ensembles import Kind
from ..rip import BudgetExceeded
from .config import ConfigError, ExperimentConfig, merge
from .experiments import build_operator, run
from .plot import emit_plotdata
from .table import ResultTable

log = logging.getLogger("structcs")

EXIT_OK, EXIT_CONFIG, EXIT_BUDGET, EXIT_NUMERIC = 0, 2, 3, 4

_SUBCOMMANDS = {
    "rip": "rip_table",
    "phase": "phase_transition",
    "chaos": "chaos_profile",
    "decouple": "decoupling",
    "jl": "jl_sweep",
}


def _int_list(text: str) -> list[int]:
    return [int(t) for t in text.replace(" ", "").split(",") if t]


def _str_list(text: str) -> list[str]:
    return [t for t in text.replace(" ", "").split(",") if t]


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="JSON experiment config")
    p.add_argument("--seed", type=int, dest="master_seed")
    p.add_argument("--out-dir", dest="out_dir")
    p.add_argument("--threads", type=int)
    p.add_argument("--trials", type=int)
    p.add_argument("--ensemble", choices=[k.value for k in Kind if k is not Kind.MATRIX])
    p.add_argument("--n", type=int)
    p.add_argument("--m", type=_int_list, dest="m_grid", help="comma separated m grid")
    p.add_argument("--s", type=_int_list, dest="s_grid", help="comma separated sparsity grid")
    p.add_argument("--distribution", choices=["rademacher", "gaussian", "steinhaus"])
    p.add_argument("--omega", choices=["random", "first", "strided"])


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="structcs", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="draw an operator and write its metadata")
    _common(gen)

    rip = sub.add_parser("rip", help="restricted isometry constants")
    _common(rip)
    rip.add_argument("--method", dest="rip_method", choices=["exact", "monte_carlo"])
    rip.add_argument("--budget", dest="rip_budget", type=int)
    rip.add_argument("--mc-trials", dest="mc_trials", type=int)

    phase = sub.add_parser("phase", help="recovery phase transition")
    _common(phase)
    phase.add_argument("--solver", dest="solvers", type=_str_list)
    phase.add_argument("--max-iters", dest="solver_max_iters", type=int)

    chaos = sub.add_parser("chaos", help="chaos profiles and Dudley bounds")
    _common(chaos)
    chaos.add_argument("--family-size", dest="family_size", type=int)
    chaos.add_argument("--draws", type=int)

    dec = sub.add_parser("decouple", help="Monte-Carlo decoupling checks")
    _common(dec)
    dec.add_argument("--family-size", dest="family_size", type=int)

    jl = sub.add_parser("jl", help="Johnson-Lindenstrauss distortion sweep")
    _common(jl)
    jl.add_argument("--points", type=int)

    plot = sub.add_parser("plot", help="plot data from a result table JSON")
    plot.add_argument("table", type=Path)
    plot.add_argument("--out", type=Path, help="output prefix (default: next to the table)")
    plot.add_argument("--x", default="m")
    plot.add_argument("--y", default="frequency")
    plot.add_argument("--group", default="s")
    plot.add_argument("--where", action="append", default=[], help="column=value filter")
    return parser


def _config_from_args(args, experiment: str) -> ExperimentConfig:
    base = {}
    if args.config is not None:
        base = ExperimentConfig.load(args.config).to_dict()
    if base.get("experiment", experiment) != experiment:
        raise ConfigError(f"config is for {base['experiment']!r}, not {experiment!r}")
    overrides = {k: v for k, v in vars(args).items() if k not in ("config", "command", "verbose")}
    overrides["experiment"] = experiment
    return ExperimentConfig.from_dict(merge(base, overrides))


def _parse_where(items):
    out = {}
    for item in items:
        key, _, value = item.partition("=")
        if not _:
            raise ConfigError(f"bad filter {item!r}, expected column=value")
        try:
            out[key] = json.loads(value)
        except json.JSONDecodeError:
            out[key] = value
    return out


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        if args.command == "plot":
            table = ResultTable.from_json(args.table.read_text(encoding="utf-8"))
            prefix = args.out or args.table.with_suffix("")
            try:
                dat, svg = emit_plotdata(table, prefix, args.x, args.y, args.group, _parse_where(args.where))
            except KeyError as exc:
                raise ConfigError(str(exc)) from None
            print(dat)
            print(svg)
            return EXIT_OK
        if args.command == "gen":
            base = ExperimentConfig.load(args.config).experiment if args.config else "rip_table"
            cfg = _config_from_args(args, base).validate()
            op = build_operator(cfg.ensemble, cfg.n, cfg.m_grid[0], cfg.distribution, cfg.master_seed, cfg.omega)
            out = Path(cfg.out_dir)
            out.mkdir(parents=True, exist_ok=True)
            path = out / "operator.json"
            path.write_text(op.to_json() + "\n", encoding="utf-8")
            print(path)
            return EXIT_OK
        cfg = _config_from_args(args, _SUBCOMMANDS[args.command])
        table = run(cfg)
        log.info("wrote %s rows to %s", len(table.rows), cfg.out_dir)
        print(Path(cfg.out_dir) / f"{cfg.experiment}.csv")
        if cfg.experiment == "phase_transition":
            for solver in cfg.solvers:
                emit_plotdata(table, Path(cfg.out_dir) / f"phase_{solver}", where={"solver": solver})
        return EXIT_OK
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BudgetExceeded as exc:
        print(f"refused: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (ArithmeticError, np.linalg.LinAlgError, DivergentIntegralError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
