"""Command line entry point: ``coopamc {design,evaluate,simulate,sweep,fixed}``.

SNRs are given in dB here and converted to linear values before use.
Exit codes: 0 success, 1 usage or validation error, 2 infeasible everywhere.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .analytic import evaluate
from .channel import (
    ConfigError,
    Topology,
    db_to_linear,
    derive_topology,
    linear_to_db,
    load_table,
    sr_packet_error,
)
from .design import LinkDesign, design_link, fixed_link
from .experiments import SCHEMES, SweepSpec, gap_summary, rows_to_csv, rows_to_json, run_sweep
from .optimizer import optimize_adaptive, optimize_fixed, power_threshold
from .sim import POLICIES, SimConfig, simulate_designs

EXIT_OK, EXIT_USAGE, EXIT_INFEASIBLE = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _probability(name):
    def parse(text):
        try:
            value = float(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"{name}: not a number: {text!r}") from None
        if not 0.0 < value < 1.0:
            raise argparse.ArgumentTypeError(f"{name} must lie in (0, 1), got {value}")
        return value

    return parse


def _positive_int(name):
    def parse(text):
        try:
            value = int(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"{name}: not an integer: {text!r}") from None
        if value < 1:
            raise argparse.ArgumentTypeError(f"{name} must be >= 1, got {value}")
        return value

    return parse


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _dump(payload: dict) -> str:
    return json.dumps(payload, indent=1) + "\n"


def _add_topology(p, pbar=True):
    if pbar:
        p.add_argument("--pbar-db", type=float, required=True, help="mean S-D SNR in dB")
    p.add_argument("--d", type=float, default=0.2, help="normalized S-R distance (default 0.2)")
    p.add_argument("--alpha", type=float, default=4.0, help="path-loss exponent (default 4)")


def _read_design(path: str) -> LinkDesign:
    try:
        return LinkDesign.from_dict(json.loads(Path(path).read_text()))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}: {exc.msg}") from None


def cmd_design(args) -> int:
    table = load_table(args.table)
    design = design_link(table, db_to_linear(args.mean_snr_db), args.pt)
    _emit(_dump(design.to_dict()), args.out)
    return EXIT_OK


def _designs_from_args(args, table, topo):
    gamma1, gamma2, _ = derive_topology(topo)
    if args.design_sd or args.design_rd:
        if not (args.design_sd and args.design_rd):
            raise ConfigError("--design-sd and --design-rd go together")
        return _read_design(args.design_sd), _read_design(args.design_rd)
    if args.pt_sd is not None or args.pt_rd is not None:
        if args.pt_sd is None or args.pt_rd is None:
            raise ConfigError("--pt-sd and --pt-rd go together")
        return design_link(table, gamma1, args.pt_sd), design_link(table, gamma2, args.pt_rd)
    return None


def cmd_evaluate(args) -> int:
    table = load_table(args.table)
    topo = Topology.from_db(args.pbar_db, args.d, args.alpha)
    _, _, gamma_sr = derive_topology(topo)
    eps = [sr_packet_error(mode, gamma_sr) for mode in table]
    designs = _designs_from_args(args, table, topo)
    if designs is None:
        opt = optimize_adaptive(table, topo, args.ploss, args.grid, args.nr)
        payload = {"kind": "optimized", "p_t_sd": opt.p_t_sd_star, "p_t_rd": opt.p_t_rd_star,
                   "report": opt.report.to_dict()}
        _emit(_dump(payload), args.out)
        return EXIT_OK if opt.feasible else EXIT_INFEASIBLE
    report = evaluate(designs[0], designs[1], eps, args.nr, args.ploss)
    _emit(_dump({"kind": "report", "report": report.to_dict()}), args.out)
    return EXIT_OK


def cmd_simulate(args) -> int:
    table = load_table(args.table)
    topo = Topology.from_db(args.pbar_db, args.d, args.alpha)
    gamma1, gamma2, gamma_sr = derive_topology(topo)
    eps = [sr_packet_error(mode, gamma_sr) for mode in table]
    nr = args.nr
    if args.fixed:
        n, m = args.fixed
        d_sd, d_rd = fixed_link(table, n, gamma1), fixed_link(table, m, gamma2)
    else:
        designs = _designs_from_args(args, table, topo)
        if designs is None:
            opt = optimize_adaptive(table, topo, args.ploss, args.grid, max(nr, 1))
            if not opt.feasible:
                print("no feasible design at this SNR", file=sys.stderr)
                return EXIT_INFEASIBLE
            designs = (opt.design_sd, opt.design_rd)
        d_sd, d_rd = designs
    cfg = SimConfig(args.packets, args.seed, nr, args.policy)
    stats = simulate_designs(d_sd, d_rd, eps, cfg, partitions=args.partitions)
    payload = stats.to_dict()
    payload["config"] = {
        "packets": args.packets, "seed": args.seed, "nr": nr, "policy": args.policy,
        "pbar_db": args.pbar_db, "d": args.d, "alpha": args.alpha,
        "fixed": list(args.fixed) if args.fixed else None,
        "thresholds_sd_db": [linear_to_db(t) for t in d_sd.thresholds],
        "thresholds_rd_db": [linear_to_db(t) for t in d_rd.thresholds],
    }
    _emit(_dump(payload), args.out)
    return EXIT_OK


def cmd_sweep(args) -> int:
    table = load_table(args.table)
    start, stop, step = args.pbar_db
    spec = SweepSpec(
        start, stop, step, d=args.d, alpha=args.alpha, p_loss=args.ploss, nr=args.nr,
        schemes=tuple(args.schemes), grid=args.grid, sim_packets=args.packets,
        seed=args.seed, outage_policy=args.policy,
    )
    rows = run_sweep(table, spec)
    if args.format == "csv":
        _emit(rows_to_csv(rows), args.out)
        gap = gap_summary(rows)
        if gap:
            print(
                f"joint-adaptive minus amc-only: mean {gap['mean_gap']:.4f}, "
                f"max {gap['max_gap']:.4f} bits/symbol",
                file=sys.stderr,
            )
    else:
        _emit(rows_to_json(rows, spec) + "\n", args.out)
    if not any(row.feasible for row in rows):
        return EXIT_INFEASIBLE
    return EXIT_OK


def cmd_fixed(args) -> int:
    table = load_table(args.table)
    topo = Topology.from_db(args.pbar_db, args.d, args.alpha)
    choice = optimize_fixed(table, topo, args.ploss)
    payload = {"kind": "fixed_choice", "n_star": choice.n_star, "m_star": choice.m_star,
               "eta": choice.eta, "plr": choice.plr, "feasible": choice.feasible}
    if args.threshold:
        n, m = args.threshold
        p_th = power_threshold(table, n, m, args.d, args.alpha, args.ploss, tuple(args.bracket))
        payload["power_threshold"] = {"n": n, "m": m, "pbar_th": p_th, "pbar_th_db": linear_to_db(p_th)}
    _emit(_dump(payload), args.out)
    return EXIT_OK if choice.feasible else EXIT_INFEASIBLE


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="coopamc", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    table_help = "mode table JSON (default: bundled HiperLAN/2 table)"

    p = sub.add_parser("design", help="design one link's switching thresholds")
    p.add_argument("--table", help=table_help)
    p.add_argument("--mean-snr-db", "--pbar-db", dest="mean_snr_db", type=float, required=True)
    p.add_argument("--pt", type=_probability("pt"), required=True, help="target PER per mode")
    p.add_argument("--out")
    p.set_defaults(func=cmd_design)

    def design_inputs(q):
        q.add_argument("--design-sd")
        q.add_argument("--design-rd")
        q.add_argument("--pt-sd", type=_probability("pt-sd"))
        q.add_argument("--pt-rd", type=_probability("pt-rd"))
        q.add_argument("--ploss", type=_probability("ploss"), default=1e-3)
        q.add_argument("--grid", type=_positive_int("grid"), default=200)

    p = sub.add_parser("evaluate", help="analytic η and PLR, optimizing the split if no designs are given")
    p.add_argument("--table", help=table_help)
    _add_topology(p)
    design_inputs(p)
    p.add_argument("--nr", type=int, default=1)
    p.add_argument("--out")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("simulate", help="Monte Carlo run of the protocol")
    p.add_argument("--table", help=table_help)
    _add_topology(p)
    design_inputs(p)
    p.add_argument("--fixed", nargs=2, type=_positive_int("mode"), metavar=("N", "M"))
    p.add_argument("--nr", type=int, default=1)
    p.add_argument("--packets", type=_positive_int("packets"), required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--policy", choices=POLICIES, default="wait")
    p.add_argument("--partitions", type=_positive_int("partitions"), default=1)
    p.add_argument("--out")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="sweep P̄ over the selected schemes")
    p.add_argument("--table", help=table_help)
    p.add_argument("--pbar-db", nargs=3, type=float, default=[0.0, 30.0, 0.5],
                   metavar=("START", "STOP", "STEP"))
    _add_topology(p, pbar=False)
    p.add_argument("--ploss", type=_probability("ploss"), default=1e-3)
    p.add_argument("--nr", type=int, default=1)
    p.add_argument("--grid", type=_positive_int("grid"), default=200)
    p.add_argument("--schemes", nargs="+", choices=SCHEMES, default=["joint-adaptive", "amc-only"])
    p.add_argument("--packets", type=_positive_int("packets"), default=None,
                   help="add Monte Carlo columns with this many cycles per row")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--policy", choices=POLICIES, default="wait")
    p.add_argument("--format", choices=("csv", "json", "json-style"), default="csv")
    p.add_argument("--out")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("fixed", help="best fixed mode pair and its power threshold")
    p.add_argument("--table", help=table_help)
    _add_topology(p)
    p.add_argument("--ploss", type=_probability("ploss"), default=1e-3)
    p.add_argument("--threshold", nargs=2, type=_positive_int("mode"), metavar=("N", "M"))
    p.add_argument("--bracket", nargs=2, type=float, default=[-20.0, 80.0], metavar=("LO_DB", "HI_DB"))
    p.add_argument("--out")
    p.set_defaults(func=cmd_fixed)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ValueError, IndexError, OSError) as exc:
        print(f"coopamc {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    raise SystemExit(main())
