"""Command line front end.

Subcommands: ``learn`` estimates count tables from a dataset, ``infer``
answers a conditional query from a saved model, ``check`` validates
input files, and ``experiment`` measures inference accuracy on sampled
chains, writing a CSV report and an error figure.
"""

from __future__ import annotations

import argparse
import sys

from .errors import QbnError
from .inference import infer, parse_query
from .learning import init_priors, learn_batch, load_dataset
from .model import QbnNetwork, load_network
from .modelfile import load_model, save_model
from .transforms import TableSnapshot, TransformRecord

__all__ = ["main", "build_parser"]


def _int_list(text: str) -> tuple[int, ...]:
    try:
        values = tuple(int(t) for t in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"expected comma-separated integers, got {text!r}") from None
    if not values:
        raise argparse.ArgumentTypeError("empty list")
    return values


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qbn",
        description="Belief networks over beta count cells: learn from "
                    "data, transform, and answer queries with spread.")
    sub = parser.add_subparsers(dest="command", required=True)

    lp = sub.add_parser("learn", help="estimate tables from a dataset")
    lp.add_argument("--network", required=True,
                    help="structure file (node/edge lines)")
    lp.add_argument("--data", required=True, help="CSV of complete samples")
    lp.add_argument("--model", required=True, help="output model file")
    lp.set_defaults(func=cmd_learn)

    ip = sub.add_parser("infer", help="answer a conditional query")
    ip.add_argument("--model", required=True, help="model file from learn")
    ip.add_argument("--query", required=True,
                    help="P(Var=val[, ...] [| Var=val[, ...]])")
    ip.add_argument("--trace", action="store_true",
                    help="print each transformation and rewritten table")
    ip.add_argument("--machine", action="store_true",
                    help="print one comma-separated result line "
                         "(alpha,omega,mean,variance,variance_bound)")
    ip.set_defaults(func=cmd_infer)

    cp = sub.add_parser("check", help="validate input files")
    cp.add_argument("--network", required=True)
    cp.add_argument("--data", help="optional CSV to check against it")
    cp.set_defaults(func=cmd_check)

    ep = sub.add_parser(
        "experiment",
        help="chain-accuracy study; writes a CSV and a PNG beside it")
    ep.add_argument("--out", required=True, help="output CSV path")
    ep.add_argument("--lengths", type=_int_list, default=(3, 4, 5, 6),
                    help="comma-separated chain lengths (default 3,4,5,6)")
    ep.add_argument("--sizes", type=_int_list, default=(100, 1000, 10000),
                    help="comma-separated sample sizes "
                         "(default 100,1000,10000)")
    ep.add_argument("--seeds", type=int, default=30,
                    help="number of seeds, 0..n-1 (default 30)")
    ep.add_argument("--no-fig", action="store_true",
                    help="skip the PNG figure")
    ep.set_defaults(func=cmd_experiment)
    return parser


def cmd_learn(args) -> int:
    structure = load_network(args.network)
    data = load_dataset(args.data, structure)
    qbn = learn_batch(init_priors(structure), data)
    save_model(qbn, args.model)
    print(f"wrote {args.model}: {len(structure.variables)} nodes, "
          f"{len(data)} samples")
    return 0


def cmd_infer(args) -> int:
    qbn = load_model(args.model)
    query = parse_query(args.query, qbn.structure)
    result = infer(qbn, query)
    if args.trace:
        stream = sys.stderr if args.machine else sys.stdout
        for line in _trace_lines(qbn, result.records):
            print(line, file=stream)
    if result.approximate:
        print(f"warning: {result.zero_denominator_total} zero-denominator "
              f"term(s) dropped; result is approximate", file=sys.stderr)
    stat = result.stat
    if args.machine:
        fields = (stat.alpha, stat.omega, result.mean, result.variance,
                  result.variance_bound)
        print(",".join(f"{x:.17g}" for x in fields))
    else:
        print(f"{stat} mean={result.mean:.4f} var={result.variance:.4f} "
              f"bound={result.variance_bound:.4f}")
    return 0


def cmd_check(args) -> int:
    structure = load_network(args.network)
    n_edges = sum(len(structure.parents_of(v)) for v in structure.node_ids())
    parts = [f"{len(structure.variables)} nodes", f"{n_edges} edges"]
    if args.data:
        data = load_dataset(args.data, structure)
        parts.append(f"{len(data)} samples")
    print("ok: " + ", ".join(parts))
    return 0


def cmd_experiment(args) -> int:
    from .oracle import chain_experiment
    from .report import write_report

    report = chain_experiment(lengths=args.lengths, sizes=args.sizes,
                              seeds=tuple(range(args.seeds)))
    written = write_report(report, args.out, figure=not args.no_fig)
    medians = report.median_abs_err()
    for (length, n), med in sorted(medians.items()):
        print(f"len={length} n={n} median_abs_err={med:.4f}")
    print("wrote " + ", ".join(str(p) for p in written))
    return 0


def _trace_lines(qbn: QbnNetwork, records: tuple[TransformRecord, ...]
                 ) -> list[str]:
    names = {vid: var.name for vid, var in qbn.structure.variables.items()}
    lines = []
    for i, rec in enumerate(records, start=1):
        for snap in rec.rewritten:
            names[snap.var.vid] = snap.var.name
        lines.append(f"{i}. {_describe(rec, names)}")
        for snap in rec.rewritten:
            lines.extend(_table_lines(snap))
    return lines


def _describe(rec: TransformRecord, names: dict[int, str]) -> str:
    def n(vid: int) -> str:
        return names.get(vid, f"#{vid}")

    ops = rec.operands
    if rec.kind == "prune":
        return f"prune {n(ops[0])}"
    if rec.kind == "removal":
        return f"remove {n(ops[1])} into {n(ops[0])}"
    if rec.kind == "reversal":
        return f"reverse {n(ops[0])} -> {n(ops[1])}"
    if rec.kind == "merge":
        return f"merge {n(ops[1])} into {n(ops[0])} as {n(ops[2])}"
    if rec.kind == "product-merge":
        return f"join {n(ops[0])} with {n(ops[1])} as {n(ops[2])}"
    if rec.kind == "split":
        return f"split {n(ops[1])} off {n(ops[0])} leaving {n(ops[2])}"
    return f"{rec.kind} {ops}"


def _table_lines(snap: TableSnapshot) -> list[str]:
    """Rewritten table cells in the restored (with-prior) view."""
    lines = []
    for j in range(snap.cpt.n_rows):
        row = snap.cpt.row_assignment(j)
        cond = ", ".join(f"{p.name}={p.domain[row[p.vid]]}"
                         for p in snap.parent_vars)
        head = f"{snap.var.name} | {cond}" if cond else snap.var.name
        for k, label in enumerate(snap.var.domain):
            lines.append(f"   {head} : {label} = {snap.restored_cell(j, k)}")
    return lines


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (QbnError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
