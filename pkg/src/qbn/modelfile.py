"""Plain-text serialization of learned networks.

A model file extends the network format with one ``prior`` line per
node and one ``cell`` line per stored count pair:

    node FO : fo, not_fo
    edge FO -> LO
    prior FO : uninformed-default 1, 1
    cell FO : fo = 32, 68
    cell LO | FO=fo : lo = 23, 9

Counts render with 17 significant digits so that save followed by load
reproduces the exact floats.
"""

from __future__ import annotations

from pathlib import Path

from .errors import InvalidPriorError, NetworkFormatError, StructureError
from .model import (
    Cpt,
    NetworkStructure,
    PriorPolicy,
    QbnNetwork,
    Variable,
)

__all__ = ["render_model", "parse_model", "save_model", "load_model"]


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def render_model(qbn: QbnNetwork) -> str:
    """Serialize a network; compound variables are not representable."""
    s = qbn.structure
    for vid in s.node_ids():
        if s.var(vid).is_compound:
            raise StructureError(
                f"compound variable {s.var(vid).name} cannot be serialized")
    lines = []
    for vid in s.node_ids():
        v = s.var(vid)
        lines.append(f"node {v.name} : {', '.join(v.domain)}")
    for vid in s.node_ids():
        for p in s.parents_of(vid):
            lines.append(f"edge {s.var(p).name} -> {s.var(vid).name}")
    for vid in s.node_ids():
        pol = qbn.priors[vid]
        lines.append(f"prior {s.var(vid).name} : "
                     f"{pol.kind} {_fmt(pol.alpha)}, {_fmt(pol.omega)}")
    for vid in s.node_ids():
        v = s.var(vid)
        cpt = qbn.cpts[vid]
        for j in range(cpt.n_rows):
            row = cpt.row_assignment(j)
            cond = ", ".join(
                f"{s.var(p).name}={s.var(p).domain[row[p]]}"
                for p in cpt.parent_ids)
            head = f"cell {v.name} | {cond}" if cond else f"cell {v.name}"
            for k, label in enumerate(v.domain):
                lines.append(
                    f"{head} : {label} = "
                    f"{_fmt(cpt.alpha[j, k])}, {_fmt(cpt.omega[j, k])}")
    return "\n".join(lines) + "\n"


def parse_model(text: str) -> QbnNetwork:
    nodes: dict[str, Variable] = {}
    edges: list[tuple[int, str, str]] = []
    prior_lines: list[tuple[int, str]] = []
    cell_lines: list[tuple[int, str]] = []

    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        head, _, rest = line.partition(" ")
        rest = rest.strip()
        if head == "node":
            name, sep, labels = rest.partition(":")
            name = name.strip()
            if not sep or not name:
                raise NetworkFormatError(
                    "node line must be 'node NAME : v1, v2[, ...]'", line_no)
            domain = tuple(v.strip() for v in labels.split(","))
            if any(not v for v in domain):
                raise NetworkFormatError("empty value label", line_no)
            if name in nodes:
                raise NetworkFormatError(f"duplicate node {name}", line_no)
            try:
                nodes[name] = Variable(len(nodes), name, domain)
            except StructureError as exc:
                raise NetworkFormatError(str(exc), line_no) from None
        elif head == "edge":
            src, sep, dst = rest.partition("->")
            if not sep:
                raise NetworkFormatError(
                    "edge line must be 'edge A -> B'", line_no)
            edges.append((line_no, src.strip(), dst.strip()))
        elif head == "prior":
            prior_lines.append((line_no, rest))
        elif head == "cell":
            cell_lines.append((line_no, rest))
        else:
            raise NetworkFormatError(f"unknown directive {head!r}", line_no)

    if not nodes:
        raise NetworkFormatError("model declares no nodes", 1)
    parents: dict[int, list[int]] = {v.vid: [] for v in nodes.values()}
    for line_no, src, dst in edges:
        for name in (src, dst):
            if name not in nodes:
                raise NetworkFormatError(f"unknown node {name}", line_no)
        parents[nodes[dst].vid].append(nodes[src].vid)
    try:
        structure = NetworkStructure(
            {v.vid: v for v in nodes.values()},
            {vid: tuple(ps) for vid, ps in parents.items()})
    except StructureError as exc:
        raise NetworkFormatError(str(exc), 1) from None

    priors: dict[int, PriorPolicy] = {}
    for line_no, rest in prior_lines:
        name, sep, spec = rest.partition(":")
        name = name.strip()
        if not sep or name not in nodes:
            raise NetworkFormatError(
                "prior line must be 'prior NODE : kind alpha, omega'",
                line_no)
        vid = nodes[name].vid
        if vid in priors:
            raise NetworkFormatError(f"duplicate prior for {name}", line_no)
        parts = spec.split(None, 1)
        if len(parts) != 2:
            raise NetworkFormatError("prior needs a kind and counts", line_no)
        kind, counts = parts
        try:
            alpha, omega = _pair(counts, line_no)
            priors[vid] = PriorPolicy(kind, alpha, omega)
        except InvalidPriorError as exc:
            raise NetworkFormatError(str(exc), line_no) from None

    cpts = {vid: Cpt.zeros(vid, structure.parents_of(vid),
                           tuple(structure.var(p).size
                                 for p in structure.parents_of(vid)),
                           structure.var(vid).size)
            for vid in structure.node_ids()}
    seen: set[tuple[int, int, int]] = set()
    for line_no, rest in cell_lines:
        left, sep, value_spec = rest.partition(":")
        if not sep:
            raise NetworkFormatError("cell line is missing ':'", line_no)
        name, bar, cond = left.partition("|")
        name = name.strip()
        if name not in nodes:
            raise NetworkFormatError(f"unknown node {name!r}", line_no)
        var = nodes[name]
        cpt = cpts[var.vid]
        assignment: dict[int, int] = {}
        if bar:
            for item in cond.split(","):
                pname, eq, plabel = item.partition("=")
                pname, plabel = pname.strip(), plabel.strip()
                if not eq or pname not in nodes:
                    raise NetworkFormatError(
                        f"bad parent assignment {item.strip()!r}", line_no)
                pvar = nodes[pname]
                if plabel not in pvar.domain:
                    raise NetworkFormatError(
                        f"{pname} has no value {plabel!r}", line_no)
                if pvar.vid in assignment:
                    raise NetworkFormatError(
                        f"parent {pname} assigned twice", line_no)
                assignment[pvar.vid] = pvar.domain.index(plabel)
        if set(assignment) != set(cpt.parent_ids):
            raise NetworkFormatError(
                f"cell condition must name exactly the parents of {name}",
                line_no)
        label, eq, counts = value_spec.rpartition("=")
        label = label.strip()
        if not eq or label not in var.domain:
            raise NetworkFormatError(
                f"cell value must be one of {', '.join(var.domain)}", line_no)
        j = cpt.row_index(assignment)
        k = var.domain.index(label)
        if (var.vid, j, k) in seen:
            raise NetworkFormatError(
                f"duplicate cell for {name}", line_no)
        seen.add((var.vid, j, k))
        cpt.alpha[j, k], cpt.omega[j, k] = _pair(counts, line_no)

    for vid in structure.node_ids():
        name = structure.var(vid).name
        if vid not in priors:
            raise NetworkFormatError(f"missing prior for {name}", 1)
        cpt = cpts[vid]
        expected = cpt.n_rows * cpt.n_values
        have = sum(1 for v, _, _ in seen if v == vid)
        if have != expected:
            raise NetworkFormatError(
                f"{name} has {have} of {expected} cells", 1)
    return QbnNetwork(structure, cpts, priors)


def _pair(counts: str, line_no: int) -> tuple[float, float]:
    parts = [p.strip() for p in counts.split(",")]
    if len(parts) != 2:
        raise NetworkFormatError("expected 'alpha, omega'", line_no)
    try:
        return float(parts[0]), float(parts[1])
    except ValueError:
        raise NetworkFormatError(
            f"bad count pair {counts.strip()!r}", line_no) from None


def save_model(qbn: QbnNetwork, path) -> None:
    Path(path).write_text(render_model(qbn), encoding="utf-8")


def load_model(path) -> QbnNetwork:
    return parse_model(Path(path).read_text(encoding="utf-8"))
