"""Structure transformations over raw pseudo-count tables.

All four rewrites follow the same reconstruction principle: a joint
count over variables that are not all in one table is estimated by
chaining table counts, dividing by the count of the shared
configuration.  Writing a(x | row) for a raw table cell and D(d, q)
for the sum of the parent table's alpha over every instantiation of
its private parents (d fixed, shared parents q fixed):

  removal   a'(l | p,q,r)   = sum_d a(l | d,q,r) * a1(d | p,q) / D(d,q)
  reversal  the removal table for the child, plus per-cell
            a'(d | l,p,q,r) = a(l | d,q,r) * a1(d | p,q) / D(d,q)
            with omega' = (child's new alpha) - alpha'
  merging   a'((l,d) | p,q,r) = a(l | d,q,r) * a1(d | p,q) / D(d,q)
            with omega' = (row mass) - alpha'
  splitting pure re-aggregation of a compound table's columns

Terms whose denominator D is zero contribute nothing and bump a
diagnostic counter on the record.  Tables entering these functions
must be raw (uninformed priors stripped); learned networks store raw
counts, so no work is needed beyond not adding priors back.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import StructureError
from .model import (
    BetaStat,
    Cpt,
    NetworkStructure,
    PriorPolicy,
    QbnNetwork,
    Variable,
    decode_assignment,
    default_prior_for_joint,
)

__all__ = [
    "ParentPartition",
    "partition_parents",
    "TableSnapshot",
    "TransformRecord",
    "strip_prior",
    "restore_prior",
    "node_removal",
    "arc_reversal",
    "node_merging",
    "node_splitting",
    "product_merge",
    "prune_barren",
]


@dataclass(frozen=True)
class ParentPartition:
    """Parent split around an edge src -> dst.

    v1: parents of src only, v2: shared parents, v3: parents of dst
    only (src itself excluded).  All ascending by id.
    """

    v1: tuple[int, ...]
    v2: tuple[int, ...]
    v3: tuple[int, ...]

    @property
    def combined(self) -> tuple[int, ...]:
        return tuple(sorted(self.v1 + self.v2 + self.v3))


def partition_parents(structure: NetworkStructure, src: int,
                      dst: int) -> ParentPartition:
    if src not in structure.parents_of(dst):
        raise StructureError(
            f"no edge {structure.var(src).name} -> "
            f"{structure.var(dst).name}")
    src_parents = set(structure.parents_of(src))
    dst_parents = set(structure.parents_of(dst)) - {src}
    return ParentPartition(
        v1=tuple(sorted(src_parents - dst_parents)),
        v2=tuple(sorted(src_parents & dst_parents)),
        v3=tuple(sorted(dst_parents - src_parents)),
    )


@dataclass(frozen=True)
class TableSnapshot:
    """A rewritten node's table captured for tracing."""

    var: Variable
    parent_vars: tuple[Variable, ...]
    cpt: Cpt

    def restored_cell(self, j: int, k: int) -> BetaStat:
        """Cell (j, k) with the uninformed default prior of the node's
        current shape added back."""
        return self.cpt.cell(j, k).shifted(
            default_prior_for_joint(self.var.size))


@dataclass(frozen=True)
class TransformRecord:
    """What one transformation did: kind, the node ids it touched, the
    rewritten tables, nodes deleted from the structure, and how many
    zero-denominator terms were dropped."""

    kind: str
    operands: tuple[int, ...]
    rewritten: tuple[TableSnapshot, ...] = ()
    removed_nodes: tuple[int, ...] = ()
    zero_denominators: int = 0

    @property
    def approximate(self) -> bool:
        return self.zero_denominators > 0


def strip_prior(qbn: QbnNetwork, vid: int) -> Cpt:
    """The node's raw table.  Storage is raw already, so this is a
    copy; informed priors were folded into raw at load and stay."""
    return qbn.cpt(vid).copy()


def restore_prior(stat: BetaStat, target_domain_size: int) -> BetaStat:
    """Add the uninformed default prior for a result over a target
    (joint) domain of the given size."""
    return stat.shifted(default_prior_for_joint(target_domain_size))


def _snapshot(structure: NetworkStructure, cpt: Cpt,
              var: Variable) -> TableSnapshot:
    return TableSnapshot(
        var=var,
        parent_vars=tuple(structure.var(p) for p in cpt.parent_ids),
        cpt=cpt.copy(),
    )


class _Weights:
    """Per-row reconstruction weights a1(d | p,q) / D(d,q) for an edge
    src -> dst, with zero-denominator bookkeeping."""

    def __init__(self, qbn: QbnNetwork, src: int, part: ParentPartition):
        self.src_cpt = qbn.cpt(src)
        self.src_size = qbn.var(src).size
        self.v1 = part.v1
        self.v2 = part.v2
        self.v1_sizes = [qbn.var(v).size for v in part.v1]
        self.zero_hits = 0
        self._denoms: dict[tuple[int, ...], np.ndarray] = {}

    def _denominator(self, assign: dict[int, int]) -> np.ndarray:
        key = tuple(assign[v] for v in self.v2)
        cached = self._denoms.get(key)
        if cached is not None:
            return cached
        total = np.zeros(self.src_size)
        n_v1 = 1
        for s in self.v1_sizes:
            n_v1 *= s
        for code in range(n_v1):
            digits = decode_assignment(code, self.v1_sizes)
            row_assign = dict(zip(self.v1, digits))
            row_assign.update({v: assign[v] for v in self.v2})
            j = self.src_cpt.row_index(row_assign)
            total += self.src_cpt.alpha[j]
        self._denoms[key] = total
        return total

    def weights(self, assign: dict[int, int]) -> np.ndarray:
        """Weight per src value for a full assignment of v1 and v2."""
        denom = self._denominator(assign)
        j = self.src_cpt.row_index(assign)
        numer = self.src_cpt.alpha[j]
        out = np.zeros(self.src_size)
        for d in range(self.src_size):
            if denom[d] == 0.0:
                self.zero_hits += 1
            else:
                out[d] = numer[d] / denom[d]
        return out


def _new_cpt(qbn: QbnNetwork, owner: int, parent_ids: tuple[int, ...],
             n_values: int, sizes: dict[int, int] | None = None) -> Cpt:
    def size_of(p: int) -> int:
        if sizes and p in sizes:
            return sizes[p]
        return qbn.var(p).size

    return Cpt.zeros(owner, parent_ids,
                     tuple(size_of(p) for p in parent_ids), n_values)


def node_removal(qbn: QbnNetwork, child: int, parent: int
                 ) -> tuple[QbnNetwork, TransformRecord]:
    """Marginalize ``parent`` out of ``child``'s table.

    Requires the edge and that the parent has no other children.  The
    child inherits the parent's own parents; the parent is deleted
    outright when that leaves it with neither parents nor children,
    otherwise it stays behind childless.
    """
    structure = qbn.structure
    if structure.children_of(parent) != (child,):
        raise StructureError(
            f"{structure.var(parent).name} must have "
            f"{structure.var(child).name} as its only child")
    part = partition_parents(structure, parent, child)
    child_cpt = qbn.cpt(child)
    new_parents = part.combined
    new_cpt = _new_cpt(qbn, child, new_parents, child_cpt.n_values)
    w = _Weights(qbn, parent, part)
    for j in range(new_cpt.n_rows):
        assign = new_cpt.row_assignment(j)
        weights = w.weights(assign)
        for d in range(qbn.var(parent).size):
            if weights[d] == 0.0:
                continue
            old_assign = {parent: d}
            old_assign.update({v: assign[v] for v in part.v2 + part.v3})
            old_j = child_cpt.row_index(old_assign)
            new_cpt.alpha[j] += child_cpt.alpha[old_j] * weights[d]
            new_cpt.omega[j] += child_cpt.omega[old_j] * weights[d]

    variables = dict(structure.variables)
    parent_map = dict(structure.parents)
    parent_map[child] = new_parents
    cpts = dict(qbn.cpts)
    priors = dict(qbn.priors)
    cpts[child] = new_cpt
    removed: tuple[int, ...] = ()
    if not structure.parents_of(parent):
        del variables[parent], parent_map[parent]
        del cpts[parent], priors[parent]
        removed = (parent,)
    new_structure = NetworkStructure(variables, parent_map)
    out = QbnNetwork(new_structure, cpts, priors)
    record = TransformRecord(
        kind="removal",
        operands=(child, parent),
        rewritten=(_snapshot(new_structure, new_cpt, out.var(child)),),
        removed_nodes=removed,
        zero_denominators=w.zero_hits,
    )
    return out, record


def arc_reversal(qbn: QbnNetwork, src: int, dst: int
                 ) -> tuple[QbnNetwork, TransformRecord]:
    """Flip the edge src -> dst, rewriting both tables.

    The destination gets the removal table over the combined parents;
    the source becomes a child of the destination, its new cell being
    the single reconstruction term for its value, with omega taken as
    the destination's new alpha minus that term.  Requires that no
    other directed path src -> dst exists.
    """
    structure = qbn.structure
    if src not in structure.parents_of(dst):
        raise StructureError(
            f"no edge {structure.var(src).name} -> "
            f"{structure.var(dst).name}")
    if structure.has_path(src, dst, skip_edge=(src, dst)):
        raise StructureError(
            f"another path {structure.var(src).name} -> "
            f"{structure.var(dst).name} exists; reversal would cycle")
    part = partition_parents(structure, src, dst)
    dst_cpt = qbn.cpt(dst)
    src_size = qbn.var(src).size

    new_dst_parents = part.combined
    new_dst_cpt = _new_cpt(qbn, dst, new_dst_parents, dst_cpt.n_values)
    new_src_parents = tuple(sorted(new_dst_parents + (dst,)))
    new_src_cpt = _new_cpt(qbn, src, new_src_parents, src_size)

    w = _Weights(qbn, src, part)
    for j in range(new_dst_cpt.n_rows):
        assign = new_dst_cpt.row_assignment(j)
        weights = w.weights(assign)
        # terms[d, l]: reconstruction of the joint (src=d, dst=l) count
        terms = np.zeros((src_size, dst_cpt.n_values))
        omega_terms = np.zeros_like(terms)
        for d in range(src_size):
            if weights[d] == 0.0:
                continue
            old_assign = {src: d}
            old_assign.update({v: assign[v] for v in part.v2 + part.v3})
            old_j = dst_cpt.row_index(old_assign)
            terms[d] = dst_cpt.alpha[old_j] * weights[d]
            omega_terms[d] = dst_cpt.omega[old_j] * weights[d]
        new_dst_cpt.alpha[j] = terms.sum(axis=0)
        new_dst_cpt.omega[j] = omega_terms.sum(axis=0)
        for l in range(dst_cpt.n_values):
            src_assign = dict(assign)
            src_assign[dst] = l
            sj = new_src_cpt.row_index(src_assign)
            new_src_cpt.alpha[sj] = terms[:, l]
            new_src_cpt.omega[sj] = new_dst_cpt.alpha[j, l] - terms[:, l]

    parent_map = dict(structure.parents)
    parent_map[dst] = new_dst_parents
    parent_map[src] = new_src_parents
    new_structure = NetworkStructure(dict(structure.variables), parent_map)
    cpts = dict(qbn.cpts)
    cpts[dst] = new_dst_cpt
    cpts[src] = new_src_cpt
    out = QbnNetwork(new_structure, cpts, dict(qbn.priors))
    record = TransformRecord(
        kind="reversal",
        operands=(src, dst),
        rewritten=(
            _snapshot(new_structure, new_dst_cpt, out.var(dst)),
            _snapshot(new_structure, new_src_cpt, out.var(src)),
        ),
        zero_denominators=w.zero_hits,
    )
    return out, record


def node_merging(qbn: QbnNetwork, child: int, parent: int
                 ) -> tuple[QbnNetwork, TransformRecord]:
    """Replace the pair (child, parent) joined by an edge with one
    compound node over their joint domain.

    The compound cell for (child=l, parent=d) is the reconstructed
    joint count; omega is the rest of the row's mass.  The child must
    be childless and the parent's only child, so no third table refers
    to either node.
    """
    structure = qbn.structure
    if structure.children_of(parent) != (child,):
        raise StructureError(
            f"{structure.var(parent).name} must have "
            f"{structure.var(child).name} as its only child")
    if structure.children_of(child):
        raise StructureError(
            f"{structure.var(child).name} must be childless to merge")
    part = partition_parents(structure, parent, child)
    child_var = qbn.var(child)
    parent_var = qbn.var(parent)
    child_cpt = qbn.cpt(child)
    parent_size = parent_var.size

    new_vid = max(structure.variables) + 1
    compound = Variable.compound(new_vid, (child_var, parent_var))
    new_parents = part.combined
    new_cpt = _new_cpt(qbn, new_vid, new_parents, compound.size)

    w = _Weights(qbn, parent, part)
    for j in range(new_cpt.n_rows):
        assign = new_cpt.row_assignment(j)
        weights = w.weights(assign)
        for d in range(parent_size):
            if weights[d] == 0.0:
                continue
            old_assign = {parent: d}
            old_assign.update({v: assign[v] for v in part.v2 + part.v3})
            old_j = child_cpt.row_index(old_assign)
            for l in range(child_cpt.n_values):
                k = compound.factor_value_index(
                    _digits_for(compound, child_var, l, parent_var, d))
                new_cpt.alpha[j, k] = child_cpt.alpha[old_j, l] * weights[d]
        mass = new_cpt.alpha[j].sum()
        new_cpt.omega[j] = mass - new_cpt.alpha[j]

    variables = dict(structure.variables)
    parent_map = dict(structure.parents)
    for vid in (child, parent):
        del variables[vid], parent_map[vid]
    variables[new_vid] = compound
    parent_map[new_vid] = new_parents
    cpts = dict(qbn.cpts)
    priors = dict(qbn.priors)
    for vid in (child, parent):
        del cpts[vid], priors[vid]
    cpts[new_vid] = new_cpt
    priors[new_vid] = PriorPolicy.default_for(compound.size)
    new_structure = NetworkStructure(variables, parent_map)
    out = QbnNetwork(new_structure, cpts, priors)
    record = TransformRecord(
        kind="merge",
        operands=(child, parent, new_vid),
        rewritten=(_snapshot(new_structure, new_cpt, compound),),
        removed_nodes=(child, parent),
        zero_denominators=w.zero_hits,
    )
    return out, record


def _digits_for(compound: Variable, a_var: Variable, a_val: int,
                b_var: Variable, b_val: int) -> dict[int, int]:
    digits: dict[int, int] = {}
    for var, val in ((a_var, a_val), (b_var, b_val)):
        if var.is_compound:
            digits.update(var.factor_digits(val))
        else:
            digits[var.vid] = val
    return digits


def product_merge(qbn: QbnNetwork, first: int, second: int
                  ) -> tuple[QbnNetwork, TransformRecord]:
    """Join two parentless, childless nodes into one compound node.

    With no connecting structure the network treats the pair as
    independent, so the joint cell is the product of the marginal
    alphas scaled by the second node's total mass.
    """
    structure = qbn.structure
    for vid in (first, second):
        if structure.parents_of(vid) or structure.children_of(vid):
            raise StructureError(
                f"{structure.var(vid).name} must be isolated to join")
    a_var, b_var = qbn.var(first), qbn.var(second)
    a_cpt, b_cpt = qbn.cpt(first), qbn.cpt(second)
    new_vid = max(structure.variables) + 1
    compound = Variable.compound(new_vid, (a_var, b_var))
    new_cpt = Cpt.zeros(new_vid, (), (), compound.size)
    total_b = float(b_cpt.alpha[0].sum())
    zero_hits = 0
    if total_b == 0.0:
        zero_hits = 1
    else:
        for la in range(a_var.size):
            for lb in range(b_var.size):
                k = compound.factor_value_index(
                    _digits_for(compound, a_var, la, b_var, lb))
                new_cpt.alpha[0, k] = (a_cpt.alpha[0, la] *
                                       b_cpt.alpha[0, lb] / total_b)
    mass = new_cpt.alpha[0].sum()
    new_cpt.omega[0] = mass - new_cpt.alpha[0]

    variables = dict(structure.variables)
    parent_map = dict(structure.parents)
    for vid in (first, second):
        del variables[vid], parent_map[vid]
    variables[new_vid] = compound
    parent_map[new_vid] = ()
    cpts = dict(qbn.cpts)
    priors = dict(qbn.priors)
    for vid in (first, second):
        del cpts[vid], priors[vid]
    cpts[new_vid] = new_cpt
    priors[new_vid] = PriorPolicy.default_for(compound.size)
    new_structure = NetworkStructure(variables, parent_map)
    out = QbnNetwork(new_structure, cpts, priors)
    record = TransformRecord(
        kind="product-merge",
        operands=(first, second, new_vid),
        rewritten=(_snapshot(new_structure, new_cpt, compound),),
        removed_nodes=(first, second),
        zero_denominators=zero_hits,
    )
    return out, record


def node_splitting(qbn: QbnNetwork, compound_vid: int, keep: int
                   ) -> tuple[QbnNetwork, TransformRecord]:
    """Split factor ``keep`` out of a childless compound node.

    The kept factor becomes a parent of the remainder.  Its table sums
    the compound's columns over the other factors; the remainder's
    cells are the compound's cells re-indexed, with omega the sum of
    the sibling cells sharing the kept value.  Both outputs are exact
    re-aggregations.
    """
    structure = qbn.structure
    var = qbn.var(compound_vid)
    if not var.is_compound:
        raise StructureError(f"{var.name} is not a compound node")
    if structure.children_of(compound_vid):
        raise StructureError(f"{var.name} must be childless to split")
    factor_ids = tuple(f.vid for f in var.factors)
    if keep not in factor_ids:
        raise StructureError(
            f"{var.name} has no factor with id {keep}")
    keep_var = next(f for f in var.factors if f.vid == keep)
    rest_factors = tuple(f for f in var.factors if f.vid != keep)
    if len(rest_factors) == 0:
        raise StructureError("cannot split a single-factor node")
    if len(rest_factors) == 1:
        rest_var = rest_factors[0]
    else:
        rest_var = Variable.compound(compound_vid, rest_factors)
    rest_vid = rest_var.vid

    cpt = qbn.cpt(compound_vid)
    parent_ids = cpt.parent_ids
    keep_cpt = _new_cpt(qbn, keep, parent_ids, keep_var.size,
                        sizes=_parent_sizes(qbn, cpt))
    rest_parent_ids = tuple(sorted(parent_ids + (keep,)))
    sizes = _parent_sizes(qbn, cpt)
    sizes[keep] = keep_var.size
    rest_cpt = Cpt.zeros(rest_vid, rest_parent_ids,
                         tuple(sizes[p] for p in rest_parent_ids),
                         rest_var.size)

    for j in range(cpt.n_rows):
        assign = cpt.row_assignment(j)
        # regroup the compound row by kept value
        by_keep = np.zeros((keep_var.size, rest_var.size))
        for v in range(cpt.n_values):
            digits = var.factor_digits(v)
            k = digits[keep]
            l = rest_var.factor_value_index(digits) if \
                rest_var.is_compound else digits[rest_vid]
            by_keep[k, l] = cpt.alpha[j, v]
        col_mass = by_keep.sum(axis=1)
        total = col_mass.sum()
        keep_cpt.alpha[j] = col_mass
        keep_cpt.omega[j] = total - col_mass
        for k in range(keep_var.size):
            r_assign = dict(assign)
            r_assign[keep] = k
            rj = rest_cpt.row_index(r_assign)
            rest_cpt.alpha[rj] = by_keep[k]
            rest_cpt.omega[rj] = col_mass[k] - by_keep[k]

    variables = dict(structure.variables)
    parent_map = dict(structure.parents)
    del variables[compound_vid], parent_map[compound_vid]
    variables[keep] = keep_var
    parent_map[keep] = parent_ids
    variables[rest_vid] = rest_var
    parent_map[rest_vid] = rest_parent_ids
    cpts = dict(qbn.cpts)
    priors = dict(qbn.priors)
    del cpts[compound_vid], priors[compound_vid]
    cpts[keep] = keep_cpt
    priors[keep] = PriorPolicy.default_for(keep_var.size)
    cpts[rest_vid] = rest_cpt
    priors[rest_vid] = PriorPolicy.default_for(rest_var.size)
    new_structure = NetworkStructure(variables, parent_map)
    out = QbnNetwork(new_structure, cpts, priors)
    record = TransformRecord(
        kind="split",
        operands=(compound_vid, keep, rest_vid),
        rewritten=(
            _snapshot(new_structure, keep_cpt, keep_var),
            _snapshot(new_structure, rest_cpt, rest_var),
        ),
        removed_nodes=(compound_vid,),
    )
    return out, record


def _parent_sizes(qbn: QbnNetwork, cpt: Cpt) -> dict[int, int]:
    return dict(zip(cpt.parent_ids, cpt.parent_sizes))


def prune_barren(qbn: QbnNetwork, vid: int
                 ) -> tuple[QbnNetwork, TransformRecord]:
    """Delete a childless node and its table.

    Dropping a node no other table conditions on leaves every
    remaining count untouched, so this is exact marginalization.
    """
    structure = qbn.structure
    if structure.children_of(vid):
        raise StructureError(
            f"{structure.var(vid).name} has children and cannot be pruned")
    variables = dict(structure.variables)
    parent_map = dict(structure.parents)
    del variables[vid], parent_map[vid]
    cpts = dict(qbn.cpts)
    priors = dict(qbn.priors)
    del cpts[vid], priors[vid]
    out = QbnNetwork(NetworkStructure(variables, parent_map), cpts, priors)
    record = TransformRecord(
        kind="prune",
        operands=(vid,),
        removed_nodes=(vid,),
    )
    return out, record
