"""Query answering by planned structure transformation.

A query P(targets | evidence) is answered in stages:

1. Barren pruning: childless nodes outside the query are deleted.
2. Elimination: every remaining non-query node is marginalized away in
   topological order; a node with several children first has arcs
   reversed until one child remains, then it is removed into it.
3. Absorption: within each weakly connected component the query nodes
   are merged into one compound target (a childless node, preferring a
   target variable, is the seed); disconnected components are reduced
   separately and joined with a product merge.
4. Conditioning: every evidence variable is split back off the
   compound, leaving the queried conditional as an explicit table
   cell.

The count rewrites behind removal, reversal and merging are only exact
when the two nodes' exclusive parents are independent given the parent
and the shared parents, so stages 2 and 3 search the possible reversal
orders for one whose every step is certified exact by d-separation,
falling back to an uncertified order only when none exists.

Queries that already name an explicitly stored cell (single target,
evidence exactly the node's parents) take an empty plan and read the
stored with-prior cell directly.
"""

from __future__ import annotations

import heapq
import itertools
from dataclasses import dataclass, field

from .errors import PlanExecutionError, QueryParseError, StructureError
from .model import (
    InferenceResult,
    NetworkStructure,
    QbnNetwork,
    Query,
)
from .transforms import (
    TransformRecord,
    arc_reversal,
    node_merging,
    node_removal,
    node_splitting,
    product_merge,
    prune_barren,
    restore_prior,
)

__all__ = [
    "parse_query",
    "PlanStep",
    "Plan",
    "plan",
    "execute",
    "infer",
]


def parse_query(text: str, structure: NetworkStructure) -> Query:
    """Parse ``P(Var=val[, ...] [| Var=val[, ...]])``.

    Whitespace is ignored everywhere; names and value labels are
    matched case-sensitively against the structure.
    """
    s = "".join(text.split())
    if not s.startswith("P(") or not s.endswith(")"):
        raise QueryParseError(f"query must look like P(...): {text!r}")
    body = s[2:-1]
    if not body:
        raise QueryParseError("query is empty")
    if body.count("|") > 1:
        raise QueryParseError("query has more than one '|'")
    target_part, _, evidence_part = body.partition("|")

    def parse_side(part: str, side: str) -> tuple[tuple[int, int], ...]:
        if not part:
            if side == "targets":
                raise QueryParseError("query has no target assignments")
            return ()
        out = []
        for item in part.split(","):
            if "=" not in item:
                raise QueryParseError(f"missing '=' in {item!r}")
            name, _, label = item.partition("=")
            if not name or not label:
                raise QueryParseError(f"malformed assignment {item!r}")
            try:
                var = structure.by_name(name)
            except StructureError:
                raise QueryParseError(f"unknown variable {name!r}") from None
            if label not in var.domain:
                raise QueryParseError(
                    f"variable {name} has no value {label!r}")
            out.append((var.vid, var.domain.index(label)))
        return tuple(out)

    targets = parse_side(target_part, "targets")
    evidence = parse_side(evidence_part, "evidence")
    try:
        return Query(targets=targets, evidence=evidence)
    except StructureError as exc:
        raise QueryParseError(str(exc)) from None


@dataclass(frozen=True)
class PlanStep:
    """One planned transformation: a kind tag plus its operand ids.

    Operand layout by kind:
      prune          (node,)
      removal        (child, parent)
      reversal       (src, dst)
      merge          (child, parent, new compound id)
      product-merge  (first, second, new compound id)
      split          (compound, kept factor, remainder id)
    """

    kind: str
    operands: tuple[int, ...]


@dataclass(frozen=True)
class Plan:
    """Ordered steps, the node holding the answer, and every node
    deleted along the way."""

    steps: tuple[PlanStep, ...]
    target: int
    pruned: tuple[int, ...] = ()


class _Sim:
    """Structure-only mirror of the network used while planning.

    Mutation rules replicate the transforms exactly, including the
    rule for allocating compound ids (max current id plus one), so a
    plan simulated here replays identically on the real network.
    """

    def __init__(self, structure: NetworkStructure):
        self.parents: dict[int, set[int]] = {
            v: set(structure.parents_of(v)) for v in structure.node_ids()}
        self.factors: dict[int, tuple[int, ...]] = {
            v: (v,) for v in structure.node_ids()}

    def copy(self) -> "_Sim":
        dup = _Sim.__new__(_Sim)
        dup.parents = {v: set(ps) for v, ps in self.parents.items()}
        dup.factors = dict(self.factors)
        return dup

    def nodes(self) -> list[int]:
        return sorted(self.parents)

    def children(self, vid: int) -> list[int]:
        return sorted(c for c, ps in self.parents.items() if vid in ps)

    def topological_order(self) -> list[int]:
        indeg = {v: len(ps) for v, ps in self.parents.items()}
        ready = [v for v, d in indeg.items() if d == 0]
        heapq.heapify(ready)
        order = []
        while ready:
            v = heapq.heappop(ready)
            order.append(v)
            for c in self.children(v):
                indeg[c] -= 1
                if indeg[c] == 0:
                    heapq.heappush(ready, c)
        return order

    def has_path(self, src: int, dst: int,
                 skip_edge: tuple[int, int] | None = None) -> bool:
        stack = [src]
        seen = set()
        while stack:
            v = stack.pop()
            if v == dst:
                return True
            if v in seen:
                continue
            seen.add(v)
            for c in self.children(v):
                if skip_edge is not None and (v, c) == skip_edge:
                    continue
                stack.append(c)
        return False

    def component_of(self, vid: int) -> set[int]:
        seen = {vid}
        stack = [vid]
        while stack:
            v = stack.pop()
            for n in list(self.parents[v]) + self.children(v):
                if n not in seen:
                    seen.add(n)
                    stack.append(n)
        return seen

    def d_separated(self, xs: set[int], ys: set[int],
                    zs: set[int]) -> bool:
        """Reachability test on the moralized ancestral graph."""
        closure: set[int] = set()
        stack = list(xs | ys | zs)
        while stack:
            v = stack.pop()
            if v in closure:
                continue
            closure.add(v)
            stack.extend(self.parents[v])
        adj: dict[int, set[int]] = {v: set() for v in closure}
        for v in closure:
            ps = self.parents[v]
            for p in ps:
                adj[v].add(p)
                adj[p].add(v)
            for a in ps:
                for b in ps:
                    if a != b:
                        adj[a].add(b)
        reached = set(xs) - zs
        stack = list(reached)
        while stack:
            v = stack.pop()
            for n in adj[v]:
                if n not in reached and n not in zs:
                    reached.add(n)
                    stack.append(n)
        return not (reached & ys)

    def reverse(self, src: int, dst: int):
        combined = (self.parents[src] | self.parents[dst]) - {src}
        self.parents[dst] = set(combined)
        self.parents[src] = combined | {dst}

    def remove(self, child: int, parent: int) -> bool:
        """Returns True when the parent survives as a childless node."""
        self.parents[child] = \
            (self.parents[child] - {parent}) | self.parents[parent]
        if self.parents[parent]:
            return True
        del self.parents[parent], self.factors[parent]
        return False

    def prune(self, vid: int):
        del self.parents[vid], self.factors[vid]

    def merge(self, child: int, parent: int) -> int:
        new_vid = max(self.parents) + 1
        combined = (self.parents[child] | self.parents[parent]) - {parent}
        factors = self.factors[child] + self.factors[parent]
        del self.parents[child], self.factors[child]
        del self.parents[parent], self.factors[parent]
        self.parents[new_vid] = combined
        self.factors[new_vid] = factors
        return new_vid

    def product_merge(self, first: int, second: int) -> int:
        new_vid = max(self.parents) + 1
        factors = self.factors[first] + self.factors[second]
        del self.parents[first], self.factors[first]
        del self.parents[second], self.factors[second]
        self.parents[new_vid] = set()
        self.factors[new_vid] = factors
        return new_vid

    def split(self, compound: int, keep: int) -> int:
        rest = tuple(f for f in self.factors[compound] if f != keep)
        rest_vid = rest[0] if len(rest) == 1 else compound
        base_parents = set(self.parents[compound])
        del self.parents[compound], self.factors[compound]
        self.parents[keep] = set(base_parents)
        self.factors[keep] = (keep,)
        self.parents[rest_vid] = base_parents | {keep}
        self.factors[rest_vid] = rest
        return rest_vid


def _count_exact(sim: _Sim, parent: int, child: int) -> bool:
    """True when rewriting ``child`` against ``parent`` preserves counts.

    Removal, reversal and merging all redistribute the child's counts by
    weights conditioned on the parent and the shared parents only.  That
    reconstruction is exact when the parent's exclusive parents tell us
    nothing new about the child's exclusive parents, which structure
    alone can certify via d-separation.
    """
    others = sim.parents[child] - {parent}
    own = sim.parents[parent]
    v1 = own - others
    v3 = others - own
    if not v1 or not v3:
        return True
    return sim.d_separated(v1, v3, (own & others) | {parent})


def plan(structure: NetworkStructure, query: Query) -> Plan:
    """Derive the transformation sequence answering ``query``."""
    q_ids = set(query.target_ids) | set(query.evidence_ids)
    for vid in q_ids:
        if vid not in structure.variables:
            raise StructureError(f"query names unknown node id {vid}")
    for vid, k in query.targets + query.evidence:
        if not 0 <= k < structure.var(vid).size:
            raise StructureError(
                f"value index {k} out of range for "
                f"{structure.var(vid).name}")

    # Explicitly stored cell: empty plan, direct lookup.
    if len(query.targets) == 1:
        t = query.targets[0][0]
        if set(query.evidence_ids) == set(structure.parents_of(t)):
            return Plan(steps=(), target=t)

    built, certified = _staged_plan(structure, query, q_ids)
    if not certified:
        searched = _search_plan(structure, query, q_ids)
        if searched is not None:
            return searched
    return built


def _prune_sweep(sim: _Sim, record, pruned: list[int], q_ids: set[int]):
    while True:
        barren = [v for v in sim.nodes()
                  if not sim.children(v)
                  and not (set(sim.factors[v]) & q_ids)]
        if not barren:
            return
        v = barren[0]
        record("prune", v)
        pruned.append(v)
        sim.prune(v)


def _absorb_and_condition(sim: _Sim, record, query: Query,
                          flags: dict) -> int:
    """Merge each component into one compound, join components, then
    split the evidence variables back off.  Returns the target id."""

    def simulate_reversals(parent, order):
        trial = sim.copy()
        for c in order:
            if trial.has_path(parent, c, skip_edge=(parent, c)):
                return None
            if not _count_exact(trial, parent, c):
                return None
            trial.reverse(parent, c)
        return trial

    def greedy_sole_child(parent, keep):
        while True:
            kids = [c for c in sim.children(parent) if c != keep]
            if not kids:
                return
            safe = [c for c in kids
                    if not sim.has_path(parent, c, skip_edge=(parent, c))]
            exact = [c for c in safe if _count_exact(sim, parent, c)]
            if not exact:
                flags["certified"] = False
            c = exact[0] if exact else safe[0]
            record("reversal", parent, c)
            sim.reverse(parent, c)

    def reduce_component(seed: int) -> int:
        target = seed
        while sim.parents[target]:
            chosen = None
            for p in sorted(sim.parents[target]):
                rest = [c for c in sim.children(p) if c != target]
                if len(rest) > 6:
                    continue
                for order in itertools.permutations(rest):
                    trial = simulate_reversals(p, order)
                    if trial is not None and _count_exact(trial, p, target):
                        chosen = (p, order)
                        break
                if chosen is not None:
                    break
            if chosen is None:
                p = min(sim.parents[target])
                greedy_sole_child(p, keep=target)
                if not _count_exact(sim, p, target):
                    flags["certified"] = False
            else:
                p, order = chosen
                for c in order:
                    record("reversal", p, c)
                    sim.reverse(p, c)
            new_vid = sim.merge(target, p)
            record("merge", target, p, new_vid)
            target = new_vid
        return target

    def pick_seed(candidates: list[int]) -> int:
        childless = [v for v in candidates if not sim.children(v)]
        preferred = [v for v in childless
                     if set(sim.factors[v]) & set(query.target_ids)]
        return min(preferred) if preferred else min(childless)

    target = reduce_component(pick_seed(sim.nodes()))
    while len(sim.parents) > 1:
        rest = [v for v in sim.nodes() if v != target]
        component = sim.component_of(rest[0]) if rest else set()
        other = reduce_component(pick_seed(sorted(component)))
        new_vid = sim.product_merge(target, other)
        record("product-merge", target, other, new_vid)
        target = new_vid

    for ev in sorted(query.evidence_ids):
        rest_vid = sim.split(target, ev)
        record("split", target, ev, rest_vid)
        target = rest_vid
    return target


def _staged_plan(structure: NetworkStructure, query: Query,
                 q_ids: set[int]) -> tuple[Plan, bool]:
    """Fixed-strategy planner.  Returns the plan and whether every step
    was certified count-exact; an uncertified plan is still sound."""
    sim = _Sim(structure)
    steps: list[PlanStep] = []
    pruned: list[int] = []
    flags = {"certified": True}

    def record(kind: str, *operands: int):
        steps.append(PlanStep(kind, tuple(operands)))

    def is_query(vid: int) -> bool:
        return bool(set(sim.factors[vid]) & q_ids)

    def simulate_reversals(parent, order):
        trial = sim.copy()
        for c in order:
            if trial.has_path(parent, c, skip_edge=(parent, c)):
                return None
            if not _count_exact(trial, parent, c):
                return None
            trial.reverse(parent, c)
        return trial

    def eliminate(z: int):
        survivor = None
        kids = sim.children(z)
        if len(kids) <= 7:
            for cand in kids:
                rest = [c for c in kids if c != cand]
                for order in itertools.permutations(rest):
                    trial = simulate_reversals(z, order)
                    if trial is not None and _count_exact(trial, z, cand):
                        for c in order:
                            record("reversal", z, c)
                            sim.reverse(z, c)
                        survivor = cand
                        break
                if survivor is not None:
                    break
        if survivor is None:
            # no certified order exists; settle for any safe one
            while len(sim.children(z)) > 1:
                kids = sim.children(z)
                safe = [c for c in kids
                        if not sim.has_path(z, c, skip_edge=(z, c))]
                exact = [c for c in safe if _count_exact(sim, z, c)]
                if not exact:
                    flags["certified"] = False
                c = exact[0] if exact else safe[0]
                record("reversal", z, c)
                sim.reverse(z, c)
            survivor = sim.children(z)[0]
            if not _count_exact(sim, z, survivor):
                flags["certified"] = False
        record("removal", survivor, z)
        if sim.remove(survivor, z):
            record("prune", z)
            pruned.append(z)
            sim.prune(z)

    _prune_sweep(sim, record, pruned, q_ids)

    # Eliminate non-query nodes, most ancestral first.
    while True:
        order = sim.topological_order()
        non_query = [v for v in order if not is_query(v)]
        if not non_query:
            break
        z = non_query[0]
        if not sim.children(z):
            record("prune", z)
            pruned.append(z)
            sim.prune(z)
        else:
            eliminate(z)
        _prune_sweep(sim, record, pruned, q_ids)

    target = _absorb_and_condition(sim, record, query, flags)
    the_plan = Plan(steps=tuple(steps), target=target, pruned=tuple(pruned))
    return the_plan, flags["certified"]


def _search_plan(structure: NetworkStructure, query: Query,
                 q_ids: set[int]) -> Plan | None:
    """Breadth-first search for a plan whose every step is certified
    count-exact.  Only attempted on small graphs; returns None when the
    graph is too large or no certified route exists."""
    sim = _Sim(structure)
    steps: list[PlanStep] = []
    pruned: list[int] = []

    def record(kind: str, *operands: int):
        steps.append(PlanStep(kind, tuple(operands)))

    _prune_sweep(sim, record, pruned, q_ids)
    if len(sim.parents) > 7:
        return None
    route = _certified_route(sim, q_ids)
    if route is None:
        return None
    for kind, operands in route:
        record(kind, *operands)
        if kind == "prune":
            pruned.append(operands[0])
            sim.prune(operands[0])
        elif kind == "removal":
            sim.remove(*operands)
        elif kind == "reversal":
            sim.reverse(*operands)
        elif kind == "merge":
            sim.merge(operands[0], operands[1])

    flags = {"certified": True}
    target = _absorb_and_condition(sim, record, query, flags)
    return Plan(steps=tuple(steps), target=target, pruned=tuple(pruned))


def _certified_route(start: _Sim, q_ids: set[int],
                     max_expansions: int = 20000):
    """Sequence of certified moves reducing ``start`` to isolated
    query-factor nodes, or None when none is found.  Best-first on
    (nodes, edges) so progress moves are tried before reshaping ones;
    ties break by insertion order, keeping the result deterministic."""

    def is_query(s: _Sim, v: int) -> bool:
        return bool(set(s.factors[v]) & q_ids)

    def state_key(s: _Sim):
        return tuple(sorted(
            (v, tuple(sorted(ps)), s.factors[v])
            for v, ps in s.parents.items()))

    def is_goal(s: _Sim) -> bool:
        return (all(not ps for ps in s.parents.values())
                and all(is_query(s, v) for v in s.parents))

    def successors(s: _Sim):
        barren = [v for v in s.nodes()
                  if not s.children(v) and not is_query(s, v)]
        if barren:
            nxt = s.copy()
            nxt.prune(barren[0])
            yield ("prune", (barren[0],)), nxt
            return
        for z in s.nodes():
            if is_query(s, z):
                continue
            kids = s.children(z)
            if len(kids) == 1 and _count_exact(s, z, kids[0]):
                nxt = s.copy()
                nxt.remove(kids[0], z)
                yield ("removal", (kids[0], z)), nxt
        for j in s.nodes():
            if not is_query(s, j):
                continue
            kids = s.children(j)
            if len(kids) != 1:
                continue
            c = kids[0]
            if s.children(c) or not is_query(s, c):
                continue
            if _count_exact(s, j, c):
                nxt = s.copy()
                new_vid = nxt.merge(c, j)
                yield ("merge", (c, j, new_vid)), nxt
        for v in s.nodes():
            for u in sorted(s.parents[v]):
                if s.has_path(u, v, skip_edge=(u, v)):
                    continue
                if _count_exact(s, u, v):
                    nxt = s.copy()
                    nxt.reverse(u, v)
                    yield ("reversal", (u, v)), nxt

    def priority(s: _Sim) -> tuple[int, int]:
        return (len(s.parents), sum(len(ps) for ps in s.parents.values()))

    seq = itertools.count()
    heap = [(priority(start), next(seq), start, [])]
    seen = {state_key(start)}
    expansions = 0
    while heap:
        _, _, s, path = heapq.heappop(heap)
        if is_goal(s):
            return path
        expansions += 1
        if expansions > max_expansions:
            return None
        for move, nxt in successors(s):
            k = state_key(nxt)
            if k in seen:
                continue
            seen.add(k)
            heapq.heappush(heap, (priority(nxt), next(seq), nxt,
                                  path + [move]))
    return None


def execute(qbn: QbnNetwork, the_plan: Plan
            ) -> tuple[QbnNetwork, tuple[TransformRecord, ...]]:
    """Apply a plan's steps in order, collecting their records.

    Every precondition is re-checked by the transforms themselves; a
    violation aborts with the records gathered so far attached.
    """
    records: list[TransformRecord] = []
    current = qbn
    for step in the_plan.steps:
        try:
            if step.kind == "prune":
                current, rec = prune_barren(current, *step.operands)
            elif step.kind == "removal":
                current, rec = node_removal(current, *step.operands)
            elif step.kind == "reversal":
                current, rec = arc_reversal(current, *step.operands)
            elif step.kind == "merge":
                child, parent, planned_id = step.operands
                current, rec = node_merging(current, child, parent)
                _check_new_id(rec.operands[2], planned_id, records)
            elif step.kind == "product-merge":
                first, second, planned_id = step.operands
                current, rec = product_merge(current, first, second)
                _check_new_id(rec.operands[2], planned_id, records)
            elif step.kind == "split":
                compound, keep, planned_id = step.operands
                current, rec = node_splitting(current, compound, keep)
                _check_new_id(rec.operands[2], planned_id, records)
            else:
                raise PlanExecutionError(
                    f"unknown step kind {step.kind!r}", tuple(records))
        except (StructureError, KeyError) as exc:
            raise PlanExecutionError(
                f"step {step.kind}{step.operands} failed: {exc}",
                tuple(records)) from exc
        records.append(rec)
    return current, tuple(records)


def _check_new_id(actual: int, planned: int, records: list):
    if actual != planned:
        raise PlanExecutionError(
            f"planned node id {planned} but execution produced {actual}",
            tuple(records))


def infer(qbn: QbnNetwork, query: Query) -> InferenceResult:
    """Answer a conjunctive query with a restored beta statistic."""
    the_plan = plan(qbn.structure, query)

    if not the_plan.steps:
        t, k = query.targets[0]
        cpt = qbn.cpt(t)
        j = cpt.row_index(dict(query.evidence))
        stat = qbn.cell(t, j, k, with_prior=True)
        return InferenceResult(stat=stat, plan=the_plan,
                               degenerate=stat.mass <= 0)

    final, records = execute(qbn, the_plan)
    node = the_plan.target
    var = final.var(node)
    cpt = final.cpt(node)
    j = cpt.row_index(dict(query.evidence))
    if var.is_compound:
        k = var.factor_value_index(dict(query.targets))
    else:
        k = query.targets[0][1]
    raw = cpt.cell(j, k)
    size = 1
    for vid, _ in query.targets:
        size *= qbn.structure.var(vid).size
    stat = restore_prior(raw, size)
    return InferenceResult(
        stat=stat,
        plan=the_plan,
        records=records,
        zero_denominator_total=sum(r.zero_denominators for r in records),
        degenerate=stat.mass <= 0,
    )
