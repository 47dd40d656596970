"""Core data model: beta statistics, variables, structure, and tables.

A belief network here stores, for every conditional-table cell, a beta
distribution represented by its two pseudo-count parameters instead of a
point probability.  Cell (j, k) of node X's table tracks

    alpha = number of samples where X took value k and X's parents
            matched row j,
    omega = number of samples where the parents matched row j but X
            took a different value.

Tables hold raw counts; uninformed priors are kept separately as a
per-node policy and added back only when a cell is read in its
with-prior view or when a result is restored after transformation.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    AcyclicityError,
    InvalidPriorError,
    MalformedSampleError,
    NetworkFormatError,
    StructureError,
    UndefinedSummaryError,
)

__all__ = [
    "BetaStat",
    "Variable",
    "NetworkStructure",
    "Cpt",
    "PriorPolicy",
    "QbnNetwork",
    "Query",
    "InferenceResult",
    "encode_assignment",
    "decode_assignment",
    "summarize",
    "parse_network",
    "load_network",
]


@dataclass(frozen=True)
class BetaStat:
    """A beta distribution held as its (alpha, omega) pseudo-counts.

    After learning the parameters are nonnegative integers; transformed
    tables carry real values, so both fields are floats.
    """

    alpha: float
    omega: float

    @property
    def mass(self) -> float:
        return self.alpha + self.omega

    @property
    def mean(self) -> float:
        if self.mass <= 0 or self.alpha < 0 or self.omega < 0:
            raise UndefinedSummaryError(
                f"beta({self.alpha}, {self.omega}) has no defined summary")
        return self.alpha / self.mass

    @property
    def variance(self) -> float:
        m = self.mass
        if m <= 0 or self.alpha < 0 or self.omega < 0:
            raise UndefinedSummaryError(
                f"beta({self.alpha}, {self.omega}) has no defined summary")
        return (self.alpha * self.omega) / (m * m * (m + 1.0))

    @property
    def variance_bound(self) -> float:
        """Upper bound 1 / (alpha + omega + 1), valid for any cell.

        The bound shrinks as evidence accumulates regardless of the
        mean, which is what makes it usable as a convergence gauge.
        """
        m = self.mass
        if m < 0:
            raise UndefinedSummaryError(
                f"beta({self.alpha}, {self.omega}) has negative mass")
        return 1.0 / (m + 1.0)

    def shifted(self, prior: "BetaStat") -> "BetaStat":
        return BetaStat(self.alpha + prior.alpha, self.omega + prior.omega)

    def __str__(self) -> str:
        return f"beta({self.alpha:g}, {self.omega:g})"


def summarize(stat: BetaStat) -> tuple[float, float, float]:
    """Return (mean, variance, variance_bound) for a nonzero-mass stat."""
    return stat.mean, stat.variance, stat.variance_bound


@dataclass(frozen=True)
class Variable:
    """A discrete variable with an ordered domain of value labels.

    Compound variables produced by merging carry the merged simple
    variables in ``factors``; their domain is the cartesian product of
    the factor domains in row-major order (first factor varies
    slowest).
    """

    vid: int
    name: str
    domain: tuple[str, ...]
    factors: tuple["Variable", ...] = ()

    def __post_init__(self):
        if len(self.domain) == 0:
            raise StructureError(f"variable {self.name} has an empty domain")
        if len(set(self.domain)) != len(self.domain):
            raise StructureError(
                f"variable {self.name} has duplicate value labels")

    @property
    def size(self) -> int:
        return len(self.domain)

    @property
    def degenerate(self) -> bool:
        """Single-value domains are permitted but carry no information."""
        return len(self.domain) == 1

    @property
    def is_compound(self) -> bool:
        return len(self.factors) > 0

    def value_index(self, label: str) -> int:
        try:
            return self.domain.index(label)
        except ValueError:
            raise MalformedSampleError(
                f"variable {self.name} has no value {label!r}") from None

    @staticmethod
    def compound(vid: int, parts: tuple["Variable", ...]) -> "Variable":
        """Build the product variable over ``parts`` (simple factors only)."""
        factors: list[Variable] = []
        for p in parts:
            factors.extend(p.factors if p.is_compound else (p,))
        name = "(" + ",".join(v.name for v in factors) + ")"
        sizes = [v.size for v in factors]
        labels = []
        for code in range(int(np.prod(sizes))):
            digits = decode_assignment(code, sizes)
            labels.append(",".join(v.domain[d]
                                   for v, d in zip(factors, digits)))
        return Variable(vid, name, tuple(labels), tuple(factors))

    def factor_value_index(self, assignment: dict[int, int]) -> int:
        """Index of the compound value where factor ``vid`` takes the
        given value index; ``assignment`` must cover every factor."""
        digits = [assignment[v.vid] for v in self.factors]
        return encode_assignment([v.size for v in self.factors], digits)

    def factor_digits(self, value_idx: int) -> dict[int, int]:
        sizes = [v.size for v in self.factors]
        digits = decode_assignment(value_idx, sizes)
        return {v.vid: d for v, d in zip(self.factors, digits)}


def encode_assignment(sizes: list[int] | tuple[int, ...],
                      digits: list[int] | tuple[int, ...]) -> int:
    """Mixed-radix encode, first digit most significant."""
    if len(sizes) != len(digits):
        raise IndexError("assignment length does not match radix count")
    code = 0
    for size, d in zip(sizes, digits):
        if not 0 <= d < size:
            raise IndexError(f"digit {d} out of range for radix {size}")
        code = code * size + d
    return code


def decode_assignment(code: int,
                      sizes: list[int] | tuple[int, ...]) -> tuple[int, ...]:
    """Inverse of :func:`encode_assignment`."""
    total = 1
    for s in sizes:
        total *= s
    if not 0 <= code < max(total, 1):
        raise IndexError(f"row code {code} out of range")
    digits = [0] * len(sizes)
    for i in range(len(sizes) - 1, -1, -1):
        digits[i] = code % sizes[i]
        code //= sizes[i]
    return tuple(digits)


class NetworkStructure:
    """A directed acyclic graph over variables.

    Parents are kept in canonical order (ascending variable id); that
    order fixes the mixed-radix row indexing of every table.
    """

    def __init__(self, variables: dict[int, Variable],
                 parents: dict[int, tuple[int, ...]]):
        self.variables = dict(variables)
        self.parents = {}
        for vid in self.variables:
            ps = tuple(sorted(parents.get(vid, ())))
            if len(set(ps)) != len(ps):
                raise StructureError(
                    f"duplicate parent for {self.variables[vid].name}")
            for p in ps:
                if p not in self.variables:
                    raise StructureError(f"unknown parent id {p}")
                if p == vid:
                    raise AcyclicityError(
                        f"self edge on {self.variables[vid].name}")
            self.parents[vid] = ps
        unknown = set(parents) - set(self.variables)
        if unknown:
            raise StructureError(f"parent map references unknown ids {unknown}")
        self._children: dict[int, tuple[int, ...]] = {v: () for v in self.variables}
        kids: dict[int, list[int]] = {v: [] for v in self.variables}
        for vid, ps in self.parents.items():
            for p in ps:
                kids[p].append(vid)
        self._children = {v: tuple(sorted(c)) for v, c in kids.items()}
        self.topological_order()  # raises on cycles

    def parents_of(self, vid: int) -> tuple[int, ...]:
        return self.parents[vid]

    def children_of(self, vid: int) -> tuple[int, ...]:
        return self._children[vid]

    def var(self, vid: int) -> Variable:
        return self.variables[vid]

    def by_name(self, name: str) -> Variable:
        for v in self.variables.values():
            if v.name == name:
                return v
        raise StructureError(f"no variable named {name!r}")

    def node_ids(self) -> tuple[int, ...]:
        return tuple(sorted(self.variables))

    def topological_order(self) -> tuple[int, ...]:
        """Kahn's algorithm with an id min-heap, so the order is stable."""
        indeg = {v: len(self.parents[v]) for v in self.variables}
        ready = [v for v, d in indeg.items() if d == 0]
        heapq.heapify(ready)
        order = []
        while ready:
            v = heapq.heappop(ready)
            order.append(v)
            for c in self._children[v]:
                indeg[c] -= 1
                if indeg[c] == 0:
                    heapq.heappush(ready, c)
        if len(order) != len(self.variables):
            raise AcyclicityError("structure contains a directed cycle")
        return tuple(order)

    def has_path(self, src: int, dst: int,
                 skip_edge: tuple[int, int] | None = None) -> bool:
        """True when a directed path src -> ... -> dst exists."""
        stack = [src]
        seen = set()
        while stack:
            v = stack.pop()
            if v == dst:
                return True
            if v in seen:
                continue
            seen.add(v)
            for c in self._children[v]:
                if skip_edge is not None and (v, c) == skip_edge:
                    continue
                stack.append(c)
        return False

    def evolved(self, variables: dict[int, Variable] | None = None,
                parents: dict[int, tuple[int, ...]] | None = None
                ) -> "NetworkStructure":
        return NetworkStructure(
            variables if variables is not None else self.variables,
            parents if parents is not None else self.parents)


@dataclass
class Cpt:
    """One node's conditional table of raw beta pseudo-counts.

    ``alpha`` and ``omega`` are float arrays of shape (rows, values);
    row j corresponds to the mixed-radix code of the parent
    instantiation in canonical parent order.
    """

    owner: int
    parent_ids: tuple[int, ...]
    parent_sizes: tuple[int, ...]
    alpha: np.ndarray
    omega: np.ndarray

    @property
    def n_rows(self) -> int:
        return self.alpha.shape[0]

    @property
    def n_values(self) -> int:
        return self.alpha.shape[1]

    def row_index(self, assignment: dict[int, int]) -> int:
        """Row code for a full parent assignment {parent id: value index}."""
        try:
            digits = [assignment[p] for p in self.parent_ids]
        except KeyError as missing:
            raise MalformedSampleError(
                f"assignment is missing parent id {missing}") from None
        return encode_assignment(self.parent_sizes, digits)

    def row_assignment(self, j: int) -> dict[int, int]:
        digits = decode_assignment(j, self.parent_sizes)
        return dict(zip(self.parent_ids, digits))

    def cell(self, j: int, k: int) -> BetaStat:
        if not (0 <= j < self.n_rows and 0 <= k < self.n_values):
            raise IndexError(f"cell ({j}, {k}) out of range")
        return BetaStat(float(self.alpha[j, k]), float(self.omega[j, k]))

    def copy(self) -> "Cpt":
        return Cpt(self.owner, self.parent_ids, self.parent_sizes,
                   self.alpha.copy(), self.omega.copy())

    @staticmethod
    def zeros(owner: int, parent_ids: tuple[int, ...],
              parent_sizes: tuple[int, ...], n_values: int) -> "Cpt":
        rows = 1
        for s in parent_sizes:
            rows *= s
        shape = (rows, n_values)
        return Cpt(owner, parent_ids, parent_sizes,
                   np.zeros(shape), np.zeros(shape))


@dataclass(frozen=True)
class PriorPolicy:
    """How a node's stored raw counts relate to its with-prior view.

    Uninformed priors (default or custom) are uniform per-cell offsets
    added when reading the with-prior view and stripped for
    transformation work.  Informed priors are folded into the raw
    counts at initialization and never stripped, so their offsets here
    are zero.
    """

    kind: str  # "uninformed-default" | "uninformed-custom" | "informed"
    alpha: float
    omega: float

    def __post_init__(self):
        if self.kind not in ("uninformed-default", "uninformed-custom",
                             "informed"):
            raise InvalidPriorError(f"unknown prior kind {self.kind!r}")
        if self.alpha < 0 or self.omega < 0:
            raise InvalidPriorError(
                f"negative prior pseudo-counts ({self.alpha}, {self.omega})")

    @staticmethod
    def default_for(size: int) -> "PriorPolicy":
        """The uninformed default for a domain of ``size`` values:
        beta(1, size - 1) in every cell."""
        return PriorPolicy("uninformed-default", 1.0, float(size - 1))


def default_prior_for_joint(domain_size: int) -> BetaStat:
    """Uninformed prior restored onto a result over a (possibly joint)
    target domain of ``domain_size`` values."""
    return BetaStat(1.0, float(domain_size - 1))


class QbnNetwork:
    """Structure plus one raw-count table and prior policy per node."""

    def __init__(self, structure: NetworkStructure,
                 cpts: dict[int, Cpt], priors: dict[int, PriorPolicy]):
        if set(cpts) != set(structure.variables) or \
                set(priors) != set(structure.variables):
            raise StructureError("tables/priors do not cover the structure")
        for vid, cpt in cpts.items():
            if cpt.parent_ids != structure.parents_of(vid):
                raise StructureError(
                    f"table parents for {structure.var(vid).name} do not "
                    f"match the structure")
            if cpt.n_values != structure.var(vid).size:
                raise StructureError(
                    f"table width for {structure.var(vid).name} does not "
                    f"match its domain")
        self.structure = structure
        self.cpts = dict(cpts)
        self.priors = dict(priors)

    def var(self, vid: int) -> Variable:
        return self.structure.var(vid)

    def cpt(self, vid: int) -> Cpt:
        return self.cpts[vid]

    def cell(self, vid: int, j: int, k: int,
             with_prior: bool = False) -> BetaStat:
        raw = self.cpts[vid].cell(j, k)
        if not with_prior:
            return raw
        policy = self.priors[vid]
        return raw.shifted(BetaStat(policy.alpha, policy.omega))

    def replaced(self, structure: NetworkStructure | None = None,
                 cpts: dict[int, Cpt] | None = None,
                 priors: dict[int, PriorPolicy] | None = None
                 ) -> "QbnNetwork":
        return QbnNetwork(structure or self.structure,
                          cpts if cpts is not None else self.cpts,
                          priors if priors is not None else self.priors)

    def copy(self) -> "QbnNetwork":
        return QbnNetwork(self.structure,
                          {v: c.copy() for v, c in self.cpts.items()},
                          dict(self.priors))


@dataclass(frozen=True)
class Query:
    """A conjunctive query P(targets | evidence).

    Both sides are tuples of (variable id, value index), kept sorted by
    id.  Target and evidence variables must be disjoint and targets
    nonempty.
    """

    targets: tuple[tuple[int, int], ...]
    evidence: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        if not self.targets:
            raise StructureError("query has no target variables")
        tvars = [v for v, _ in self.targets]
        evars = [v for v, _ in self.evidence]
        if len(set(tvars)) != len(tvars) or len(set(evars)) != len(evars):
            raise StructureError("query assigns a variable twice")
        if set(tvars) & set(evars):
            raise StructureError("query uses a variable as both target "
                                 "and evidence")
        object.__setattr__(self, "targets",
                           tuple(sorted(self.targets)))
        object.__setattr__(self, "evidence",
                           tuple(sorted(self.evidence)))

    @property
    def target_ids(self) -> tuple[int, ...]:
        return tuple(v for v, _ in self.targets)

    @property
    def evidence_ids(self) -> tuple[int, ...]:
        return tuple(v for v, _ in self.evidence)


@dataclass(frozen=True)
class InferenceResult:
    """The answer to a query: a restored beta plus how it was obtained."""

    stat: BetaStat
    plan: object
    records: tuple = ()
    zero_denominator_total: int = 0
    degenerate: bool = False

    @property
    def approximate(self) -> bool:
        return self.zero_denominator_total > 0

    @property
    def mean(self) -> float:
        return self.stat.mean

    @property
    def variance(self) -> float:
        return self.stat.variance

    @property
    def variance_bound(self) -> float:
        return self.stat.variance_bound


def parse_network(text: str) -> NetworkStructure:
    """Parse the plain-text network format.

    Lines are ``node NAME : v1, v2[, ...]`` or ``edge A -> B``; ``#``
    starts a comment.  Nodes must be declared before use; variable ids
    follow declaration order.
    """
    variables: dict[int, Variable] = {}
    by_name: dict[str, int] = {}
    parents: dict[int, list[int]] = {}
    for line_no, rawline in enumerate(text.splitlines(), start=1):
        line = rawline.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("node "):
            body = line[len("node "):]
            if ":" not in body:
                raise NetworkFormatError("node line missing ':'", line_no)
            name, values = body.split(":", 1)
            name = name.strip()
            if not name:
                raise NetworkFormatError("empty node name", line_no)
            if name in by_name:
                raise NetworkFormatError(f"duplicate node {name!r}", line_no)
            labels = tuple(v.strip() for v in values.split(","))
            if any(not v for v in labels):
                raise NetworkFormatError(
                    f"empty value label on node {name!r}", line_no)
            vid = len(variables)
            try:
                variables[vid] = Variable(vid, name, labels)
            except StructureError as exc:
                raise NetworkFormatError(str(exc), line_no) from None
            by_name[name] = vid
            parents[vid] = []
        elif line.startswith("edge "):
            body = line[len("edge "):]
            if "->" not in body:
                raise NetworkFormatError("edge line missing '->'", line_no)
            src, dst = (part.strip() for part in body.split("->", 1))
            if src not in by_name or dst not in by_name:
                raise NetworkFormatError(
                    f"edge references undeclared node "
                    f"({src!r} -> {dst!r})", line_no)
            if by_name[src] in parents[by_name[dst]]:
                raise NetworkFormatError(
                    f"duplicate edge {src} -> {dst}", line_no)
            parents[by_name[dst]].append(by_name[src])
        else:
            raise NetworkFormatError(
                f"unrecognized directive {line.split()[0]!r}", line_no)
    return NetworkStructure(variables,
                            {v: tuple(ps) for v, ps in parents.items()})


def load_network(path) -> NetworkStructure:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_network(fh.read())
