"""Ground-truth checking against dense joint counts.

The oracle never looks at network tables: it tallies the dataset into
a dense array over the full joint domain and answers queries by
counting cells.  Exact answers from here are what transformation
outputs are compared against.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import CapacityError, DatasetSchemaError
from .learning import Dataset, init_priors, learn_batch
from .model import (
    BetaStat,
    NetworkStructure,
    QbnNetwork,
    Query,
    Variable,
    default_prior_for_joint,
)

__all__ = [
    "JointTable",
    "build_joint",
    "exact_beta",
    "Discrepancy",
    "discrepancy",
    "product_form_dataset",
    "random_dag",
    "chain_structure",
    "sample_chain",
    "ExperimentRow",
    "ExperimentReport",
    "chain_experiment",
]

MAX_JOINT_CELLS = 1 << 24


@dataclass
class JointTable:
    """Dense sample counts over the full joint domain."""

    var_ids: tuple[int, ...]
    sizes: tuple[int, ...]
    counts: np.ndarray

    def __post_init__(self):
        if self.counts.shape != self.sizes:
            raise DatasetSchemaError("joint array shape mismatch")

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def axis_of(self, vid: int) -> int:
        return self.var_ids.index(vid)

    def marginal(self, keep: tuple[int, ...]) -> "JointTable":
        """Sum out every variable not in ``keep``."""
        drop = tuple(i for i, v in enumerate(self.var_ids)
                     if v not in keep)
        counts = self.counts.sum(axis=drop) if drop else self.counts.copy()
        kept = tuple(v for v in self.var_ids if v in keep)
        sizes = tuple(self.sizes[self.var_ids.index(v)] for v in kept)
        return JointTable(kept, sizes, counts)


def build_joint(structure: NetworkStructure, data: Dataset) -> JointTable:
    var_ids = structure.node_ids()
    sizes = tuple(structure.var(v).size for v in var_ids)
    n_cells = 1
    for s in sizes:
        n_cells *= s
    if n_cells > MAX_JOINT_CELLS:
        raise CapacityError(
            f"joint domain of {n_cells} cells exceeds the "
            f"{MAX_JOINT_CELLS}-cell limit")
    if set(data.var_ids) != set(var_ids):
        raise DatasetSchemaError(
            "dataset columns do not match the network's variables")
    cols = [data.column(v) for v in var_ids]
    flat = np.ravel_multi_index(cols, sizes) if len(data) else \
        np.zeros(0, dtype=np.int64)
    counts = np.bincount(flat, minlength=n_cells).reshape(sizes)
    return JointTable(var_ids, sizes, counts)


def _mask(joint: JointTable,
          assignments: tuple[tuple[int, int], ...]) -> np.ndarray:
    mask = np.ones(joint.sizes, dtype=bool)
    for vid, k in assignments:
        axis = joint.axis_of(vid)
        sel = np.zeros(joint.sizes[axis], dtype=bool)
        sel[k] = True
        shape = [1] * len(joint.sizes)
        shape[axis] = joint.sizes[axis]
        mask &= sel.reshape(shape)
    return mask


def exact_beta(joint: JointTable, query: Query,
               restore: bool = True) -> BetaStat:
    """Count-exact answer: alpha counts cells matching targets and
    evidence, omega counts cells matching the evidence only."""
    ev = _mask(joint, query.evidence)
    tg = _mask(joint, query.targets)
    alpha = float(joint.counts[ev & tg].sum())
    omega = float(joint.counts[ev & ~tg].sum())
    stat = BetaStat(alpha, omega)
    if restore:
        size = 1
        for vid, _ in query.targets:
            size *= joint.sizes[joint.axis_of(vid)]
        stat = stat.shifted(default_prior_for_joint(size))
    return stat


@dataclass(frozen=True)
class Discrepancy:
    d_mean: float
    d_alpha: float
    d_omega: float
    d_variance: float


def discrepancy(inferred: BetaStat, exact: BetaStat) -> Discrepancy:
    """Absolute mean/parameter gaps and the signed variance gap."""
    return Discrepancy(
        d_mean=abs(inferred.mean - exact.mean),
        d_alpha=abs(inferred.alpha - exact.alpha),
        d_omega=abs(inferred.omega - exact.omega),
        d_variance=inferred.variance - exact.variance,
    )


def product_form_dataset(structure: NetworkStructure,
                         rng: np.random.Generator,
                         max_weight: int = 3) -> Dataset:
    """A dataset whose joint counts factor exactly along the structure.

    Per node a positive integer weight table with constant row sum is
    drawn; the joint count of a full instantiation is the product of
    the matching weights, so every conditional independence the
    structure asserts holds in the counts with no sampling noise.
    """
    var_ids = structure.node_ids()
    sizes = [structure.var(v).size for v in var_ids]
    weights = {}
    for vid in var_ids:
        size = structure.var(vid).size
        rows = 1
        for p in structure.parents_of(vid):
            rows *= structure.var(p).size
        table = np.zeros((rows, size), dtype=np.int64)
        for j in range(rows):
            row = rng.integers(1, max_weight + 1, size=size)
            # pad so every row shares the same sum
            table[j] = row
        target = int(table.sum(axis=1).max())
        for j in range(rows):
            table[j, 0] += target - int(table[j].sum())
        weights[vid] = table
    counts = np.ones(sizes, dtype=np.int64)
    grid = np.indices(sizes)
    for vid in var_ids:
        axis = var_ids.index(vid)
        cpt_parents = structure.parents_of(vid)
        rows = np.zeros(sizes, dtype=np.int64)
        for p in cpt_parents:
            rows = rows * structure.var(p).size + grid[var_ids.index(p)]
        counts *= weights[vid][rows, grid[axis]]
    flat = counts.reshape(-1)
    samples = np.repeat(np.arange(flat.size), flat)
    codes = np.stack(np.unravel_index(samples, sizes), axis=1)
    return Dataset(var_ids, codes.astype(np.int64))


def random_dag(rng: np.random.Generator, n_nodes: int,
               edge_prob: float = 0.5, max_values: int = 2
               ) -> NetworkStructure:
    """A random DAG whose edges always point from lower to higher id."""
    variables = {}
    parents = {}
    for vid in range(n_nodes):
        size = int(rng.integers(2, max_values + 1)) if max_values > 2 else 2
        labels = tuple(f"v{k}" for k in range(size))
        variables[vid] = Variable(vid, f"X{vid + 1}", labels)
        ps = [p for p in range(vid) if rng.random() < edge_prob]
        parents[vid] = tuple(ps)
    return NetworkStructure(variables, parents)


def chain_structure(length: int) -> NetworkStructure:
    variables = {}
    parents = {}
    for vid in range(length):
        variables[vid] = Variable(vid, f"X{vid + 1}", ("y", "n"))
        parents[vid] = (vid - 1,) if vid > 0 else ()
    return NetworkStructure(variables, parents)


def sample_chain(length: int, n_samples: int, seed_net: int, seed_data: int
                 ) -> Dataset:
    """Ancestral samples from a binary chain with true conditionals
    drawn uniformly from (0.1, 0.9)."""
    net_rng = np.random.default_rng([seed_net, length, 0xA])
    # probability of value 0 per parent value; index 0 is the root's.
    probs = [net_rng.uniform(0.1, 0.9, size=2) for _ in range(length)]
    data_rng = np.random.default_rng([seed_data, length, n_samples, 0xB])
    codes = np.zeros((n_samples, length), dtype=np.int64)
    u = data_rng.random((n_samples, length))
    codes[:, 0] = (u[:, 0] >= probs[0][0]).astype(np.int64)
    for i in range(1, length):
        p0 = probs[i][codes[:, i - 1]]
        codes[:, i] = (u[:, i] >= p0).astype(np.int64)
    return Dataset(tuple(range(length)), codes)


@dataclass(frozen=True)
class ExperimentRow:
    chain_len: int
    n_samples: int
    seed: int
    inferred_mean: float
    exact_mean: float
    abs_err: float
    inferred_var: float
    var_bound: float


@dataclass
class ExperimentReport:
    rows: list[ExperimentRow] = field(default_factory=list)

    def median_abs_err(self) -> dict[tuple[int, int], float]:
        """Median |inferred - exact| keyed by (chain length, sample size)."""
        buckets: dict[tuple[int, int], list[float]] = {}
        for row in self.rows:
            buckets.setdefault((row.chain_len, row.n_samples),
                               []).append(row.abs_err)
        return {key: float(np.median(vals)) for key, vals in buckets.items()}


def chain_experiment(lengths: tuple[int, ...] = (3, 4, 5, 6),
                     sizes: tuple[int, ...] = (100, 1000, 10000),
                     seeds: tuple[int, ...] = tuple(range(30)),
                     ) -> ExperimentReport:
    """Learn chains from sampled data and compare the inferred leaf
    conditional P(leaf=y | root=y) against the dataset-exact value."""
    from .inference import infer  # local import to avoid a cycle

    report = ExperimentReport()
    for length in lengths:
        structure = chain_structure(length)
        query = Query(targets=((length - 1, 0),), evidence=((0, 0),))
        for seed in seeds:
            for n in sizes:
                data = sample_chain(length, n, seed_net=seed, seed_data=seed)
                qbn = learn_batch(init_priors(structure), data)
                result = infer(qbn, query)
                exact = exact_beta(build_joint(structure, data), query)
                report.rows.append(ExperimentRow(
                    chain_len=length,
                    n_samples=n,
                    seed=seed,
                    inferred_mean=result.mean,
                    exact_mean=exact.mean,
                    abs_err=abs(result.mean - exact.mean),
                    inferred_var=result.variance,
                    var_bound=result.variance_bound,
                ))
    return report
