"""Learning raw pseudo-counts from complete discrete samples.

A sample is relevant to cell (j, k) of node X when X's parents in the
sample match row j.  Relevance drives the update: alpha of the cell
for the observed value gains 1, omega of every sibling cell in the
same row gains 1.  Batch learning tallies whole datasets at once and
equals the sequential updates exactly.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .errors import (
    DatasetSchemaError,
    InvalidPriorError,
    MalformedSampleError,
)
from .model import (
    Cpt,
    NetworkStructure,
    PriorPolicy,
    QbnNetwork,
    Variable,
    encode_assignment,
)

__all__ = [
    "Dataset",
    "InformedPrior",
    "init_priors",
    "is_relevant",
    "update",
    "learn_batch",
    "load_dataset",
    "parse_dataset",
]


@dataclass
class Dataset:
    """Complete samples as value-index codes.

    ``var_ids`` names the column order; ``codes`` is an (n, m) integer
    array of value indices into each variable's domain.
    """

    var_ids: tuple[int, ...]
    codes: np.ndarray

    def __post_init__(self):
        if self.codes.ndim != 2 or self.codes.shape[1] != len(self.var_ids):
            raise DatasetSchemaError("code array shape does not match columns")

    def __len__(self) -> int:
        return self.codes.shape[0]

    def column(self, vid: int) -> np.ndarray:
        return self.codes[:, self.var_ids.index(vid)]

    def row_sample(self, i: int) -> dict[int, int]:
        return {v: int(c) for v, c in zip(self.var_ids, self.codes[i])}

    def split(self, at: int) -> tuple["Dataset", "Dataset"]:
        return (Dataset(self.var_ids, self.codes[:at].copy()),
                Dataset(self.var_ids, self.codes[at:].copy()))

    @staticmethod
    def from_samples(structure: NetworkStructure,
                     samples: list[dict[int, int]]) -> "Dataset":
        vids = structure.node_ids()
        codes = np.zeros((len(samples), len(vids)), dtype=np.int64)
        for i, sample in enumerate(samples):
            _check_sample(structure, sample)
            for c, vid in enumerate(vids):
                codes[i, c] = sample[vid]
        return Dataset(vids, codes)


def _check_sample(structure: NetworkStructure, sample: dict[int, int]):
    if set(sample) != set(structure.variables):
        raise MalformedSampleError(
            "sample does not assign exactly the network's variables")
    for vid, k in sample.items():
        if not 0 <= k < structure.var(vid).size:
            raise MalformedSampleError(
                f"sample value index {k} out of range for "
                f"{structure.var(vid).name}")


def parse_dataset(text: str, structure: NetworkStructure) -> Dataset:
    """Parse delimited samples: a header of variable names (any order,
    each exactly once) then one value label per cell."""
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise DatasetSchemaError("dataset is empty") from None
    header = [h.strip() for h in header]
    known = {v.name: v for v in structure.variables.values()}
    if len(set(header)) != len(header):
        raise DatasetSchemaError("dataset header repeats a variable")
    unknown = [h for h in header if h not in known]
    if unknown:
        raise DatasetSchemaError(
            f"dataset header mentions unknown variables {unknown}")
    missing = sorted(set(known) - set(header))
    if missing:
        raise DatasetSchemaError(
            f"dataset header is missing variables {missing}")
    columns: list[Variable] = [known[h] for h in header]
    rows = []
    for row_no, row in enumerate(reader, start=2):
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        if len(row) != len(header):
            raise DatasetSchemaError(
                f"row {row_no}: expected {len(header)} values, "
                f"got {len(row)}")
        coded = []
        for var, label in zip(columns, row):
            label = label.strip()
            if label not in var.domain:
                raise MalformedSampleError(
                    f"row {row_no}: variable {var.name} has no value "
                    f"{label!r}")
            coded.append(var.domain.index(label))
        rows.append(coded)
    codes = np.array(rows, dtype=np.int64).reshape(len(rows), len(header))
    return Dataset(tuple(v.vid for v in columns), codes)


def load_dataset(path, structure: NetworkStructure) -> Dataset:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        return parse_dataset(fh.read(), structure)


@dataclass(frozen=True)
class InformedPrior:
    """Externally supplied per-cell pseudo-counts for one node.

    These are folded into the raw counts at initialization and are
    never stripped by transformations.
    """

    alpha: np.ndarray
    omega: np.ndarray

    def __post_init__(self):
        if self.alpha.shape != self.omega.shape:
            raise InvalidPriorError("informed prior arrays differ in shape")
        if (self.alpha < 0).any() or (self.omega < 0).any():
            raise InvalidPriorError("informed prior has negative counts")


def init_priors(structure: NetworkStructure,
                policies: dict[int, PriorPolicy | InformedPrior] | None = None
                ) -> QbnNetwork:
    """Create a network with empty raw tables and per-node priors.

    Without an entry a node gets the uninformed default beta(1, d-1)
    where d is its domain size.  A PriorPolicy entry must be an
    uninformed kind; an InformedPrior entry is folded into the raw
    counts immediately.
    """
    policies = policies or {}
    cpts: dict[int, Cpt] = {}
    priors: dict[int, PriorPolicy] = {}
    for vid in structure.node_ids():
        var = structure.var(vid)
        parent_ids = structure.parents_of(vid)
        sizes = tuple(structure.var(p).size for p in parent_ids)
        cpt = Cpt.zeros(vid, parent_ids, sizes, var.size)
        spec = policies.get(vid)
        if spec is None:
            priors[vid] = PriorPolicy.default_for(var.size)
        elif isinstance(spec, InformedPrior):
            if spec.alpha.shape != cpt.alpha.shape:
                raise InvalidPriorError(
                    f"informed prior shape {spec.alpha.shape} does not "
                    f"match table shape {cpt.alpha.shape} for {var.name}")
            cpt.alpha += spec.alpha
            cpt.omega += spec.omega
            priors[vid] = PriorPolicy("informed", 0.0, 0.0)
        elif isinstance(spec, PriorPolicy):
            if spec.kind == "informed":
                raise InvalidPriorError(
                    "informed priors must be given as InformedPrior arrays")
            priors[vid] = spec
        else:
            raise InvalidPriorError(f"unsupported prior spec {spec!r}")
        cpts[vid] = cpt
    return QbnNetwork(structure, cpts, priors)


def is_relevant(qbn: QbnNetwork, sample: dict[int, int],
                vid: int, j: int) -> bool:
    """True when the sample's parent values for node ``vid`` match row j."""
    _check_sample(qbn.structure, sample)
    cpt = qbn.cpt(vid)
    return cpt.row_index(sample) == j


def update(qbn: QbnNetwork, sample: dict[int, int]) -> QbnNetwork:
    """Fold one sample into every node's table; returns a new network."""
    _check_sample(qbn.structure, sample)
    new_cpts = {}
    for vid in qbn.structure.node_ids():
        cpt = qbn.cpt(vid).copy()
        j = cpt.row_index(sample)
        k = sample[vid]
        cpt.alpha[j, k] += 1.0
        cpt.omega[j, :] += 1.0
        cpt.omega[j, k] -= 1.0
        new_cpts[vid] = cpt
    return qbn.replaced(cpts=new_cpts)


def learn_batch(qbn: QbnNetwork, data: Dataset) -> QbnNetwork:
    """Tally a whole dataset; equals folding its rows one at a time."""
    if set(data.var_ids) != set(qbn.structure.variables):
        raise DatasetSchemaError(
            "dataset columns do not match the network's variables")
    for vid in data.var_ids:
        col = data.column(vid)
        if col.size and (col.min() < 0 or
                         col.max() >= qbn.structure.var(vid).size):
            raise MalformedSampleError(
                f"dataset holds out-of-range codes for "
                f"{qbn.structure.var(vid).name}")
    new_cpts = {}
    for vid in qbn.structure.node_ids():
        cpt = qbn.cpt(vid).copy()
        rows = np.zeros(len(data), dtype=np.int64)
        for p in cpt.parent_ids:
            rows = rows * qbn.structure.var(p).size + data.column(p)
        flat = rows * cpt.n_values + data.column(vid)
        tally = np.bincount(flat, minlength=cpt.n_rows * cpt.n_values)
        tally = tally.reshape(cpt.n_rows, cpt.n_values).astype(float)
        cpt.alpha += tally
        row_totals = tally.sum(axis=1, keepdims=True)
        cpt.omega += row_totals - tally
        new_cpts[vid] = cpt
    return qbn.replaced(cpts=new_cpts)
