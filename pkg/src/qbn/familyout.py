"""The family-out example network and its 100-sample dataset.

Five binary variables: FO (family out), BP (bowel problem), LO (light
on), DO (dog out), HB (hearable bark), with edges FO->LO, FO->DO,
BP->DO, DO->HB.  The dataset is the fixed 100-sample tally used by the
package's tests and the README walkthrough; positive values come first
in every domain.
"""

from __future__ import annotations

import numpy as np

from .learning import Dataset, init_priors, learn_batch
from .model import NetworkStructure, QbnNetwork, parse_network

__all__ = [
    "NETWORK_TEXT",
    "JOINT_COUNTS",
    "structure",
    "dataset",
    "learned_network",
    "dataset_csv",
    "write_example_files",
]

NETWORK_TEXT = """\
# Family-out example: five binary variables.
node FO : fo, not_fo
node BP : bp, not_bp
node LO : lo, not_lo
node DO : do, not_do
node HB : hb, not_hb
edge FO -> LO
edge FO -> DO
edge BP -> DO
edge DO -> HB
"""

# Joint sample counts keyed by value indices (fo, bp, lo, do, hb),
# index 0 meaning the positive value.  They total 100.
JOINT_COUNTS: dict[tuple[int, int, int, int, int], int] = {
    (0, 0, 0, 0, 0): 4, (0, 1, 0, 0, 0): 10,
    (1, 0, 0, 0, 0): 0, (1, 1, 0, 0, 0): 1,
    (0, 0, 0, 0, 1): 0, (0, 1, 0, 0, 1): 1,
    (1, 0, 0, 0, 1): 0, (1, 1, 0, 0, 1): 0,
    (0, 0, 0, 1, 0): 0, (0, 1, 0, 1, 0): 1,
    (1, 0, 0, 1, 0): 0, (1, 1, 0, 1, 0): 0,
    (0, 0, 0, 1, 1): 0, (0, 1, 0, 1, 1): 7,
    (1, 0, 0, 1, 1): 0, (1, 1, 0, 1, 1): 5,
    (0, 0, 1, 0, 0): 1, (0, 1, 1, 0, 0): 4,
    (1, 0, 1, 0, 0): 3, (1, 1, 1, 0, 0): 10,
    (0, 0, 1, 0, 1): 0, (0, 1, 1, 0, 1): 1,
    (1, 0, 1, 0, 1): 0, (1, 1, 1, 0, 1): 1,
    (0, 0, 1, 1, 0): 0, (0, 1, 1, 1, 0): 0,
    (1, 0, 1, 1, 0): 0, (1, 1, 1, 1, 0): 1,
    (0, 0, 1, 1, 1): 0, (0, 1, 1, 1, 1): 3,
    (1, 0, 1, 1, 1): 3, (1, 1, 1, 1, 1): 44,
}


def structure() -> NetworkStructure:
    return parse_network(NETWORK_TEXT)


def dataset(net: NetworkStructure | None = None) -> Dataset:
    """The 100 samples, expanded from the joint tally in ascending
    value-code order (learning is order independent)."""
    net = net or structure()
    rows = []
    for combo in sorted(JOINT_COUNTS):
        rows.extend([list(combo)] * JOINT_COUNTS[combo])
    codes = np.array(rows, dtype=np.int64)
    return Dataset(net.node_ids(), codes)


def learned_network() -> QbnNetwork:
    """The network after learning the 100 samples under default priors."""
    net = structure()
    return learn_batch(init_priors(net), dataset(net))


def dataset_csv(net: NetworkStructure | None = None) -> str:
    net = net or structure()
    data = dataset(net)
    names = [net.var(v).name for v in data.var_ids]
    lines = [",".join(names)]
    for row in data.codes:
        lines.append(",".join(net.var(v).domain[k]
                              for v, k in zip(data.var_ids, row)))
    return "\n".join(lines) + "\n"


def write_example_files(directory) -> tuple[str, str]:
    """Write family_out.net and family_out.csv under ``directory``."""
    import os

    os.makedirs(directory, exist_ok=True)
    net_path = os.path.join(directory, "family_out.net")
    csv_path = os.path.join(directory, "family_out.csv")
    with open(net_path, "w", encoding="utf-8") as fh:
        fh.write(NETWORK_TEXT)
    with open(csv_path, "w", encoding="utf-8") as fh:
        fh.write(dataset_csv())
    return net_path, csv_path
