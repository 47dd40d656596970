"""Belief networks whose table cells carry beta counts instead of
point probabilities, so every answer arrives with its own spread."""

from .errors import (
    AcyclicityError,
    CapacityError,
    DatasetSchemaError,
    InvalidPriorError,
    MalformedSampleError,
    NetworkFormatError,
    PlanExecutionError,
    QbnError,
    QueryParseError,
    StructureError,
    UndefinedSummaryError,
)
from .model import (
    BetaStat,
    Cpt,
    InferenceResult,
    NetworkStructure,
    PriorPolicy,
    QbnNetwork,
    Query,
    Variable,
    decode_assignment,
    default_prior_for_joint,
    encode_assignment,
    load_network,
    parse_network,
    summarize,
)
from .learning import (
    Dataset,
    InformedPrior,
    init_priors,
    is_relevant,
    learn_batch,
    load_dataset,
    parse_dataset,
    update,
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
    strip_prior,
)
from .inference import Plan, PlanStep, execute, infer, parse_query, plan
from .modelfile import load_model, parse_model, render_model, save_model

__version__ = "0.1.0"

__all__ = [
    "AcyclicityError",
    "BetaStat",
    "CapacityError",
    "Cpt",
    "Dataset",
    "DatasetSchemaError",
    "InferenceResult",
    "InformedPrior",
    "InvalidPriorError",
    "MalformedSampleError",
    "NetworkFormatError",
    "NetworkStructure",
    "Plan",
    "PlanExecutionError",
    "PlanStep",
    "PriorPolicy",
    "QbnError",
    "QbnNetwork",
    "Query",
    "QueryParseError",
    "StructureError",
    "TransformRecord",
    "UndefinedSummaryError",
    "Variable",
    "arc_reversal",
    "decode_assignment",
    "default_prior_for_joint",
    "encode_assignment",
    "execute",
    "infer",
    "init_priors",
    "is_relevant",
    "learn_batch",
    "load_dataset",
    "load_model",
    "load_network",
    "node_merging",
    "node_removal",
    "node_splitting",
    "parse_dataset",
    "parse_model",
    "parse_network",
    "parse_query",
    "plan",
    "product_merge",
    "prune_barren",
    "render_model",
    "restore_prior",
    "save_model",
    "strip_prior",
    "summarize",
    "update",
    "__version__",
]
