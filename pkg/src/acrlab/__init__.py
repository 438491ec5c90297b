"""acrlab: object/action-category learning with planning and RL testbeds."""

__version__ = "0.1.0"

from .acr import (
    AGENT_OBJECT,
    AcrGraph,
    ActionCategory,
    ActionCode,
    CategorySet,
    ObservationLog,
    allowed_actions,
    build_graph,
    categories_of,
    derive_categories,
    ingest,
    non_object_actions,
    parse_log,
)
from .inference import (
    HypothesisSet,
    NewCategory,
    ProbeReport,
    ProbeStrategy,
    baseline_probe,
    entropy,
    infer_category,
    probability_contains,
    select_probe,
    eliminate,
)

__all__ = [
    "AGENT_OBJECT",
    "AcrGraph",
    "ActionCategory",
    "ActionCode",
    "CategorySet",
    "HypothesisSet",
    "NewCategory",
    "ObservationLog",
    "ProbeReport",
    "ProbeStrategy",
    "allowed_actions",
    "baseline_probe",
    "build_graph",
    "categories_of",
    "derive_categories",
    "eliminate",
    "entropy",
    "infer_category",
    "ingest",
    "non_object_actions",
    "parse_log",
    "probability_contains",
    "select_probe",
    "__version__",
]
