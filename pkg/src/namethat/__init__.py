"""One-shot object naming over frozen embeddings.

A softmax-weighted associative memory maps embedding vectors to unit-circle
codes of vocabulary indices, a blackboard space with expiring, priority-gated
entries coordinates the agents around it, and an offline protocol measures
how the whole thing scales with the number of taught categories.
"""

from .assoc import (
    AssociationStore,
    AttentionConfig,
    as_vector,
    attend,
    relevance,
    similarities,
    softmax,
)
from .blackboard import Agent, Space, Subscription
from .clock import VirtualClock, WallClock
from .embeddings import (
    EmbeddingRecord,
    EmbeddingSet,
    SyntheticSpec,
    generate,
    generate_with_geometry,
    load,
    save,
)
from .engine import (
    Named,
    NamingConfig,
    NamingEngine,
    NoIdea,
    NoIdeaReason,
    TeachResult,
    load_session,
    save_session,
)
from .errors import (
    CapacityError,
    DimensionMismatchError,
    EmbeddingFormatError,
    GenerationError,
    NameThatError,
    SnapshotError,
)
from .evaluate import (
    CalibrationResult,
    CurveRow,
    EvalConfig,
    EvalResult,
    RecordOutcome,
    calibrate_threshold,
    eval_protocol,
)
from .pipeline import (
    PipelineConfig,
    PipelineResult,
    parse_command,
    parse_scenario,
    run_pipeline,
)
from .vocab import (
    EncodingConfig,
    Vocabulary,
    decode_code,
    encode_index,
    normalize_name,
)

__version__ = "0.1.0"
