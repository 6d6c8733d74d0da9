"""Query-free suffix perturbations against text embedding backends.

The toolkit appends a short optimized character suffix to a prompt so that
the backend's embedding of the perturbed prompt drifts away from the
original, either across all dimensions (untargeted) or only along a voted
subset of steerable dimensions (targeted). Backends are pluggable: a fully
deterministic synthetic encoder for tests and research loops, plus an HTTP
client for a real embedding service.
"""

__version__ = "0.1.0"

from .embedding import DimensionMask, Embedding, cosine, masked_cosine, normalize
from .encoders import (
    CachedBackend,
    Capabilities,
    EmbeddingCache,
    EncoderBackend,
    RemoteEncoder,
    RelaxedSuffix,
    SyntheticEncoder,
    SyntheticEncoderConfig,
)
from .errors import (
    CapabilityError,
    DegenerateVectorError,
    DimensionError,
    EmptyInputError,
    EmptyMaskError,
    ProtocolError,
    QFAttackError,
    RemoteError,
    SimplexError,
    SpaceTooLargeError,
    TransportError,
)
from .evaluation import (
    AggregateReport,
    ImageEmbedding,
    ScoreRecord,
    aggregate,
    aggregate_records,
    clip_score,
    targeted_eval_text,
)
from .objectives import (
    CosineObjective,
    KeyDimConfig,
    SentencePair,
    difference_vectors,
    extract_key_dims,
    targeted_loss,
    untargeted_loss,
)
from .optimizers import (
    AttackConfig,
    AttackResult,
    GeneticConfig,
    PGDConfig,
    brute_force_attack,
    genetic_attack,
    greedy_attack,
    pgd_attack,
    random_attack,
    run_attack,
)
from .perturbation import Charset, Perturbation, Prompt, assemble, random_perturbation

__all__ = [
    "__version__",
    "AggregateReport",
    "AttackConfig",
    "AttackResult",
    "CachedBackend",
    "Capabilities",
    "CapabilityError",
    "Charset",
    "CosineObjective",
    "DegenerateVectorError",
    "DimensionError",
    "DimensionMask",
    "EmbeddingCache",
    "Embedding",
    "EmptyInputError",
    "EmptyMaskError",
    "EncoderBackend",
    "GeneticConfig",
    "ImageEmbedding",
    "KeyDimConfig",
    "PGDConfig",
    "Perturbation",
    "Prompt",
    "ProtocolError",
    "QFAttackError",
    "RelaxedSuffix",
    "RemoteEncoder",
    "RemoteError",
    "ScoreRecord",
    "SentencePair",
    "SimplexError",
    "SpaceTooLargeError",
    "SyntheticEncoder",
    "SyntheticEncoderConfig",
    "TransportError",
    "aggregate",
    "aggregate_records",
    "assemble",
    "brute_force_attack",
    "clip_score",
    "cosine",
    "difference_vectors",
    "extract_key_dims",
    "genetic_attack",
    "greedy_attack",
    "masked_cosine",
    "normalize",
    "pgd_attack",
    "random_attack",
    "random_perturbation",
    "run_attack",
    "targeted_eval_text",
    "targeted_loss",
    "untargeted_loss",
]
