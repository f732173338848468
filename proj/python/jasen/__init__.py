"""Weakly supervised aspect and sentiment classification."""

from ._jasen import (
    Model,
    TopicSchema,
    Vocabulary,
    __version__,
    build_vocabulary,
    compute_metrics,
    parse_schema,
    tokenize,
    train,
)

__all__ = [
    "Model",
    "TopicSchema",
    "Vocabulary",
    "__version__",
    "build_vocabulary",
    "compute_metrics",
    "parse_schema",
    "tokenize",
    "train",
]
