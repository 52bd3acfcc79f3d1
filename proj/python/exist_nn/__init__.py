"""Sexism classification toolkit: preprocessing, augmentation, metrics and the model CLI."""

from ._core import (
    ConfigError,
    DomainError,
    DuplicateError,
    ExistError,
    FormatError,
    IoError,
    LabelError,
    ShapeError,
    SizeError,
    augment,
    file_hash,
    label_names,
    load_dataset,
    majority_baseline,
    metrics,
    normalize,
    preprocess_tokens,
    read_contextual,
    run_cli,
    write_contextual,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "DomainError",
    "DuplicateError",
    "ExistError",
    "FormatError",
    "IoError",
    "LabelError",
    "ShapeError",
    "SizeError",
    "augment",
    "file_hash",
    "label_names",
    "load_dataset",
    "majority_baseline",
    "metrics",
    "normalize",
    "preprocess_tokens",
    "read_contextual",
    "run_cli",
    "write_contextual",
]
