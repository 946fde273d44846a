"""Exception types shared across the package.

Every error carries a stable ``code`` string so the CLI and the foreign
bindings can transport it without parsing messages. ``exit_code`` groups
errors into the CLI contract: 1 internal, 2 user input, 3 format.
"""

from __future__ import annotations


class TripleGakError(Exception):
    """Base class for all package errors."""

    code = "internal-error"
    exit_code = 1


class UserInputError(TripleGakError):
    code = "user-input-error"
    exit_code = 2


class FormatError(TripleGakError):
    code = "format-error"
    exit_code = 3


# core-model
class OutOfRangeCut(UserInputError):
    code = "out-of-range-cut"


class DuplicateCut(UserInputError):
    code = "duplicate-cut"


class EmptyTokenList(UserInputError):
    code = "empty-token-list"


class ZeroVector(UserInputError):
    code = "zero-vector"


# kernel
class ShapeMismatch(UserInputError):
    code = "shape-mismatch"


class MixedFormPair(UserInputError):
    code = "mixed-form-pair"


class NonPositiveDelta(UserInputError):
    code = "non-positive-delta"


# gak
class EmptySequence(UserInputError):
    code = "empty-sequence"


class SequenceTooLong(UserInputError):
    code = "sequence-too-long"


class TooLargeForEnumeration(UserInputError):
    code = "too-large-for-enumeration"


class CosineOutOfRange(UserInputError):
    code = "cosine-out-of-range"


class PathShapeMismatch(UserInputError):
    code = "path-shape-mismatch"


class InvalidAlignmentPath(UserInputError):
    code = "invalid-alignment-path"


# structure-loss
class DimensionMismatch(UserInputError):
    code = "dimension-mismatch"


class SizeMismatch(UserInputError):
    code = "size-mismatch"


class BadTrainerConfig(UserInputError):
    code = "bad-trainer-config"


class DivergenceDetected(TripleGakError):
    """Training loss became non-finite; carries the loss trace so far."""

    code = "divergence-detected"
    exit_code = 1

    def __init__(self, message: str, trace: list[float] | None = None):
        super().__init__(message)
        self.trace = list(trace or [])


# retrieval
class DuplicateDocId(UserInputError):
    code = "duplicate-doc-id"


class DimMismatch(UserInputError):
    code = "dim-mismatch"


class EmptyIndex(UserInputError):
    code = "empty-index"


class MissingGoldId(UserInputError):
    code = "missing-gold-id"


class MalformedExample(FormatError):
    code = "malformed-example"


class IoFailure(TripleGakError):
    code = "io-failure"
    exit_code = 1


class BadMagic(FormatError):
    code = "bad-magic"


class VersionMismatch(FormatError):
    code = "version-mismatch"


class ChecksumMismatch(FormatError):
    code = "checksum-mismatch"


class ManifestError(FormatError):
    code = "manifest-error"


class MissingDoc(UserInputError):
    code = "missing-doc"


class ConfigError(FormatError):
    code = "config-error"
