import numpy as np
import pytest

from triplegak.core import InterleavedSequence, Modality, SliceEmbedding


def unit(values) -> np.ndarray:
    v = np.asarray(values, dtype=np.float64)
    return v / np.linalg.norm(v)


def atomic(values, modality=Modality.TEXT) -> SliceEmbedding:
    return SliceEmbedding.atomic(modality, unit(values))


def composite(specialist, shared, modality=Modality.TEXT) -> SliceEmbedding:
    return SliceEmbedding.composite(modality, unit(specialist), unit(shared))


def seq(doc_id, *slices) -> InterleavedSequence:
    return InterleavedSequence(doc_id, tuple(slices))


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)
