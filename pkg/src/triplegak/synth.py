"""Seeded synthetic data: random slices for oracle harnesses and the
two-cluster projector-training task used by the end-to-end checks."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import InterleavedSequence, Modality, PrefixView, SliceEmbedding, make_prefix_views
from .manifest import encode_f32, write_manifest


def unit(rng: np.random.Generator, dim: int) -> np.ndarray:
    v = rng.standard_normal(dim)
    return v / np.linalg.norm(v)


def jitter_unit(rng: np.random.Generator, center: np.ndarray, scale: float) -> np.ndarray:
    v = center + scale * rng.standard_normal(len(center))
    return v / np.linalg.norm(v)


def random_composite_slice(rng: np.random.Generator, d1: int, d2: int,
                           modality: Modality | None = None) -> SliceEmbedding:
    if modality is None:
        modality = Modality.IMAGE if rng.random() < 0.5 else Modality.TEXT
    return SliceEmbedding.composite(modality, unit(rng, d1), unit(rng, d2))


def random_atomic_slice(rng: np.random.Generator, d: int,
                        modality: Modality | None = None) -> SliceEmbedding:
    if modality is None:
        modality = Modality.IMAGE if rng.random() < 0.5 else Modality.TEXT
    return SliceEmbedding.atomic(modality, unit(rng, d))


def random_sequence(rng: np.random.Generator, doc_id: str, length: int,
                    d1: int = 8, d2: int = 8, atomic: bool = False) -> InterleavedSequence:
    if atomic:
        slices = tuple(random_atomic_slice(rng, d1 + d2) for _ in range(length))
    else:
        slices = tuple(random_composite_slice(rng, d1, d2) for _ in range(length))
    return InterleavedSequence(doc_id, slices)


@dataclass(frozen=True)
class TwoClusterTask:
    """64 interleaved docs in 2 latent clusters with matching hidden states.

    Slice embeddings cluster in both the specialist and shared subspaces,
    so the label matrix separates the clusters; hidden vectors carry the
    cluster signal along one axis buried under isotropic noise, which a
    random projector mixes away but a trained one can recover.
    """

    docs: tuple[InterleavedSequence, ...]
    views: tuple[PrefixView, ...]
    hidden: np.ndarray
    clusters: tuple[int, ...]
    d1: int
    d2: int
    hidden_dim: int
    output_dim: int


def two_cluster_task(seed: int = 42, n_docs: int = 64, slices_per_doc: int = 3,
                     d1: int = 16, d2: int = 16, hidden_dim: int = 32,
                     output_dim: int = 16) -> TwoClusterTask:
    rng = np.random.default_rng(seed)
    spec_centers = {
        (k, mod): unit(rng, d1) for k in (0, 1) for mod in (Modality.IMAGE, Modality.TEXT)
    }
    shared_centers = {k: unit(rng, d2) for k in (0, 1)}

    docs = []
    clusters = []
    for i in range(n_docs):
        k = i % 2
        clusters.append(k)
        slices = []
        for t in range(slices_per_doc):
            mod = Modality.TEXT if t % 2 == 0 else Modality.IMAGE
            slices.append(
                SliceEmbedding.composite(
                    mod,
                    jitter_unit(rng, spec_centers[(k, mod)], 0.12),
                    jitter_unit(rng, shared_centers[k], 0.12),
                )
            )
        docs.append(InterleavedSequence(f"doc{i:03d}", tuple(slices)))

    views = tuple(make_prefix_views(doc, [slices_per_doc])[0] for doc in docs)

    # cluster means sit on two different axes (so a linear projector can
    # place the cluster prototypes anywhere from aligned to orthogonal);
    # the signal is buried under isotropic noise
    hidden = 0.35 * rng.standard_normal((n_docs, hidden_dim))
    for i, k in enumerate(clusters):
        hidden[i, k] += 2.0

    return TwoClusterTask(
        docs=tuple(docs),
        views=views,
        hidden=hidden,
        clusters=tuple(clusters),
        d1=d1,
        d2=d2,
        hidden_dim=hidden_dim,
        output_dim=output_dim,
    )


def write_two_cluster_files(directory, seed: int = 42) -> tuple[str, str]:
    """Materialize the task as (manifest.jsonl, batch.jsonl) for the CLI."""
    import json
    import os

    task = two_cluster_task(seed=seed)
    manifest_path = os.path.join(str(directory), "manifest.jsonl")
    batch_path = os.path.join(str(directory), "batch.jsonl")
    write_manifest(manifest_path, task.docs)
    with open(batch_path, "w", encoding="utf-8") as fh:
        for view, hidden_row in zip(task.views, task.hidden):
            fh.write(json.dumps({
                "doc_id": view.source_doc_id,
                "cut": view.cut,
                "hidden": encode_f32(hidden_row),
            }) + "\n")
    return manifest_path, batch_path
