"""Line-delimited JSON manifest of interleaved documents.

One JSON object per line: ``{"doc_id": ..., "slices": [...]}`` where each
slice carries ``modality`` ("image"|"text"), ``form``
("composite"|"atomic"), and base64-encoded little-endian float32 arrays:
``specialist`` and ``shared`` for composite slices, ``whole`` for atomic
ones. An optional ``meta`` string per record is passed through to the
retrieval index.

The loader re-normalizes vectors whose norm drifts beyond 1e-6 (with a
warning) and rejects degenerate ones (norm below 1e-9) or any non-finite
value.
"""

from __future__ import annotations

import base64
import json
import logging

import numpy as np

from .core import DEGENERATE_NORM, NORM_TOL, Form, InterleavedSequence, Modality, SliceEmbedding
from .errors import ManifestError

log = logging.getLogger(__name__)


def encode_f32(values) -> str:
    return base64.b64encode(np.asarray(values, dtype="<f4").tobytes()).decode("ascii")


def decode_f32(text: str, where: str) -> np.ndarray:
    try:
        raw = base64.b64decode(text, validate=True)
    except (ValueError, TypeError) as exc:
        raise ManifestError(f"{where}: bad base64 payload") from exc
    if len(raw) % 4:
        raise ManifestError(f"{where}: payload length {len(raw)} is not a multiple of 4")
    if not raw:
        raise ManifestError(f"{where}: empty vector")
    return np.frombuffer(raw, dtype="<f4").astype(np.float64)


def _clean(vec: np.ndarray, where: str) -> np.ndarray:
    if not np.all(np.isfinite(vec)):
        raise ManifestError(f"{where}: non-finite value")
    norm = float(np.linalg.norm(vec))
    if norm < DEGENERATE_NORM:
        raise ManifestError(f"{where}: degenerate vector (norm {norm:.3g})")
    if abs(norm - 1.0) > NORM_TOL:
        log.warning("%s: re-normalizing (norm %.6g)", where, norm)
        vec = vec / norm
    return vec


def _parse_slice(obj: dict, where: str) -> SliceEmbedding:
    try:
        modality = Modality(obj["modality"])
        form = Form(obj["form"])
    except (KeyError, ValueError) as exc:
        raise ManifestError(f"{where}: bad or missing modality/form") from exc
    if form is Form.COMPOSITE:
        if "specialist" not in obj or "shared" not in obj:
            raise ManifestError(f"{where}: composite slice needs 'specialist' and 'shared'")
        return SliceEmbedding.composite(
            modality,
            _clean(decode_f32(obj["specialist"], f"{where}.specialist"), f"{where}.specialist"),
            _clean(decode_f32(obj["shared"], f"{where}.shared"), f"{where}.shared"),
        )
    if "whole" not in obj:
        raise ManifestError(f"{where}: atomic slice needs 'whole'")
    return SliceEmbedding.atomic(modality, _clean(decode_f32(obj["whole"], f"{where}.whole"), f"{where}.whole"))


class Manifest:
    """Parsed manifest: ordered doc_id -> sequence, plus meta payloads."""

    def __init__(self):
        self.docs: dict[str, InterleavedSequence] = {}
        self.metas: dict[str, str] = {}

    def __len__(self) -> int:
        return len(self.docs)

    def require(self, doc_id: str) -> InterleavedSequence:
        from .errors import MissingDoc

        if doc_id not in self.docs:
            raise MissingDoc(f"doc {doc_id!r} not in manifest")
        return self.docs[doc_id]


def _check_corpus_shapes(manifest: Manifest) -> None:
    composite: set[tuple[int, int]] = set()
    atomic: set[int] = set()
    for seq in manifest.docs.values():
        for s in seq.slices:
            if s.form is Form.COMPOSITE:
                composite.add((len(s.specialist), len(s.shared)))
            else:
                atomic.add(len(s.whole))
    if len(composite) > 1:
        raise ManifestError(f"composite slices disagree on (d1, d2): {sorted(composite)}")
    if len(atomic) > 1:
        raise ManifestError(f"atomic slices disagree on dim: {sorted(atomic)}")


def load_manifest(path) -> Manifest:
    manifest = Manifest()
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            where = f"{path}:{lineno}"
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ManifestError(f"{where}: invalid JSON ({exc.msg})") from exc
            if not isinstance(obj, dict) or "doc_id" not in obj or "slices" not in obj:
                raise ManifestError(f"{where}: record needs 'doc_id' and 'slices'")
            doc_id = str(obj["doc_id"])
            if doc_id in manifest.docs:
                raise ManifestError(f"{where}: duplicate doc_id {doc_id!r}")
            slices = obj["slices"]
            if not isinstance(slices, list) or not slices:
                raise ManifestError(f"{where}: 'slices' must be a non-empty list")
            parsed = tuple(
                _parse_slice(s, f"{where}.slices[{i}]") for i, s in enumerate(slices)
            )
            manifest.docs[doc_id] = InterleavedSequence(doc_id, parsed)
            if "meta" in obj:
                manifest.metas[doc_id] = str(obj["meta"])
    if not manifest.docs:
        raise ManifestError(f"{path}: empty manifest")
    _check_corpus_shapes(manifest)
    return manifest


def slice_to_record(s: SliceEmbedding) -> dict:
    rec = {"modality": s.modality.value, "form": s.form.value}
    if s.form is Form.COMPOSITE:
        rec["specialist"] = encode_f32(s.specialist)
        rec["shared"] = encode_f32(s.shared)
    else:
        rec["whole"] = encode_f32(s.whole)
    return rec


def write_manifest(path, docs, metas: dict[str, str] | None = None) -> None:
    metas = metas or {}
    with open(path, "w", encoding="utf-8") as fh:
        for seq in docs:
            rec = {"doc_id": seq.doc_id, "slices": [slice_to_record(s) for s in seq.slices]}
            if seq.doc_id in metas:
                rec["meta"] = metas[seq.doc_id]
            fh.write(json.dumps(rec, separators=(",", ":")) + "\n")
