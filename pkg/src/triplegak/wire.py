"""JSON wire protocol for the array-in/array-out endpoint.

Each request is one JSON object: {"op": ..., ...op-specific fields...}.
Vectors travel as JSON number arrays, which round-trip 64-bit floats
exactly. Responses are {"ok": true, "value": ...} or {"ok": false,
"error": {"code": ..., "message": ...}}.
"""

from __future__ import annotations

import numpy as np

from .core import Form, KernelConfig, KernelMode, Modality, PrefixView, RepresentationVector, SingleSliceMode
from .errors import FormatError, TripleGakError
from .gak import gak_forward
from .kernel import triple_distance
from .loss import MatrixKind, SimilarityMatrix, label_matrix, loss_gradient, mse_loss


class RequestError(FormatError):
    code = "bad-request"


def _vector(obj, where: str) -> np.ndarray:
    try:
        vec = np.asarray(obj, dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise RequestError(f"{where}: not a numeric array") from exc
    if vec.ndim != 1 or vec.size == 0:
        raise RequestError(f"{where}: expected a non-empty 1-d array")
    return vec


def _matrix(obj, where: str) -> np.ndarray:
    try:
        mat = np.asarray(obj, dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise RequestError(f"{where}: not a numeric matrix") from exc
    if mat.ndim != 2:
        raise RequestError(f"{where}: expected a 2-d array")
    return mat


def parse_slice(obj, where: str):
    from .core import SliceEmbedding

    if not isinstance(obj, dict):
        raise RequestError(f"{where}: slice must be an object")
    try:
        modality = Modality(obj.get("modality"))
        form = Form(obj.get("form"))
    except ValueError as exc:
        raise RequestError(f"{where}: bad modality/form") from exc
    if form is Form.COMPOSITE:
        return SliceEmbedding.composite(
            modality,
            _vector(obj.get("specialist"), f"{where}.specialist"),
            _vector(obj.get("shared"), f"{where}.shared"),
        )
    return SliceEmbedding.atomic(modality, _vector(obj.get("whole"), f"{where}.whole"))


def parse_config(obj) -> KernelConfig:
    obj = obj or {}
    if not isinstance(obj, dict):
        raise RequestError("config must be an object")
    kwargs = {}
    if "delta" in obj:
        kwargs["delta"] = float(obj["delta"])
    if "normalize_gak" in obj:
        kwargs["normalize_gak"] = bool(obj["normalize_gak"])
    if "kernel_mode" in obj:
        kwargs["kernel_mode"] = KernelMode(obj["kernel_mode"])
    if "label_single_slice_mode" in obj:
        kwargs["label_single_slice_mode"] = SingleSliceMode(obj["label_single_slice_mode"])
    if "cell_cap" in obj:
        kwargs["cell_cap"] = int(obj["cell_cap"])
    try:
        return KernelConfig(**kwargs)
    except (ValueError, TypeError) as exc:
        raise RequestError(f"bad config: {exc}") from exc


def _parse_sequence(obj, where: str):
    from .core import InterleavedSequence

    if isinstance(obj, dict) and "slices" in obj:
        doc_id = str(obj.get("doc_id", where))
        slices = obj["slices"]
    else:
        doc_id = where
        slices = obj
    if not isinstance(slices, list) or not slices:
        raise RequestError(f"{where}: expected a non-empty slice list")
    return InterleavedSequence(doc_id, tuple(parse_slice(s, f"{where}[{i}]") for i, s in enumerate(slices)))


def _parse_view(obj, where: str) -> PrefixView:
    if not isinstance(obj, dict) or "slices" not in obj:
        raise RequestError(f"{where}: view must be an object with 'slices'")
    slices = tuple(parse_slice(s, f"{where}.slices[{i}]") for i, s in enumerate(obj["slices"]))
    return PrefixView(
        source_doc_id=str(obj.get("source_doc_id", where)),
        cut=int(obj.get("cut", len(slices))),
        slices=slices,
    )


def handle_request(req: dict) -> dict:
    try:
        if not isinstance(req, dict) or "op" not in req:
            raise RequestError("request must be an object with an 'op' field")
        op = req["op"]
        if op == "triple_distance":
            mode = KernelMode(req.get("mode", "triple"))
            value = triple_distance(parse_slice(req.get("a"), "a"), parse_slice(req.get("b"), "b"), mode)
        elif op == "gak_forward":
            cfg = parse_config(req.get("config"))
            value = gak_forward(_parse_sequence(req.get("x"), "x"), _parse_sequence(req.get("y"), "y"), cfg)
        elif op == "label_matrix":
            cfg = parse_config(req.get("config"))
            views = req.get("views")
            if not isinstance(views, list) or not views:
                raise RequestError("label_matrix needs a non-empty 'views' list")
            mat = label_matrix([_parse_view(v, f"views[{i}]") for i, v in enumerate(views)], cfg)
            value = mat.entries.tolist()
        elif op == "mse_loss":
            mr = SimilarityMatrix.build(_matrix(req.get("mr"), "mr"), MatrixKind.REPRESENTATION)
            ml = SimilarityMatrix.build(_matrix(req.get("ml"), "ml"), MatrixKind.LABEL)
            value = mse_loss(mr, ml)
        elif op == "loss_gradient":
            rows = _matrix(req.get("reps"), "reps")
            reps = [RepresentationVector.normalized(f"r{i}", 1, rows[i]) for i in range(rows.shape[0])]
            ml = SimilarityMatrix.build(_matrix(req.get("ml"), "ml"), MatrixKind.LABEL)
            value = [g.tolist() for g in loss_gradient(reps, ml)]
        else:
            raise RequestError(f"unknown op {op!r}")
        return {"ok": True, "value": value}
    except TripleGakError as exc:
        return {"ok": False, "error": {"code": exc.code, "message": str(exc)}}
    except Exception as exc:  # defensive: the service loop must keep serving
        return {"ok": False, "error": {"code": "internal-error", "message": f"{type(exc).__name__}: {exc}"}}
