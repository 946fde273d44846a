import base64
import json
import logging

import numpy as np
import pytest

from triplegak.core import Form, Modality
from triplegak.errors import ManifestError
from triplegak.manifest import decode_f32, encode_f32, load_manifest, write_manifest
from triplegak.synth import random_sequence


def test_round_trip(tmp_path, rng):
    docs = [random_sequence(rng, f"doc{i}", 2 + i) for i in range(3)]
    path = tmp_path / "m.jsonl"
    write_manifest(path, docs, metas={"doc0": "caption zero"})
    loaded = load_manifest(path)
    assert list(loaded.docs) == ["doc0", "doc1", "doc2"]
    assert loaded.metas == {"doc0": "caption zero"}
    for doc in docs:
        got = loaded.docs[doc.doc_id]
        assert len(got) == len(doc)
        for a, b in zip(got.slices, doc.slices):
            assert a.modality is b.modality and a.form is b.form
            # float32 quantization is the only loss
            assert np.allclose(a.specialist, b.specialist, atol=1e-6)
            assert np.allclose(a.shared, b.shared, atol=1e-6)


def test_encode_decode_f32_exact():
    v = np.array([0.25, -1.5, 3.0], dtype=np.float32)
    out = decode_f32(encode_f32(v), "t")
    assert np.array_equal(out, v.astype(np.float64))


def test_atomic_records(tmp_path, rng):
    docs = [random_sequence(rng, "a", 2, atomic=True)]
    path = tmp_path / "m.jsonl"
    write_manifest(path, docs)
    loaded = load_manifest(path)
    assert loaded.docs["a"].slices[0].form is Form.ATOMIC


def test_duplicate_doc_id(tmp_path, rng):
    doc = random_sequence(rng, "dup", 1)
    path = tmp_path / "m.jsonl"
    with open(path, "w") as fh:
        from triplegak.manifest import slice_to_record

        rec = json.dumps({"doc_id": "dup", "slices": [slice_to_record(s) for s in doc.slices]})
        fh.write(rec + "\n" + rec + "\n")
    with pytest.raises(ManifestError):
        load_manifest(path)


def test_invalid_json_line(tmp_path):
    path = tmp_path / "m.jsonl"
    path.write_text("{not json\n")
    with pytest.raises(ManifestError):
        load_manifest(path)


def test_missing_fields(tmp_path):
    path = tmp_path / "m.jsonl"
    path.write_text(json.dumps({"doc_id": "x"}) + "\n")
    with pytest.raises(ManifestError):
        load_manifest(path)


def test_bad_base64(tmp_path):
    path = tmp_path / "m.jsonl"
    record = {"doc_id": "x", "slices": [{"modality": "text", "form": "atomic", "whole": "!!notb64!!"}]}
    path.write_text(json.dumps(record) + "\n")
    with pytest.raises(ManifestError):
        load_manifest(path)


def test_non_finite_rejected(tmp_path):
    path = tmp_path / "m.jsonl"
    payload = encode_f32([np.inf, 0.0])
    record = {"doc_id": "x", "slices": [{"modality": "text", "form": "atomic", "whole": payload}]}
    path.write_text(json.dumps(record) + "\n")
    with pytest.raises(ManifestError):
        load_manifest(path)


def test_degenerate_rejected(tmp_path):
    path = tmp_path / "m.jsonl"
    record = {"doc_id": "x", "slices": [{"modality": "text", "form": "atomic",
                                         "whole": encode_f32([0.0, 0.0])}]}
    path.write_text(json.dumps(record) + "\n")
    with pytest.raises(ManifestError):
        load_manifest(path)


def test_off_norm_renormalized_with_warning(tmp_path, caplog):
    path = tmp_path / "m.jsonl"
    record = {"doc_id": "x", "slices": [{"modality": "text", "form": "atomic",
                                         "whole": encode_f32([2.0, 0.0])}]}
    path.write_text(json.dumps(record) + "\n")
    with caplog.at_level(logging.WARNING, logger="triplegak.manifest"):
        loaded = load_manifest(path)
    assert any("re-normalizing" in r.message for r in caplog.records)
    assert np.allclose(loaded.docs["x"].slices[0].whole, [1.0, 0.0])


def test_shape_disagreement_across_corpus(tmp_path, rng):
    from triplegak.manifest import slice_to_record

    a = random_sequence(rng, "a", 1, d1=4, d2=4)
    b = random_sequence(rng, "b", 1, d1=5, d2=4)
    path = tmp_path / "m.jsonl"
    with open(path, "w") as fh:
        for doc in (a, b):
            fh.write(json.dumps({"doc_id": doc.doc_id,
                                 "slices": [slice_to_record(s) for s in doc.slices]}) + "\n")
    with pytest.raises(ManifestError):
        load_manifest(path)


def test_payload_not_multiple_of_four(tmp_path):
    path = tmp_path / "m.jsonl"
    bad = base64.b64encode(b"\x00\x00\x00").decode()
    record = {"doc_id": "x", "slices": [{"modality": "text", "form": "atomic", "whole": bad}]}
    path.write_text(json.dumps(record) + "\n")
    with pytest.raises(ManifestError):
        load_manifest(path)
