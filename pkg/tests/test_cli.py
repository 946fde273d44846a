import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

import jsonschema

from triplegak.manifest import encode_f32, write_manifest
from triplegak.synth import random_sequence, write_two_cluster_files

SCHEMA = json.loads((Path(__file__).parent.parent / "schemas" / "cli-output.schema.json").read_text())


def run_cli(*argv, stdin=None):
    proc = subprocess.run(
        [sys.executable, "-m", "triplegak.cli", *argv],
        capture_output=True,
        text=True,
        input=stdin,
    )
    return proc


def check_json(stdout: str) -> dict:
    payload = json.loads(stdout)
    jsonschema.validate(payload, SCHEMA)
    return payload


@pytest.fixture(scope="module")
def manifest_path(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("cli")
    rng = np.random.default_rng(99)
    docs = [random_sequence(rng, f"doc{i}", 1 + i % 3) for i in range(6)]
    path = tmp / "manifest.jsonl"
    write_manifest(path, docs, metas={"doc0": "zero"})
    return path


class TestKernelEval:
    def test_identical_docs_normalized_one(self, manifest_path):
        proc = run_cli("kernel-eval", "--manifest", str(manifest_path),
                       "--doc-a", "doc2", "--doc-b", "doc2")
        assert proc.returncode == 0
        lines = dict(line.split("=", 1) for line in proc.stdout.strip().splitlines())
        assert lines["gak_normalized"] == "1.00000000000"  # 12 significant digits
        assert float(lines["gak_raw"]) > 0

    def test_single_slice_matches_closed_form(self, tmp_path):
        # atomic single-slice docs: the closed form in the cosine is an
        # independent route to the printed raw value
        from triplegak.gak import single_slice_gak
        from triplegak.manifest import load_manifest

        rng = np.random.default_rng(5)
        docs = [random_sequence(rng, d, 1, atomic=True) for d in ("a", "b")]
        manifest = tmp_path / "atomic.jsonl"
        write_manifest(manifest, docs)
        loaded = load_manifest(manifest)
        cos = float(loaded.docs["a"].slices[0].whole @ loaded.docs["b"].slices[0].whole)
        proc = run_cli("kernel-eval", "--manifest", str(manifest),
                       "--doc-a", "a", "--doc-b", "b", "--delta", "1.5", "--json")
        assert proc.returncode == 0
        payload = check_json(proc.stdout)
        # float32 ingestion leaves norms at 1 +- ~6e-9, which bounds the
        # agreement with the exact-unit-norm closed form
        assert payload["gak_raw"] == pytest.approx(single_slice_gak(cos, 1.5), abs=1e-7)

    def test_missing_doc_exit_2(self, manifest_path):
        proc = run_cli("kernel-eval", "--manifest", str(manifest_path),
                       "--doc-a", "doc0", "--doc-b", "ghost")
        assert proc.returncode == 2
        assert "ghost" in proc.stderr

    def test_parse_failure_exit_3(self, tmp_path):
        bad = tmp_path / "bad.jsonl"
        bad.write_text("{broken\n")
        proc = run_cli("kernel-eval", "--manifest", str(bad), "--doc-a", "a", "--doc-b", "b")
        assert proc.returncode == 3

    def test_effective_config_echoed(self, manifest_path):
        proc = run_cli("kernel-eval", "--manifest", str(manifest_path),
                       "--doc-a", "doc0", "--doc-b", "doc1", "--delta", "2.5")
        assert "# config delta=2.5" in proc.stderr

    def test_show_path(self, manifest_path):
        proc = run_cli("kernel-eval", "--manifest", str(manifest_path),
                       "--doc-a", "doc2", "--doc-b", "doc2", "--show-path", "--json")
        payload = check_json(proc.stdout)
        assert payload["path"][0] == [1, 1]


class TestConfigFile:
    def test_flags_beat_config_file(self, manifest_path, tmp_path):
        cfg = tmp_path / "cfg"
        cfg.write_text("delta=3.0\nseed=7\n")
        proc = run_cli("kernel-eval", "--manifest", str(manifest_path),
                       "--doc-a", "doc0", "--doc-b", "doc1",
                       "--config", str(cfg), "--delta", "1.5")
        assert "# config delta=1.5" in proc.stderr
        assert "seed=7" in proc.stderr

    def test_unknown_key_fatal_named(self, manifest_path, tmp_path):
        cfg = tmp_path / "cfg"
        cfg.write_text("detla=3.0\n")
        proc = run_cli("kernel-eval", "--manifest", str(manifest_path),
                       "--doc-a", "doc0", "--doc-b", "doc1", "--config", str(cfg))
        assert proc.returncode == 3
        assert "detla" in proc.stderr

    def test_bad_value_fatal_named(self, manifest_path, tmp_path):
        cfg = tmp_path / "cfg"
        cfg.write_text("delta=fast\n")
        proc = run_cli("kernel-eval", "--manifest", str(manifest_path),
                       "--doc-a", "doc0", "--doc-b", "doc1", "--config", str(cfg))
        assert proc.returncode == 3
        assert "delta" in proc.stderr


class TestSelftest:
    def test_list(self):
        proc = run_cli("selftest", "--list")
        assert proc.returncode == 0
        assert "dp-vs-enumeration" in proc.stdout

    def test_passes_and_deterministic(self):
        a = run_cli("selftest", "--seed", "42")
        b = run_cli("selftest", "--seed", "42")
        assert a.returncode == 0 and b.returncode == 0
        assert a.stdout == b.stdout
        assert "overall=pass" in a.stdout

    def test_fault_injection_fails_named_suite(self):
        proc = run_cli("selftest", "--inject-fault", "dp-boundary")
        assert proc.returncode == 1
        assert "suite=dp-vs-enumeration status=fail" in proc.stdout

    def test_json_schema(self):
        proc = run_cli("selftest", "--json")
        payload = check_json(proc.stdout)
        assert payload["passed"] is True


class TestIndexQueryRecall:
    def test_index_query_self_hit(self, manifest_path, tmp_path):
        out = tmp_path / "i.sgix"
        proc = run_cli("index", "--manifest", str(manifest_path), "--out", str(out), "--json")
        assert proc.returncode == 0
        payload = check_json(proc.stdout)
        assert payload["entries"] == 6
        proc = run_cli("query", "--index", str(out), "--manifest", str(manifest_path),
                       "--doc", "doc3", "--k", "3", "--json")
        payload = check_json(proc.stdout)
        assert payload["results"][0]["doc_id"] == "doc3"
        assert payload["results"][0]["score"] == pytest.approx(1.0, abs=1e-6)

    def test_gak_slow_path_query(self, manifest_path, tmp_path):
        proc = run_cli("query", "--manifest", str(manifest_path), "--doc", "doc3",
                       "--k", "2", "--score", "gak", "--normalize-gak", "--json")
        payload = check_json(proc.stdout)
        assert payload["results"][0]["doc_id"] == "doc3"
        assert payload["results"][0]["score"] == pytest.approx(1.0, abs=1e-12)

    def test_eval_recall_constructed_ranks(self, tmp_path):
        # three orthogonal docs; gold deliberately at rank 3
        docs_rng = np.random.default_rng(1)
        from triplegak.core import InterleavedSequence, Modality, SliceEmbedding

        basis = np.eye(3)
        docs = [InterleavedSequence(f"d{i}", (SliceEmbedding.atomic(Modality.TEXT, basis[i]),))
                for i in range(3)]
        manifest = tmp_path / "m.jsonl"
        write_manifest(manifest, docs)
        out = tmp_path / "i.sgix"
        assert run_cli("index", "--manifest", str(manifest), "--out", str(out)).returncode == 0
        cases = tmp_path / "cases.jsonl"
        q = encode_f32([1.0, 0.5, 0.0])
        cases.write_text(json.dumps({"query_whole": q, "gold_doc_ids": ["d2"]}) + "\n")
        proc = run_cli("eval-recall", "--index", str(out), "--cases", str(cases),
                       "--ks", "1,5", "--json")
        assert proc.returncode == 0
        payload = check_json(proc.stdout)
        assert payload["recalls"]["1"] == 0.0
        assert payload["recalls"]["5"] == 1.0
        assert payload["ranks"] == [3]

    def test_missing_gold_exit_2(self, manifest_path, tmp_path):
        out = tmp_path / "i.sgix"
        run_cli("index", "--manifest", str(manifest_path), "--out", str(out))
        cases = tmp_path / "cases.jsonl"
        cases.write_text(json.dumps({"query_doc_id": "doc0", "gold_doc_ids": ["ghost"]}) + "\n")
        proc = run_cli("eval-recall", "--index", str(out), "--cases", str(cases),
                       "--manifest", str(manifest_path))
        assert proc.returncode == 2


class TestWinogroundCli:
    def test_three_fixtures(self, tmp_path):
        scores = tmp_path / "scores.jsonl"
        lines = [
            {"s": [[1.0, 0.0], [0.0, 1.0]]},
            {"s": [[0.0, 1.0], [1.0, 0.0]]},
            {"s": [[0.9, 0.2], [0.8, 0.85]]},
        ]
        scores.write_text("\n".join(json.dumps(x) for x in lines) + "\n")
        proc = run_cli("eval-winoground", "--scores", str(scores), "--json")
        payload = check_json(proc.stdout)
        assert payload["text"] == pytest.approx(2 / 3)
        assert payload["image"] == pytest.approx(2 / 3)
        assert payload["group"] == pytest.approx(2 / 3)

    def test_malformed_exit_3(self, tmp_path):
        scores = tmp_path / "scores.jsonl"
        scores.write_text(json.dumps({"s": [[1.0, 0.0]]}) + "\n")
        proc = run_cli("eval-winoground", "--scores", str(scores))
        assert proc.returncode == 3


class TestTrainProjectorCli:
    def test_fixture_trains_with_non_increasing_trace(self, tmp_path):
        manifest, batch = write_two_cluster_files(tmp_path, seed=42)
        proj = tmp_path / "proj.npy"
        trace = tmp_path / "trace.tsv"
        proc = run_cli("train-projector", "--manifest", manifest, "--batch", batch,
                       "--out-dim", "16", "--steps", "60", "--lr", "1.0",
                       "--out-projector", str(proj), "--trace", str(trace),
                       "--normalize-gak", "--seed", "42", "--json")
        assert proc.returncode == 0, proc.stderr
        payload = check_json(proc.stdout)
        assert payload["final_loss"] < payload["initial_loss"]
        rows = [line.split("\t") for line in trace.read_text().strip().splitlines()]
        losses = [float(v) for _, v in rows]
        assert [int(s) for s, _ in rows] == list(range(len(rows)))
        assert all(a >= b for a, b in zip(losses, losses[1:]))
        assert np.load(proj).shape == (32, 16)


class TestBindEndpoint:
    def test_triple_distance_and_errors(self):
        requests = [
            {"op": "triple_distance",
             "a": {"modality": "text", "form": "atomic", "whole": [1.0, 0.0]},
             "b": {"modality": "text", "form": "atomic", "whole": [-1.0, 0.0]}},
            {"op": "nope"},
            "not json at all",
        ]
        stdin = "\n".join(json.dumps(r) if not isinstance(r, str) else r for r in requests) + "\n"
        proc = run_cli("bind", stdin=stdin)
        assert proc.returncode == 0
        lines = [json.loads(line) for line in proc.stdout.strip().splitlines()]
        assert lines[0]["ok"] and lines[0]["value"] == pytest.approx(4.0)
        assert not lines[1]["ok"] and lines[1]["error"]["code"] == "bad-request"
        assert not lines[2]["ok"]

    def test_gak_forward_round_trip(self):
        req = {
            "op": "gak_forward",
            "x": [{"modality": "text", "form": "atomic", "whole": [1.0, 0.0]},
                  {"modality": "image", "form": "atomic", "whole": [0.0, 1.0]}],
            "y": [{"modality": "text", "form": "atomic", "whole": [1.0, 0.0]},
                  {"modality": "image", "form": "atomic", "whole": [0.0, 1.0]}],
            "config": {"normalize_gak": False},
        }
        proc = run_cli("bind", stdin=json.dumps(req) + "\n")
        value = json.loads(proc.stdout)["value"]
        import math

        u = math.exp(-0.5)
        expected = 1.0 + 2.0 * u / (2.0 - u)
        assert value == pytest.approx(expected, rel=1e-14)

    def test_mse_and_gradient(self):
        reqs = [
            {"op": "mse_loss", "mr": [[1.0, 0.0], [0.0, 1.0]], "ml": [[1.0, 0.5], [0.5, 1.0]]},
            {"op": "loss_gradient", "reps": [[1.0, 0.0], [0.0, 1.0]],
             "ml": [[1.0, 0.0], [0.0, 1.0]]},
        ]
        proc = run_cli("bind", stdin="\n".join(json.dumps(r) for r in reqs) + "\n")
        lines = [json.loads(line) for line in proc.stdout.strip().splitlines()]
        assert lines[0]["value"] == 0.25
        grads = np.asarray(lines[1]["value"])
        assert np.abs(grads).max() <= 1e-12


class TestBackendsCommand:
    def test_json_schema(self):
        proc = run_cli("backends", "--json")
        payload = check_json(proc.stdout)
        assert payload["active"] in payload["available"]


class TestExitCodes:
    def test_unreadable_index_exit_3(self, tmp_path, manifest_path):
        bad = tmp_path / "bad.sgix"
        bad.write_bytes(b"JUNKJUNKJUNKJUNKJUNKJUNK")
        proc = run_cli("query", "--index", str(bad), "--manifest", str(manifest_path), "--doc", "doc0")
        assert proc.returncode == 3

    def test_argparse_error_exit_2(self):
        proc = run_cli("kernel-eval")
        assert proc.returncode == 2
