"""Command-line surface.

Configuration precedence is flags > config file > defaults; the
effective configuration is echoed on standard error. Human-readable
output is key=value lines with floats at 12 significant digits; --json
swaps in a single JSON object with full-precision floats (repr
round-trip, still deterministic). Exit codes: 0 success, 1 internal
failure, 2 user input error, 3 format error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from dataclasses import dataclass

import numpy as np

from . import backend, selftest, wire
from .core import (
    KernelConfig,
    KernelMode,
    PoolPolicy,
    RepresentationVector,
    SingleSliceMode,
    make_prefix_views,
    pool_representation,
)
from .errors import ConfigError, FormatError, TripleGakError, UserInputError
from .gak import best_alignment_path, gak_forward, gak_forward_raw, mean_pairwise_similarity
from .loss import TrainerConfig, train_projector, write_loss_trace
from .manifest import decode_f32, load_manifest
from .retrieval import (
    EvalCase,
    build_index,
    load_index,
    query_topk,
    rank_all,
    recall_at_k,
    save_index,
    winoground_scores,
)


@dataclass
class CliConfig:
    delta: float = 1.0
    normalize_gak: bool = False
    kernel_mode: KernelMode = KernelMode.TRIPLE
    label_single_slice_mode: SingleSliceMode = SingleSliceMode.COSINE
    seed: int = 42
    cell_cap: int = 16384

    def kernel_config(self) -> KernelConfig:
        return KernelConfig(
            delta=self.delta,
            normalize_gak=self.normalize_gak,
            label_single_slice_mode=self.label_single_slice_mode,
            kernel_mode=self.kernel_mode,
            cell_cap=self.cell_cap,
        )

    def echo(self) -> str:
        return (
            f"# config delta={self.delta:g} normalize_gak={str(self.normalize_gak).lower()} "
            f"kernel_mode={self.kernel_mode.value} label_single_slice_mode={self.label_single_slice_mode.value} "
            f"seed={self.seed} cell_cap={self.cell_cap}"
        )


def fmt(v: float) -> str:
    # '#' keeps trailing zeros so results always carry 12 significant digits
    return f"{v:#.12g}"


_BOOLS = {"true": True, "1": True, "yes": True, "false": False, "0": False, "no": False}


def _parse_bool(text: str, key: str) -> bool:
    try:
        return _BOOLS[text.strip().lower()]
    except KeyError:
        raise ConfigError(f"bad boolean for key '{key}': {text!r}")


def load_config_file(path) -> dict:
    values: dict = {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}")
    for lineno, line in enumerate(lines, start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value, got {line!r}")
        key, _, raw = line.partition("=")
        key, raw = key.strip(), raw.strip()
        try:
            if key == "delta":
                values[key] = float(raw)
            elif key == "normalize_gak":
                values[key] = _parse_bool(raw, key)
            elif key == "kernel_mode":
                values[key] = KernelMode(raw)
            elif key == "label_single_slice_mode":
                values[key] = SingleSliceMode(raw)
            elif key == "seed":
                values[key] = int(raw)
            elif key == "cell_cap":
                values[key] = int(raw)
            else:
                raise ConfigError(f"unknown config key '{key}'")
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"bad value for key '{key}': {raw!r} ({exc})")
    return values


def effective_config(args) -> CliConfig:
    values = load_config_file(args.config) if args.config else {}
    merged = CliConfig()
    for f in dataclasses.fields(CliConfig):
        flag = getattr(args, f.name, None)
        if flag is not None:
            setattr(merged, f.name, flag)
        elif f.name in values:
            setattr(merged, f.name, values[f.name])
    if merged.delta <= 0:
        raise ConfigError(f"bad value for key 'delta': must be positive, got {merged.delta}")
    if merged.cell_cap < 1:
        raise ConfigError(f"bad value for key 'cell_cap': must be >= 1, got {merged.cell_cap}")
    return merged


def add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="key=value config file")
    parser.add_argument("--delta", type=float, help="kernel bandwidth scale (default 1.0)")
    parser.add_argument("--normalize-gak", dest="normalize_gak", action="store_const", const=True,
                        help="normalize sequence similarities to (0, 1]")
    parser.add_argument("--raw-gak", dest="normalize_gak", action="store_const", const=False,
                        help="keep raw alignment sums (default)")
    parser.add_argument("--kernel-mode", dest="kernel_mode", type=KernelMode,
                        choices=list(KernelMode), help="triple or shared_only")
    parser.add_argument("--label-single-slice-mode", dest="label_single_slice_mode", type=SingleSliceMode,
                        choices=list(SingleSliceMode), help="cosine or closed_form")
    parser.add_argument("--seed", type=int, help="seed for every stochastic suite (default 42)")
    parser.add_argument("--cell-cap", dest="cell_cap", type=int, help="max DP cells per pair (default 16384)")
    parser.add_argument("--json", action="store_true", help="emit one JSON object instead of key=value lines")


def emit(args, payload: dict, text_lines: list[str]) -> None:
    if args.json:
        print(json.dumps(payload))
    else:
        for line in text_lines:
            print(line)


def _pool_policy(name: str) -> PoolPolicy:
    return PoolPolicy.AVERAGE_POOL if name == "avg" else PoolPolicy.LAST_TOKEN


def _doc_representation(seq, policy: PoolPolicy) -> np.ndarray:
    return pool_representation([s.concat() for s in seq.slices], policy)


def cmd_kernel_eval(args) -> int:
    kc = args.cfg.kernel_config()
    manifest = load_manifest(args.manifest)
    x = manifest.require(args.doc_a)
    y = manifest.require(args.doc_b)
    raw = gak_forward_raw(x, y, kc)
    normalized = gak_forward(x, y, dataclasses.replace(kc, normalize_gak=True))
    mean = mean_pairwise_similarity(x, y, kc)
    payload = {
        "command": "kernel-eval",
        "doc_a": args.doc_a,
        "doc_b": args.doc_b,
        "gak_raw": raw,
        "gak_normalized": normalized,
        "mean_pairwise": mean,
    }
    lines = [
        f"gak_raw={fmt(raw)}",
        f"gak_normalized={fmt(normalized)}",
        f"mean_pairwise={fmt(mean)}",
    ]
    if args.show_path:
        path = best_alignment_path(x, y, kc)
        payload["path"] = [list(p) for p in path.pairs]
        lines.append("path=" + ",".join(f"{i}:{j}" for i, j in path.pairs))
    emit(args, payload, lines)
    return 0


def cmd_selftest(args) -> int:
    if args.list:
        names = list(selftest.SUITES)
        emit(args, {"command": "selftest", "suites": [{"name": n} for n in names], "passed": True},
             names)
        return 0
    results = selftest.run_all(args.cfg.seed, fault=args.inject_fault)
    all_pass = all(r.passed for r in results)
    payload = {
        "command": "selftest",
        "seed": args.cfg.seed,
        "suites": [{"name": r.name, "passed": r.passed, "worst": r.worst} for r in results],
        "passed": all_pass,
    }
    lines = [
        f"suite={r.name} status={'pass' if r.passed else 'fail'} worst={r.worst:.6e}"
        for r in results
    ]
    lines.append(f"overall={'pass' if all_pass else 'fail'}")
    emit(args, payload, lines)
    return 0 if all_pass else 1


def cmd_index(args) -> int:
    manifest = load_manifest(args.manifest)
    policy = _pool_policy(args.pool)
    entries = [
        (doc_id, _doc_representation(seq, policy), manifest.metas.get(doc_id, ""))
        for doc_id, seq in manifest.docs.items()
    ]
    index = build_index(entries, args.cfg.kernel_config())
    save_index(index, args.out)
    payload = {
        "command": "index",
        "entries": len(index),
        "dim": index.dim,
        "out": str(args.out),
        "fingerprint": index.config_fingerprint,
    }
    emit(args, payload, [
        f"entries={len(index)}",
        f"dim={index.dim}",
        f"out={args.out}",
        f"fingerprint={index.config_fingerprint}",
    ])
    return 0


def cmd_query(args) -> int:
    kc = args.cfg.kernel_config()
    manifest = load_manifest(args.manifest)
    query_seq = manifest.require(args.doc)
    if args.score == "gak":
        scored = [
            (doc_id, gak_forward(query_seq, seq, kc))
            for doc_id, seq in manifest.docs.items()
        ]
        scored.sort(key=lambda pair: (-pair[1], pair[0]))
        results = scored[: args.k]
    else:
        if not args.index:
            raise UserInputError("cosine scoring needs --index")
        index = load_index(args.index, kc)
        rep = _doc_representation(query_seq, _pool_policy(args.pool))
        results = query_topk(index, rep, args.k)
    payload = {
        "command": "query",
        "doc": args.doc,
        "k": args.k,
        "results": [
            {"rank": i + 1, "doc_id": doc_id, "score": score}
            for i, (doc_id, score) in enumerate(results)
        ],
    }
    emit(args, payload, [
        f"rank={i + 1} doc={doc_id} score={fmt(score)}"
        for i, (doc_id, score) in enumerate(results)
    ])
    return 0


def _load_cases(path, manifest, policy: PoolPolicy) -> list[EvalCase]:
    cases = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            where = f"{path}:{lineno}"
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise FormatError(f"{where}: invalid JSON ({exc.msg})")
            if "gold_doc_ids" not in obj:
                raise FormatError(f"{where}: case needs 'gold_doc_ids'")
            if "query_doc_id" in obj:
                if manifest is None:
                    raise UserInputError(f"{where}: query_doc_id cases need --manifest")
                seq = manifest.require(str(obj["query_doc_id"]))
                query = pool_representation([s.concat() for s in seq.slices], policy)
            elif "query_whole" in obj:
                query = decode_f32(obj["query_whole"], where)
            else:
                raise FormatError(f"{where}: case needs 'query_doc_id' or 'query_whole'")
            cases.append(EvalCase(query, frozenset(str(g) for g in obj["gold_doc_ids"])))
    if not cases:
        raise UserInputError(f"{path}: no cases")
    return cases


def cmd_eval_recall(args) -> int:
    index = load_index(args.index, args.cfg.kernel_config())
    manifest = load_manifest(args.manifest) if args.manifest else None
    policy = _pool_policy(args.pool)
    try:
        ks = [int(k) for k in args.ks.split(",") if k]
    except ValueError:
        raise UserInputError(f"bad --ks list {args.ks!r}")
    report = recall_at_k(_load_cases(args.cases, manifest, policy), index, ks, policy)
    payload = {
        "command": "eval-recall",
        "recalls": {str(k): v for k, v in sorted(report.recalls.items())},
        "ranks": list(report.ranks),
    }
    lines = [f"recall@{k}={fmt(v)}" for k, v in sorted(report.recalls.items())]
    lines.extend(f"case={i} rank={r}" for i, r in enumerate(report.ranks))
    emit(args, payload, lines)
    return 0


def cmd_eval_winoground(args) -> int:
    examples = []
    with open(args.scores, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise FormatError(f"{args.scores}:{lineno}: invalid JSON ({exc.msg})")
            examples.append(obj["s"] if isinstance(obj, dict) else obj)
    text, image, group = winoground_scores(examples)
    payload = {
        "command": "eval-winoground",
        "examples": len(examples),
        "text": text,
        "image": image,
        "group": group,
    }
    emit(args, payload, [
        f"examples={len(examples)}",
        f"text={fmt(text)}",
        f"image={fmt(image)}",
        f"group={fmt(group)}",
    ])
    return 0


def cmd_train_projector(args) -> int:
    manifest = load_manifest(args.manifest)
    views = []
    hidden = []
    with open(args.batch, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            where = f"{args.batch}:{lineno}"
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise FormatError(f"{where}: invalid JSON ({exc.msg})")
            for key in ("doc_id", "cut", "hidden"):
                if key not in obj:
                    raise FormatError(f"{where}: batch line needs '{key}'")
            seq = manifest.require(str(obj["doc_id"]))
            views.append(make_prefix_views(seq, [int(obj["cut"])])[0])
            hidden.append(decode_f32(obj["hidden"], where))
    if not views:
        raise UserInputError(f"{args.batch}: no batch lines")
    dims = {len(h) for h in hidden}
    if len(dims) > 1:
        raise FormatError(f"hidden dims differ across batch lines: {sorted(dims)}")
    tcfg = TrainerConfig(
        learning_rate=args.lr,
        steps=args.steps,
        seed=args.cfg.seed,
        projector_dims=(dims.pop(), args.out_dim),
    )
    result = train_projector(np.stack(hidden), views, args.cfg.kernel_config(), tcfg)
    np.save(args.out_projector, result.projector)
    if args.trace:
        write_loss_trace(args.trace, result.trace)
    payload = {
        "command": "train-projector",
        "steps": tcfg.steps,
        "initial_loss": result.initial_loss,
        "final_loss": result.final_loss,
        "out_projector": str(args.out_projector),
        "trace_file": str(args.trace) if args.trace else None,
    }
    emit(args, payload, [
        f"steps={tcfg.steps}",
        f"initial_loss={fmt(result.initial_loss)}",
        f"final_loss={fmt(result.final_loss)}",
        f"out_projector={args.out_projector}",
    ] + ([f"trace={args.trace}"] if args.trace else []))
    return 0


def cmd_bind(args) -> int:
    for line in sys.stdin:
        line = line.strip()
        if not line:
            continue
        try:
            req = json.loads(line)
        except json.JSONDecodeError as exc:
            response = {"ok": False, "error": {"code": "bad-request", "message": f"invalid JSON: {exc.msg}"}}
        else:
            response = wire.handle_request(req)
        print(json.dumps(response), flush=True)
    return 0


def cmd_backends(args) -> int:
    payload = {"command": "backends", "active": backend.BACKEND, "available": backend.available_backends()}
    emit(args, payload, [f"active={backend.BACKEND}",
                         f"available={','.join(backend.available_backends())}"])
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="triplegak",
        description="Alignment-kernel similarity, structure-induced loss training, and cosine retrieval "
                    "over interleaved image-text embedding sequences.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("kernel-eval", help="similarity of two manifest docs")
    add_common(p)
    p.add_argument("--manifest", required=True)
    p.add_argument("--doc-a", required=True)
    p.add_argument("--doc-b", required=True)
    p.add_argument("--show-path", action="store_true", help="also print the max-product alignment (display only)")
    p.set_defaults(fn=cmd_kernel_eval)

    p = sub.add_parser("selftest", help="run the oracle suites")
    add_common(p)
    p.add_argument("--list", action="store_true", help="print suite names without running")
    p.add_argument("--inject-fault", choices=["dp-boundary"], help="test hook: corrupt one DP boundary cell")
    p.set_defaults(fn=cmd_selftest)

    p = sub.add_parser("index", help="build and save a retrieval index from a manifest")
    add_common(p)
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--pool", choices=["avg", "last"], default="avg")
    p.set_defaults(fn=cmd_index)

    p = sub.add_parser("query", help="top-k lookup for one manifest doc")
    add_common(p)
    p.add_argument("--index")
    p.add_argument("--manifest", required=True)
    p.add_argument("--doc", required=True)
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--pool", choices=["avg", "last"], default="avg")
    p.add_argument("--score", choices=["cosine", "gak"], default="cosine",
                   help="gak scores sequences pairwise from the manifest (slow path)")
    p.set_defaults(fn=cmd_query)

    p = sub.add_parser("eval-recall", help="recall@k over a case file")
    add_common(p)
    p.add_argument("--index", required=True)
    p.add_argument("--cases", required=True)
    p.add_argument("--ks", default="1,5,10")
    p.add_argument("--manifest")
    p.add_argument("--pool", choices=["avg", "last"], default="avg")
    p.set_defaults(fn=cmd_eval_recall)

    p = sub.add_parser("eval-winoground", help="text/image/group accuracy over 2x2 score matrices")
    add_common(p)
    p.add_argument("--scores", required=True)
    p.set_defaults(fn=cmd_eval_winoground)

    p = sub.add_parser("train-projector", help="fit the retrieval projector on a batch file")
    add_common(p)
    p.add_argument("--manifest", required=True)
    p.add_argument("--batch", required=True)
    p.add_argument("--out-dim", type=int, required=True)
    p.add_argument("--steps", type=int, default=200)
    p.add_argument("--lr", type=float, default=0.5)
    p.add_argument("--out-projector", required=True)
    p.add_argument("--trace")
    p.set_defaults(fn=cmd_train_projector)

    p = sub.add_parser("bind", help="serve JSONL kernel/loss requests on stdin (machine endpoint)")
    add_common(p)
    p.set_defaults(fn=cmd_bind)

    p = sub.add_parser("backends", help="show the active DP backend")
    add_common(p)
    p.set_defaults(fn=cmd_backends)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.cfg = effective_config(args)
        print(args.cfg.echo(), file=sys.stderr)
        return args.fn(args)
    except FormatError as exc:
        print(f"error[{exc.code}]: {exc}", file=sys.stderr)
        return 3
    except UserInputError as exc:
        print(f"error[{exc.code}]: {exc}", file=sys.stderr)
        return 2
    except TripleGakError as exc:
        print(f"error[{exc.code}]: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
