"""Command-line front end binding every pipeline stage.

Subcommands: ``synth`` generates a planted-match dataset, ``encode`` turns a
feature file into segment encodings, ``match`` detects shared action segments
between two videos, ``eval`` scores detections against annotations, and
``sweep`` re-runs matching over a list of parameter values and tabulates the
metrics.

Every file-producing command writes atomically (temp file plus rename, so a
failure never leaves partial output) and drops a ``<out>.manifest.json``
sidecar recording the tool version, the full effective configuration, and a
SHA-256 digest of each input.  Two runs with equal manifests produce
bit-identical outputs.

Exit codes: 0 success, 1 usage error, 2 data or configuration error,
3 solver non-convergence.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import os
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from contextlib import contextmanager
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import __version__
from .baselines import ClusterConfig, cluster_match, plain_match
from .errors import ActmatchError, ConfigError, ConvergenceError, DataFormatError
from .evaluation import EvalReport, aggregate, evaluate, gt_pairs, recall_by_label
from .matcher import (
    ActionUnit,
    CandidatePair,
    MatchConfig,
    fuse_grams,
    gram_matrix,
    match_from_gram,
)
from .preprocess import DEFAULT_ARMA_ALPHA, SmoothingConfig
from .rankpool import (
    RankPoolConfig,
    SegmentationConfig,
    SegmentEncoding,
    encode_segments,
    write_encodings,
)
from .seqio import (
    SynthConfig,
    annotations_by_video,
    detect_format,
    read_annotations,
    read_features,
    synth_generate,
    write_annotations,
    write_features,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_SOLVER = 3

CACHE_ENV = "ACTMATCH_CACHE_DIR"


class _Parser(argparse.ArgumentParser):
    """argparse reports usage problems with exit code 2; we promise 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# ---------------------------------------------------------------------------
# plumbing: digests, atomic writes, manifests, encoding cache


def _sha256(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


@contextmanager
def _atomic(path: str | Path):
    """Yield a temp path in the target directory; rename over on success."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".", suffix=".tmp")
    os.close(fd)
    try:
        yield Path(tmp)
        os.replace(tmp, path)
    finally:
        if os.path.exists(tmp):
            os.unlink(tmp)


def _dump_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ": "), indent=2) + "\n"


def _write_manifest(out_path: Path, command: str, config: dict, inputs: dict) -> None:
    manifest = {
        "tool": "actmatch",
        "version": __version__,
        "command": command,
        "config": config,
        "inputs": {name: _sha256(p) for name, p in sorted(inputs.items())},
    }
    with _atomic(Path(str(out_path) + ".manifest.json")) as tmp:
        tmp.write_text(_dump_json(manifest))


def _cache_dir() -> Path:
    env = os.environ.get(CACHE_ENV)
    if env:
        return Path(env)
    return Path.home() / ".cache" / "actmatch"


def _encoding_config(seg: SegmentationConfig, smooth: SmoothingConfig,
                     rp: RankPoolConfig) -> dict:
    return {
        "window": seg.window,
        "stride": seg.stride,
        "smooth": smooth.mode,
        "alpha": smooth.alpha,
        "method": rp.method,
        "C": rp.C,
        "epsilon": rp.epsilon,
        "solver_tol": rp.solver_tol,
        "max_iters": rp.max_iters,
    }


def _cached_encodings(path: Path, seg: SegmentationConfig, smooth: SmoothingConfig,
                      rp: RankPoolConfig, use_cache: bool) -> list[SegmentEncoding]:
    """Encode a feature file, reusing the on-disk cache when allowed.

    The key covers the input digest, the full encoding configuration, and the
    package version, so a hit can only ever replay the identical computation.
    """
    seq = read_features(path, detect_format(path))
    if not use_cache:
        return encode_segments(seq, seg, smooth, rp)
    key_src = _dump_json({
        "input": _sha256(path),
        "config": _encoding_config(seg, smooth, rp),
        "version": __version__,
    })
    key = hashlib.sha256(key_src.encode()).hexdigest()
    cache_file = _cache_dir() / f"{key}.npz"
    if cache_file.exists():
        with np.load(cache_file, allow_pickle=False) as z:
            starts, ends, W = z["starts"], z["ends"], z["W"]
        return [
            SegmentEncoding(int(s), int(e), W[i])
            for i, (s, e) in enumerate(zip(starts, ends))
        ]
    encodings = encode_segments(seq, seg, smooth, rp)
    with _atomic(cache_file) as tmp:
        with open(tmp, "wb") as fh:
            np.savez(
                fh,
                starts=np.array([e.start_frame for e in encodings], dtype=np.uint32),
                ends=np.array([e.end_frame for e in encodings], dtype=np.uint32),
                W=np.vstack([e.w for e in encodings]),
            )
    return encodings


# ---------------------------------------------------------------------------
# shared argument groups


def _add_encode_options(p: argparse.ArgumentParser, pool_flag: str) -> None:
    p.add_argument("--window", type=int, default=61,
                   help="segment length in frames (default 61)")
    p.add_argument("--stride", type=int, default=10,
                   help="frames between segment starts (default 10)")
    p.add_argument("--smooth", choices=("tvm", "arma"), default="tvm",
                   help="pre-pooling smoother (default tvm)")
    p.add_argument("--alpha", type=float, default=None,
                   help=f"arma smoothing weight (default {DEFAULT_ARMA_ALPHA})")
    p.add_argument(pool_flag, dest="pool", choices=("exact", "approx"),
                   default="exact",
                   help="pooling solver: exact convex solve or the closed-form "
                        "approximation (default exact)")
    p.add_argument("--C", type=float, default=1.0,
                   help="ranking loss weight (default 1.0)")
    p.add_argument("--epsilon", type=float, default=0.1,
                   help="ranking loss insensitivity (default 0.1)")
    p.add_argument("--no-cache", action="store_true",
                   help="do not read or write the encoding cache")


def _encode_configs(args) -> tuple[SegmentationConfig, SmoothingConfig, RankPoolConfig]:
    seg = SegmentationConfig(window=args.window, stride=args.stride)
    smooth = SmoothingConfig(mode=args.smooth, alpha=args.alpha)
    rp = RankPoolConfig(method=args.pool, C=args.C, epsilon=args.epsilon)
    return seg, smooth, rp


def _add_match_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--L", type=int, default=10, dest="min_run",
                   help="minimum matched run length in segments (default 10)")
    p.add_argument("--top-k", type=int, default=100,
                   help="candidate budget per pair (default 100)")
    p.add_argument("--nms-iou", type=float, default=0.5,
                   help="suppression overlap threshold (default 0.5)")
    p.add_argument("--threshold", type=float, default=None,
                   help="similarity threshold override; by default the "
                        "matcher adapts it from the gram statistics")


# ---------------------------------------------------------------------------
# synth


def cmd_synth(args) -> int:
    cfg = SynthConfig(
        dim=args.dim,
        n_pairs=args.pairs,
        frames_per_video=args.frames,
        segments_per_video=args.segments,
        length_range=(args.length_min, args.length_max),
        noise_level=args.noise,
        seed=args.seed,
        n_classes=args.classes,
    )
    videos, annotations = synth_generate(cfg)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    ext = ".csv" if args.format == "csv" else ".amf"
    for seq in videos:
        with _atomic(out_dir / f"{seq.video_id}{ext}") as tmp:
            write_features(seq, tmp, args.format)
    with _atomic(out_dir / "annotations.jsonl") as tmp:
        write_annotations(annotations, tmp)
    config = dict(asdict(cfg), format=args.format)
    config["length_range"] = list(config["length_range"])
    _write_manifest(out_dir / "dataset", "synth", config, {})
    print(f"wrote {len(videos)} videos and {len(annotations)} annotations "
          f"to {out_dir}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# encode


def cmd_encode(args) -> int:
    seg, smooth, rp = _encode_configs(args)
    encodings = _cached_encodings(Path(args.input), seg, smooth, rp,
                                  use_cache=not args.no_cache)
    out = Path(args.out)
    with _atomic(out) as tmp:
        write_encodings(encodings, tmp)
    config = dict(_encoding_config(seg, smooth, rp), seed=None)
    _write_manifest(out, "encode", config, {"input": args.input})
    print(f"wrote {len(encodings)} segment encodings to {out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# match


def _detection_row(c: CandidatePair) -> dict:
    return {
        "video_a": c.unit_a.video_id,
        "a_start": c.unit_a.start_frame,
        "a_end": c.unit_a.end_frame,
        "video_b": c.unit_b.video_id,
        "b_start": c.unit_b.start_frame,
        "b_end": c.unit_b.end_frame,
        "score": c.score,
        "run_length": c.run_length,
    }


def _write_detections(path: Path, candidates: list[CandidatePair]) -> None:
    with _atomic(path) as tmp:
        with open(tmp, "w") as fh:
            for c in candidates:
                fh.write(json.dumps(_detection_row(c), sort_keys=True))
                fh.write("\n")


def _consistency_candidates(args, seg, smooth, rp, match_cfg) -> list[CandidatePair]:
    use_cache = not args.no_cache
    streams = [(Path(args.features_a), Path(args.features_b))]
    for fa, fb in args.fuse or []:
        streams.append((Path(fa), Path(fb)))
    grams = []
    video_a = Path(args.features_a).stem
    video_b = Path(args.features_b).stem
    for fa, fb in streams:
        enc_a = _cached_encodings(fa, seg, smooth, rp, use_cache)
        enc_b = _cached_encodings(fb, seg, smooth, rp, use_cache)
        grams.append(gram_matrix(enc_a, enc_b, video_a, video_b))
    gram = grams[0] if len(grams) == 1 else fuse_grams(grams)
    return match_from_gram(gram, match_cfg)


def cmd_match(args) -> int:
    seg, smooth, rp = _encode_configs(args)
    if args.fuse and args.method != "consistency":
        raise ConfigError("--fuse applies only to --method consistency")
    if args.method == "consistency":
        match_cfg = MatchConfig(
            min_run=args.min_run,
            top_k=args.top_k,
            nms_iou=args.nms_iou,
            threshold_override=args.threshold,
        )
        candidates = _consistency_candidates(args, seg, smooth, rp, match_cfg)
    else:
        xa = read_features(args.features_a, detect_format(args.features_a))
        xb = read_features(args.features_b, detect_format(args.features_b))
        if args.method == "cluster":
            cluster_cfg = ClusterConfig(
                n_clusters=args.clusters,
                time_weight=args.time_weight,
                min_cluster_frames=args.min_unit_frames,
                window=args.window,
                cosine_thresh=args.cosine_thresh,
                top_k=args.top_k,
                seed=args.seed,
            )
            candidates = cluster_match(xa, xb, cluster_cfg, smooth, rp)
        else:
            candidates = plain_match(xa, xb, seg, smooth, rp,
                                     cosine_thresh=args.cosine_thresh,
                                     top_k=args.top_k)
    out = Path(args.out)
    _write_detections(out, candidates)
    enc_cfg = _encoding_config(seg, smooth, rp)
    enc_cfg["pool"] = enc_cfg.pop("method")
    config = {
        "method": args.method,
        **enc_cfg,
        "min_run": args.min_run,
        "top_k": args.top_k,
        "nms_iou": args.nms_iou,
        "threshold": args.threshold,
        "cosine_thresh": args.cosine_thresh,
        "clusters": args.clusters,
        "time_weight": args.time_weight,
        "min_unit_frames": args.min_unit_frames,
        "seed": args.seed,
    }
    inputs = {"features_a": args.features_a, "features_b": args.features_b}
    for i, (fa, fb) in enumerate(args.fuse or []):
        inputs[f"fuse{i}_a"] = fa
        inputs[f"fuse{i}_b"] = fb
    _write_manifest(out, "match", config, inputs)
    print(f"wrote {len(candidates)} detections to {out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# eval


def _read_detection_rows(path: str | Path) -> list[dict]:
    required = ("video_a", "a_start", "a_end", "video_b", "b_start", "b_end",
                "score")
    rows = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                row = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataFormatError(f"{path}: line {lineno}: {exc}") from exc
            missing = [k for k in required if k not in row]
            if missing:
                raise DataFormatError(
                    f"{path}: line {lineno}: missing keys {missing}"
                )
            rows.append(row)
    return rows


def _pairs_from_ids(video_ids) -> list[tuple[str, str]]:
    """Pair X_a with X_b for every stem X present with both suffixes."""
    sides: dict[str, set[str]] = {}
    for vid in video_ids:
        if vid.endswith(("_a", "_b")):
            sides.setdefault(vid[:-2], set()).add(vid[-1])
    return [(s + "_a", s + "_b")
            for s in sorted(sides) if sides[s] == {"a", "b"}]


def _read_pairs_file(path: str | Path) -> list[tuple[str, str]]:
    pairs = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                row = json.loads(line)
                pairs.append((row["video_a"], row["video_b"]))
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise DataFormatError(f"{path}: line {lineno}: {exc}") from exc
    return pairs


def _candidates_from_rows(rows: list[dict]) -> list[CandidatePair]:
    return [
        CandidatePair(
            unit_a=ActionUnit(r["video_a"], int(r["a_start"]), int(r["a_end"])),
            unit_b=ActionUnit(r["video_b"], int(r["b_start"]), int(r["b_end"])),
            score=float(r["score"]),
            run_length=int(r.get("run_length", 1)),
        )
        for r in rows
    ]


def _evaluate_detections(rows: list[dict], by_vid: dict, pairs, iou: float,
                         per_label: bool):
    rows_by_pair: dict[tuple[str, str], list[dict]] = {}
    for r in rows:
        rows_by_pair.setdefault((r["video_a"], r["video_b"]), []).append(r)
    all_pairs = list(pairs)
    for key in sorted(rows_by_pair):
        if key not in all_pairs:
            all_pairs.append(key)
    reports = []
    label_counts: dict[str, tuple[int, int]] = {}
    for va, vb in all_pairs:
        cands = _candidates_from_rows(rows_by_pair.get((va, vb), []))
        gt = gt_pairs(by_vid.get(va, []), by_vid.get(vb, []))
        reports.append(evaluate(cands, gt, iou))
        if per_label and gt:
            for label, (got, total) in recall_by_label(cands, gt, iou).items():
                g0, t0 = label_counts.get(label, (0, 0))
                label_counts[label] = (g0 + got, t0 + total)
    return reports, label_counts


def _eval_report_dict(reports, label_counts, per_label: bool) -> dict:
    agg = aggregate(reports)
    out = {
        "pairs_total": len(reports),
        "pairs_scored": sum(1 for r in reports if not r.skipped),
        "n_candidates": agg.n_candidates,
        "n_scored": agg.n_scored,
        "n_gt_pairs": agg.n_gt_pairs,
        "n_correct": agg.n_correct,
        "precision": agg.precision,
        "recall": agg.recall,
        "f1": agg.f1,
    }
    if per_label:
        out["per_label"] = {
            label: {
                "recovered": got,
                "total": total,
                "recall": 100.0 * got / total,
            }
            for label, (got, total) in sorted(label_counts.items())
        }
    return out


def cmd_eval(args) -> int:
    rows = _read_detection_rows(args.detections)
    annotations = read_annotations(args.annotations)
    by_vid = annotations_by_video(annotations)
    if args.pairs_file:
        pairs = _read_pairs_file(args.pairs_file)
    else:
        pairs = _pairs_from_ids(by_vid)
    reports, label_counts = _evaluate_detections(rows, by_vid, pairs, args.iou,
                                                 args.per_label)
    if not reports:
        raise DataFormatError("no video pairs to evaluate")
    report = _eval_report_dict(reports, label_counts, args.per_label)
    text = _dump_json(report)
    if args.out:
        out = Path(args.out)
        with _atomic(out) as tmp:
            tmp.write_text(text)
        config = {"iou": args.iou, "per_label": args.per_label, "seed": None}
        inputs = {"detections": args.detections, "annotations": args.annotations}
        if args.pairs_file:
            inputs["pairs_file"] = args.pairs_file
        _write_manifest(out, "eval", config, inputs)
        print(f"wrote report to {out}")
    else:
        sys.stdout.write(text)
    return EXIT_OK


# ---------------------------------------------------------------------------
# sweep


SWEEP_PARAMS = ("top_k", "L", "window")


def _discover_pairs(data_dir: Path) -> list[tuple[Path, Path]]:
    """Feature-file pairs in a directory, by the X_a / X_b stem convention."""
    files = {}
    for p in sorted(data_dir.iterdir()):
        if p.suffix.lower() in (".amf", ".csv") and p.is_file():
            files[p.stem] = p
    pairs = []
    for stem in sorted(files):
        if stem.endswith("_a") and stem[:-2] + "_b" in files:
            pairs.append((files[stem], files[stem[:-2] + "_b"]))
    return pairs


def _sweep_pair_worker(task) -> EvalReport:
    (fa, fb, enc_cfg, match_cfg_dict, iou, gt_a, gt_b, use_cache) = task
    seg = SegmentationConfig(window=enc_cfg["window"], stride=enc_cfg["stride"])
    smooth = SmoothingConfig(mode=enc_cfg["smooth"], alpha=enc_cfg["alpha"])
    rp = RankPoolConfig(method=enc_cfg["method"], C=enc_cfg["C"],
                        epsilon=enc_cfg["epsilon"],
                        solver_tol=enc_cfg["solver_tol"],
                        max_iters=enc_cfg["max_iters"])
    match_cfg = MatchConfig(**match_cfg_dict)
    enc_a = _cached_encodings(Path(fa), seg, smooth, rp, use_cache)
    enc_b = _cached_encodings(Path(fb), seg, smooth, rp, use_cache)
    gram = gram_matrix(enc_a, enc_b, Path(fa).stem, Path(fb).stem)
    candidates = match_from_gram(gram, match_cfg)
    return evaluate(candidates, gt_pairs(gt_a, gt_b), iou)


def cmd_sweep(args) -> int:
    try:
        values = [int(v) for v in args.values.split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad --values list {args.values!r}: {exc}") from exc
    if not values:
        raise ConfigError("empty sweep list")
    data_dir = Path(args.data_dir)
    if not data_dir.is_dir():
        raise DataFormatError(f"{data_dir} is not a directory")
    pairs = _discover_pairs(data_dir)
    if not pairs:
        raise DataFormatError(f"no X_a / X_b feature pairs found in {data_dir}")
    annotations = read_annotations(args.annotations)
    by_vid = annotations_by_video(annotations)
    use_cache = not args.no_cache

    rows = []
    for value in values:
        enc_args = {"window": args.window, "stride": args.stride,
                    "smooth": args.smooth, "alpha": args.alpha,
                    "method": args.pool, "C": args.C, "epsilon": args.epsilon,
                    "solver_tol": RankPoolConfig().solver_tol,
                    "max_iters": RankPoolConfig().max_iters}
        match_dict = {"min_run": args.min_run, "top_k": args.top_k,
                      "nms_iou": args.nms_iou,
                      "threshold_override": args.threshold}
        if args.param == "top_k":
            match_dict["top_k"] = value
        elif args.param == "L":
            match_dict["min_run"] = value
        else:
            enc_args["window"] = value
        tasks = [
            (str(fa), str(fb), enc_args, match_dict, args.iou,
             by_vid.get(fa.stem, []), by_vid.get(fb.stem, []), use_cache)
            for fa, fb in pairs
        ]
        if args.jobs > 1:
            with ProcessPoolExecutor(max_workers=args.jobs) as pool:
                reports = list(pool.map(_sweep_pair_worker, tasks))
        else:
            reports = [_sweep_pair_worker(t) for t in tasks]
        agg = aggregate(reports)
        rows.append((args.param, value, agg.precision, agg.recall, agg.f1))

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["parameter", "value", "precision", "recall", "f1"])
    for param, value, p, r, f1 in rows:
        writer.writerow([param, value, f"{p:.6f}", f"{r:.6f}", f"{f1:.6f}"])
    out = Path(args.out)
    with _atomic(out) as tmp:
        tmp.write_text(buf.getvalue())
    config = {
        "param": args.param,
        "values": values,
        "window": args.window,
        "stride": args.stride,
        "smooth": args.smooth,
        "alpha": args.alpha,
        "method": args.pool,
        "C": args.C,
        "epsilon": args.epsilon,
        "min_run": args.min_run,
        "top_k": args.top_k,
        "nms_iou": args.nms_iou,
        "threshold": args.threshold,
        "iou": args.iou,
        "jobs": args.jobs,
        "seed": None,
    }
    inputs = {"annotations": args.annotations}
    for fa, fb in pairs:
        inputs[fa.name] = str(fa)
        inputs[fb.name] = str(fb)
    _write_manifest(out, "sweep", config, inputs)
    print(f"wrote {len(rows)} sweep rows to {out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser and dispatch


def default_config() -> dict:
    """Every tunable default in one place, as printed by --show-config."""
    seg = SegmentationConfig()
    smooth = SmoothingConfig()
    rp = RankPoolConfig()
    match = MatchConfig()
    cluster = ClusterConfig()
    synth = SynthConfig()
    return {
        "window": seg.window,
        "stride": seg.stride,
        "smooth": smooth.mode,
        "arma_alpha": DEFAULT_ARMA_ALPHA,
        "pool_method": rp.method,
        "C": rp.C,
        "epsilon": rp.epsilon,
        "solver_tol": rp.solver_tol,
        "max_iters": rp.max_iters,
        "min_run": match.min_run,
        "top_k": match.top_k,
        "nms_iou": match.nms_iou,
        "eval_iou": 0.5,
        "cluster": asdict(cluster),
        "synth": dict(asdict(synth), length_range=list(synth.length_range)),
        "cache_dir": str(_cache_dir()),
    }


def build_parser() -> _Parser:
    parser = _Parser(prog="actmatch",
                     description="Unsupervised action detection by matching "
                                 "temporally encoded video segments.")
    parser.add_argument("--version", action="version",
                        version=f"actmatch {__version__}")
    parser.add_argument("--show-config", action="store_true",
                        help="print every default parameter as JSON and exit")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("synth", help="generate a planted-match dataset")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--dim", type=int, default=16)
    p.add_argument("--pairs", type=int, default=10)
    p.add_argument("--frames", type=int, default=300)
    p.add_argument("--segments", type=int, default=3,
                   help="planted segments per video (default 3)")
    p.add_argument("--length-min", type=int, default=60)
    p.add_argument("--length-max", type=int, default=90)
    p.add_argument("--noise", type=float, default=0.05)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--classes", type=int, default=3)
    p.add_argument("--format", choices=("binary", "csv"), default="binary")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("encode", help="encode a feature file into segments")
    p.add_argument("input", help="feature file (.amf binary or .csv)")
    p.add_argument("--out", required=True, help="output encoding file")
    _add_encode_options(p, "--method")
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("match", help="detect shared segments between two videos")
    p.add_argument("features_a")
    p.add_argument("features_b")
    p.add_argument("--out", required=True, help="output detections (JSON lines)")
    p.add_argument("--method", choices=("consistency", "cluster", "plain"),
                   default="consistency")
    _add_encode_options(p, "--pool")
    _add_match_options(p)
    p.add_argument("--fuse", nargs=2, action="append", metavar=("A", "B"),
                   help="extra feature-stream pair; grams are averaged "
                        "(repeatable, consistency method only)")
    p.add_argument("--cosine-thresh", type=float, default=0.2,
                   help="similarity floor for the cluster and plain baselines")
    p.add_argument("--clusters", type=int, default=10)
    p.add_argument("--time-weight", type=float, default=0.001)
    p.add_argument("--min-unit-frames", type=int, default=60)
    p.add_argument("--seed", type=int, default=0,
                   help="cluster baseline seed (default 0)")
    p.set_defaults(func=cmd_match)

    p = sub.add_parser("eval", help="score detections against annotations")
    p.add_argument("detections")
    p.add_argument("annotations")
    p.add_argument("--iou", type=float, default=0.5)
    p.add_argument("--per-label", action="store_true",
                   help="include per-label recall in the report")
    p.add_argument("--pairs-file",
                   help="JSON-lines {video_a, video_b} pair list; by default "
                        "pairs are inferred from the X_a / X_b id convention")
    p.add_argument("--out", help="write the JSON report here instead of stdout")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep", help="tabulate metrics over a parameter sweep")
    p.add_argument("--data-dir", required=True,
                   help="directory of X_a / X_b feature files")
    p.add_argument("--annotations", required=True)
    p.add_argument("--param", choices=SWEEP_PARAMS, required=True)
    p.add_argument("--values", required=True,
                   help="comma-separated integer values to sweep")
    p.add_argument("--out", required=True, help="output CSV")
    p.add_argument("--iou", type=float, default=0.5)
    p.add_argument("--jobs", type=int, default=1,
                   help="parallel workers over video pairs (default 1); "
                        "results merge in deterministic pair order")
    _add_encode_options(p, "--pool")
    _add_match_options(p)
    p.set_defaults(func=cmd_sweep)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.show_config:
        sys.stdout.write(_dump_json(default_config()))
        return EXIT_OK
    if args.command is None:
        parser.error("a command is required")
    try:
        return args.func(args)
    except ConvergenceError as exc:
        print(f"actmatch: solver did not converge: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (ActmatchError, OSError, ValueError) as exc:
        print(f"actmatch: error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
