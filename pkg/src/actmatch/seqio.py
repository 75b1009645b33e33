"""Reading, writing, and synthesis of per-frame feature sequences.

Two on-disk feature layouts are supported:

binary
    Magic bytes ``AMF1``, then two little-endian uint32 words (frame count,
    feature dimension), then ``n_frames * dim`` little-endian float32 values
    in row-major order.  Round-trips bit-exactly.

csv
    One frame per line, comma-separated decimal values, no header.  Values
    are written with 9 significant digits, enough to round-trip float32
    exactly.

Frame indices are 1-based and inclusive everywhere in this package.  Neither
layout stores a video id; readers derive it from the file stem.

Annotations travel as JSON lines, one object per line with keys
``video_id``, ``label``, ``start_frame``, ``end_frame``.
"""

from __future__ import annotations

import json
import struct
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, DataFormatError

FEATURE_MAGIC = b"AMF1"
_HEADER = struct.Struct("<4sII")


class OverlapWarning(UserWarning):
    """Two same-label annotations of one video overlap in time."""


@dataclass(eq=False)
class FeatureSequence:
    """A video's per-frame feature matrix.

    ``data`` has shape (n_frames, dim) and is kept as float32, matching the
    precision of the binary container.
    """

    video_id: str
    data: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=np.float32)
        if arr.ndim != 2:
            raise ValueError(f"feature data must be 2-D, got shape {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"feature data must be non-empty, got shape {arr.shape}")
        if not np.isfinite(arr).all():
            raise ValueError("feature data contains non-finite values")
        self.data = arr

    @property
    def n_frames(self) -> int:
        return self.data.shape[0]

    @property
    def dim(self) -> int:
        return self.data.shape[1]

    def __eq__(self, other) -> bool:
        if not isinstance(other, FeatureSequence):
            return NotImplemented
        return self.video_id == other.video_id and np.array_equal(self.data, other.data)


@dataclass(frozen=True)
class Annotation:
    """One labelled action unit: frames start_frame..end_frame inclusive."""

    video_id: str
    label: str
    start_frame: int
    end_frame: int

    def __post_init__(self):
        if self.start_frame < 1:
            raise ValueError(f"start_frame must be >= 1, got {self.start_frame}")
        if self.start_frame > self.end_frame:
            raise ValueError(
                f"start_frame {self.start_frame} > end_frame {self.end_frame}"
            )

    @property
    def n_frames(self) -> int:
        return self.end_frame - self.start_frame + 1


def write_features(seq: FeatureSequence, path: str | Path, fmt: str = "binary") -> Path:
    """Write a feature sequence to ``path`` in the given layout."""
    path = Path(path)
    if fmt == "binary":
        with open(path, "wb") as fh:
            fh.write(_HEADER.pack(FEATURE_MAGIC, seq.n_frames, seq.dim))
            fh.write(np.ascontiguousarray(seq.data, dtype="<f4").tobytes())
    elif fmt == "csv":
        with open(path, "w") as fh:
            for row in seq.data:
                fh.write(",".join(format(float(v), ".9g") for v in row))
                fh.write("\n")
    else:
        raise ConfigError(f"unknown feature format {fmt!r}")
    return path


def read_features(path: str | Path, fmt: str = "binary") -> FeatureSequence:
    """Read a feature sequence; the video id is the file stem.

    Raises DataFormatError naming the byte offset (binary) or line number
    (csv) of the first problem found.
    """
    path = Path(path)
    if fmt == "binary":
        data = _read_binary(path)
    elif fmt == "csv":
        data = _read_csv(path)
    else:
        raise ConfigError(f"unknown feature format {fmt!r}")
    try:
        return FeatureSequence(video_id=path.stem, data=data)
    except ValueError as exc:
        raise DataFormatError(f"{path}: {exc}") from exc


def detect_format(path: str | Path) -> str:
    """Guess the feature layout from the file extension."""
    return "csv" if Path(path).suffix.lower() == ".csv" else "binary"


def _read_binary(path: Path) -> np.ndarray:
    raw = path.read_bytes()
    if len(raw) < _HEADER.size:
        raise DataFormatError(
            f"{path}: truncated header at byte {len(raw)}, need {_HEADER.size} bytes"
        )
    magic, n, d = _HEADER.unpack_from(raw, 0)
    if magic != FEATURE_MAGIC:
        raise DataFormatError(f"{path}: bad magic {magic!r} at byte 0")
    if n < 1 or d < 1:
        raise DataFormatError(f"{path}: header declares empty shape ({n}, {d})")
    expected = _HEADER.size + 4 * n * d
    if len(raw) != expected:
        raise DataFormatError(
            f"{path}: payload is {len(raw)} bytes, header at byte 4 implies {expected}"
        )
    data = np.frombuffer(raw, dtype="<f4", offset=_HEADER.size).reshape(n, d)
    bad = ~np.isfinite(data)
    if bad.any():
        i, j = np.argwhere(bad)[0]
        offset = _HEADER.size + 4 * (i * d + j)
        raise DataFormatError(
            f"{path}: non-finite value at frame {i + 1}, column {j} (byte {offset})"
        )
    return data


def _read_csv(path: Path) -> np.ndarray:
    rows: list[np.ndarray] = []
    dim = None
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                row = np.array([float(tok) for tok in line.split(",")], dtype=np.float32)
            except ValueError as exc:
                raise DataFormatError(f"{path}: line {lineno}: {exc}") from exc
            if dim is None:
                dim = row.size
            elif row.size != dim:
                raise DataFormatError(
                    f"{path}: line {lineno}: expected {dim} values, got {row.size}"
                )
            if not np.isfinite(row).all():
                raise DataFormatError(f"{path}: line {lineno}: non-finite value")
            rows.append(row)
    if not rows:
        raise DataFormatError(f"{path}: line 1: no feature rows found")
    return np.vstack(rows)


def write_annotations(annotations: list[Annotation], path: str | Path) -> Path:
    path = Path(path)
    with open(path, "w") as fh:
        for a in annotations:
            fh.write(
                json.dumps(
                    {
                        "video_id": a.video_id,
                        "label": a.label,
                        "start_frame": a.start_frame,
                        "end_frame": a.end_frame,
                    }
                )
            )
            fh.write("\n")
    return path


def read_annotations(path: str | Path) -> list[Annotation]:
    """Parse JSON-lines annotations, sorted by (video_id, start_frame).

    Same-label overlap within one video draws an OverlapWarning but is kept;
    an inverted interval is an error.
    """
    path = Path(path)
    out: list[Annotation] = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataFormatError(f"{path}: line {lineno}: {exc}") from exc
            try:
                out.append(
                    Annotation(
                        video_id=str(obj["video_id"]),
                        label=str(obj["label"]),
                        start_frame=int(obj["start_frame"]),
                        end_frame=int(obj["end_frame"]),
                    )
                )
            except (KeyError, TypeError, ValueError) as exc:
                raise DataFormatError(f"{path}: line {lineno}: {exc}") from exc
    out.sort(key=lambda a: (a.video_id, a.start_frame, a.end_frame, a.label))
    _warn_overlaps(out)
    return out


def _warn_overlaps(annotations: list[Annotation]) -> None:
    by_key: dict[tuple[str, str], list[Annotation]] = {}
    for a in annotations:
        by_key.setdefault((a.video_id, a.label), []).append(a)
    for (vid, label), group in by_key.items():
        group = sorted(group, key=lambda a: a.start_frame)
        for prev, cur in zip(group, group[1:]):
            if cur.start_frame <= prev.end_frame:
                warnings.warn(
                    f"video {vid!r}: overlapping {label!r} annotations "
                    f"[{prev.start_frame},{prev.end_frame}] and "
                    f"[{cur.start_frame},{cur.end_frame}]",
                    OverlapWarning,
                    stacklevel=3,
                )


@dataclass(frozen=True)
class SynthConfig:
    """Geometry and noise of a planted-match synthetic dataset.

    Each of ``n_pairs`` video pairs gets ``segments_per_video`` planted
    segments per video.  Planted segment k carries class ``k mod n_classes``;
    the same classes recur in both videos of a pair, so every pair contains
    cross-video segment pairs that genuinely share dynamics.
    """

    dim: int = 16
    n_pairs: int = 10
    frames_per_video: int = 300
    segments_per_video: int = 3
    length_range: tuple[int, int] = (60, 90)
    noise_level: float = 0.05
    seed: int = 0
    n_classes: int = 3

    def __post_init__(self):
        if self.dim < 1 or self.n_pairs < 1 or self.frames_per_video < 1:
            raise ConfigError("dim, n_pairs, frames_per_video must all be >= 1")
        if self.segments_per_video < 0 or self.n_classes < 1:
            raise ConfigError("segments_per_video must be >= 0 and n_classes >= 1")
        lo, hi = self.length_range
        if not (1 <= lo <= hi):
            raise ConfigError(f"bad length_range {self.length_range}")
        if self.noise_level < 0:
            raise ConfigError("noise_level must be >= 0")
        if self.segments_per_video > 0:
            slot = self.frames_per_video // self.segments_per_video
            if hi > slot:
                raise ConfigError(
                    f"planted segments cannot fit without overlap: max length {hi} "
                    f"> slot of {slot} frames "
                    f"({self.frames_per_video} frames / {self.segments_per_video} segments)"
                )


def _unit(rng: np.random.Generator, dim: int) -> np.ndarray:
    v = rng.standard_normal(dim)
    n = np.linalg.norm(v)
    while n == 0.0:  # pragma: no cover - probability zero
        v = rng.standard_normal(dim)
        n = np.linalg.norm(v)
    return v / n


def synth_generate(cfg: SynthConfig) -> tuple[list[FeatureSequence], list[Annotation]]:
    """Generate a planted-match dataset, deterministic given cfg.seed.

    Background frames are pure Gaussian noise scaled by noise_level.  A
    planted segment of class c evolves as ``base_c + t * direction_c`` plus
    the same noise, with t counted from 1 inside the segment; base_c and
    direction_c are fixed unit vectors per class, so two segments of one
    class share their temporal evolution.  Videos of a pair are named
    ``pair###_a`` / ``pair###_b``.  Annotations exactly cover the planted
    frames.

    Uses numpy's PCG64 generator; equal configs yield bit-identical output.
    """
    rng = np.random.default_rng(cfg.seed)
    bases = [_unit(rng, cfg.dim) for _ in range(cfg.n_classes)]
    directions = [_unit(rng, cfg.dim) for _ in range(cfg.n_classes)]

    k = cfg.segments_per_video
    slot = cfg.frames_per_video // k if k else 0
    lo, hi = cfg.length_range

    videos: list[FeatureSequence] = []
    annotations: list[Annotation] = []
    for p in range(cfg.n_pairs):
        for side in ("a", "b"):
            vid = f"pair{p:03d}_{side}"
            data = cfg.noise_level * rng.standard_normal(
                (cfg.frames_per_video, cfg.dim)
            )
            for s in range(k):
                cls = s % cfg.n_classes
                length = int(rng.integers(lo, hi + 1))
                slot_first = s * slot + 1
                start = slot_first + int(rng.integers(0, slot - length + 1))
                t = np.arange(1, length + 1, dtype=float)[:, None]
                data[start - 1 : start - 1 + length] += (
                    bases[cls] + t * directions[cls]
                )
                annotations.append(
                    Annotation(vid, f"act{cls}", start, start + length - 1)
                )
            videos.append(FeatureSequence(vid, data))
    annotations.sort(key=lambda a: (a.video_id, a.start_frame, a.end_frame, a.label))
    return videos, annotations


def annotations_by_video(annotations: list[Annotation]) -> dict[str, list[Annotation]]:
    """Group annotations per video id, preserving order."""
    out: dict[str, list[Annotation]] = {}
    for a in annotations:
        out.setdefault(a.video_id, []).append(a)
    return out
