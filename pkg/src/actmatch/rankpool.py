"""Temporal encoding of video segments by rank pooling.

A segment is summarized by the parameters w of a linear function trained to
rank the segment's smoothed frames in temporal order: position t should score
close to t.  The exact encoder minimizes the convex objective

    0.5 * ||w||^2  +  (C / 2) * sum_t  max(|t - w . v_t| - epsilon, 0)^2

over positions t = 1..J, where v_t are the smoothed, unit-normalized frames.
The squared epsilon-insensitive loss makes the objective differentiable, so
plain gradient descent with a backtracking line search solves it; the 0.5
||w||^2 term makes it 1-strongly convex, which turns the gradient norm into a
certified bound on the remaining optimality gap.

The approximate encoder skips the optimization and combines positions with
the fixed antisymmetric weights 2t - J - 1.

Encodings are stored on disk as: magic ``AME1``, little-endian uint32 count
and dim, then per segment a uint32 start frame, uint32 end frame, and dim
float32 components.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, ConvergenceError, DataFormatError
from .preprocess import SmoothingConfig, smooth_sequence

ENCODING_MAGIC = b"AME1"
_ENC_HEADER = struct.Struct("<4sII")

# Pooled vectors with smaller norm than this are treated as zero: the
# segment has no usable dynamics and must never match anything.
ZERO_NORM = 1e-8

# Smoothed segments whose positions all coincide to this tolerance are
# motionless; the exact solver would fabricate a direction for them.
CONSTANT_TOL = 1e-9

_ARMIJO = 1e-4


@dataclass(frozen=True)
class SegmentationConfig:
    """Sliding-window segmentation: window length and stride, in frames."""

    window: int = 61
    stride: int = 10

    def __post_init__(self):
        if self.window < 2:
            raise ConfigError(f"window must be >= 2 frames, got {self.window}")
        if self.stride < 1:
            raise ConfigError(f"stride must be >= 1, got {self.stride}")


@dataclass(frozen=True)
class RankPoolConfig:
    """Encoder selection and solver controls.

    method "exact" runs the convex solve; "approx" uses the closed-form
    weights.  C trades data fit against the norm penalty, epsilon is the
    slack inside which ranking residuals are free, solver_tol is the relative
    optimality-gap target, and max_iters caps the iteration count.
    """

    method: str = "exact"
    C: float = 1.0
    epsilon: float = 0.1
    solver_tol: float = 1e-6
    max_iters: int = 10000

    def __post_init__(self):
        if self.method not in ("exact", "approx"):
            raise ConfigError(f"unknown rank pooling method {self.method!r}")
        if self.C <= 0:
            raise ConfigError(f"C must be > 0, got {self.C}")
        if self.epsilon < 0:
            raise ConfigError(f"epsilon must be >= 0, got {self.epsilon}")
        if self.solver_tol <= 0:
            raise ConfigError(f"solver_tol must be > 0, got {self.solver_tol}")
        if self.max_iters < 1:
            raise ConfigError(f"max_iters must be >= 1, got {self.max_iters}")


@dataclass
class SegmentEncoding:
    """Encoded segment: inclusive frame span plus the pooled vector.

    After encoding, ``w`` has unit norm, or is all-zero for segments with no
    dynamics.
    """

    start_frame: int
    end_frame: int
    w: np.ndarray


def pooling_objective(w: np.ndarray, V: np.ndarray, C: float, epsilon: float) -> float:
    """Value of the exact encoder's objective at w."""
    w = np.asarray(w, dtype=np.float64)
    V = np.asarray(V, dtype=np.float64)
    targets = np.arange(1.0, V.shape[0] + 1.0)
    residual = targets - V @ w
    excess = np.maximum(np.abs(residual) - epsilon, 0.0)
    return 0.5 * float(w @ w) + 0.5 * C * float(excess @ excess)


def pooling_gradient(w: np.ndarray, V: np.ndarray, C: float, epsilon: float) -> np.ndarray:
    """Analytic gradient of the exact encoder's objective at w."""
    w = np.asarray(w, dtype=np.float64)
    V = np.asarray(V, dtype=np.float64)
    targets = np.arange(1.0, V.shape[0] + 1.0)
    residual = targets - V @ w
    excess = np.maximum(np.abs(residual) - epsilon, 0.0)
    return w - C * (V.T @ (np.sign(residual) * excess))


def rank_pool_exact(
    V: np.ndarray,
    C: float = 1.0,
    epsilon: float = 0.1,
    solver_tol: float = 1e-6,
    max_iters: int = 10000,
) -> np.ndarray:
    """Minimize the ranking objective over w, starting from w = 0.

    Gradient descent with a backtracking (Armijo) line search; the trial step
    for each iteration starts from a secant estimate of the local curvature
    and is halved until sufficient decrease holds.  Iteration stops once
    0.5 * ||grad||^2 <= solver_tol * (1 + |objective|), which by 1-strong
    convexity certifies a relative optimality gap below solver_tol.

    Deterministic: no randomness, fixed start.  Raises ConvergenceError
    (carrying the last objective value) if the bound is not met within
    max_iters iterations.
    """
    V = np.ascontiguousarray(V, dtype=np.float64)
    if V.ndim != 2 or V.shape[0] < 1:
        raise ValueError(f"V must be a non-empty (J, dim) array, got {V.shape}")
    if C <= 0 or epsilon < 0 or solver_tol <= 0 or max_iters < 1:
        raise ConfigError("C > 0, epsilon >= 0, solver_tol > 0, max_iters >= 1 required")

    targets = np.arange(1.0, V.shape[0] + 1.0)
    Vt = np.ascontiguousarray(V.T)

    def value(w: np.ndarray) -> float:
        residual = targets - V @ w
        excess = np.abs(residual)
        excess -= epsilon
        np.maximum(excess, 0.0, out=excess)
        return 0.5 * float(w @ w) + 0.5 * C * float(excess @ excess)

    def value_and_grad(w: np.ndarray) -> tuple[float, np.ndarray]:
        residual = targets - V @ w
        excess = np.abs(residual)
        excess -= epsilon
        np.maximum(excess, 0.0, out=excess)
        f = 0.5 * float(w @ w) + 0.5 * C * float(excess @ excess)
        g = w - C * (Vt @ (np.sign(residual) * excess))
        return f, g

    w = np.zeros(V.shape[1])
    f, g = value_and_grad(w)
    step = 1.0
    prev_w = None
    prev_g = None
    for _ in range(max_iters):
        gg = float(g @ g)
        if 0.5 * gg <= solver_tol * (1.0 + abs(f)):
            return w

        if prev_w is not None:
            # Secant curvature estimate seeds the line search; backtracking
            # still guards every accepted step.
            s = w - prev_w
            y = g - prev_g
            sy = float(s @ y)
            if sy > 0.0:
                step = min(max(float(s @ s) / sy, 1e-12), 1e12)
            else:
                step *= 2.0
        else:
            step *= 2.0

        while True:
            w_try = w - step * g
            f_try = value(w_try)
            if f_try <= f - _ARMIJO * step * gg:
                break
            step *= 0.5
            if step < 1e-20:
                raise ConvergenceError(
                    f"line search stalled at objective {f:.6g} "
                    f"(gradient norm {np.sqrt(gg):.3g}); "
                    "solver_tol may be below the numerical floor",
                    objective=f,
                )
        prev_w, prev_g = w, g
        w = w_try
        f, g = value_and_grad(w)
    raise ConvergenceError(
        f"no convergence within {max_iters} iterations; last objective {f:.6g}",
        objective=f,
    )


def rank_pool_approx(V: np.ndarray) -> np.ndarray:
    """Closed-form pooling: w = sum_t (2t - J - 1) * v_t.

    The weights are antisymmetric about the segment midpoint, so reversing
    the segment negates the encoding.  Needs at least two positions; J = 2
    reduces to v_2 - v_1.
    """
    V = np.asarray(V, dtype=np.float64)
    if V.ndim != 2:
        raise ValueError(f"V must be a (J, dim) array, got {V.shape}")
    J = V.shape[0]
    if J < 2:
        raise ValueError(f"degenerate segment: need >= 2 positions, got {J}")
    coeffs = 2.0 * np.arange(1, J + 1) - (J + 1)
    return coeffs @ V


def segment_starts(n_frames: int, seg: SegmentationConfig) -> list[int]:
    """1-based start frames of sliding windows over ``n_frames`` frames.

    Windows start at 1, 1+stride, 1+2*stride, ... while they fit entirely
    inside the video.  A video shorter than one window yields the single
    whole-video segment.
    """
    if n_frames < 2:
        raise ValueError(f"need >= 2 frames to encode, got {n_frames}")
    if n_frames < seg.window:
        return [1]
    last = n_frames - seg.window + 1
    return list(range(1, last + 1, seg.stride))


def _pool_segment(frames: np.ndarray, smooth: SmoothingConfig, rp: RankPoolConfig) -> np.ndarray:
    V = smooth_sequence(frames, smooth)
    if np.abs(V - V[0]).max() <= CONSTANT_TOL:
        # Motionless segment: no temporal order to encode.
        return np.zeros(V.shape[1])
    if rp.method == "approx":
        w = rank_pool_approx(V)
    else:
        w = rank_pool_exact(V, rp.C, rp.epsilon, rp.solver_tol, rp.max_iters)
    norm = np.linalg.norm(w)
    if norm <= ZERO_NORM:
        return np.zeros(V.shape[1])
    return w / norm


def encode_segments(
    x,
    seg: SegmentationConfig | None = None,
    smooth: SmoothingConfig | None = None,
    rp: RankPoolConfig | None = None,
) -> list[SegmentEncoding]:
    """Encode every sliding-window segment of a video.

    Smoothing restarts at each segment's first frame, so a segment's encoding
    depends only on its own frames.  Each returned vector is unit-norm, or
    zero for motionless segments.  The pipeline is invariant to positive
    rescaling of the input features.
    """
    seg = seg or SegmentationConfig()
    smooth = smooth or SmoothingConfig()
    rp = rp or RankPoolConfig()
    data = np.asarray(x.data if hasattr(x, "data") and hasattr(x, "n_frames") else x,
                      dtype=np.float64)
    if data.ndim != 2:
        raise ValueError(f"expected (n, d) frames, got shape {data.shape}")
    n = data.shape[0]
    out = []
    for start in segment_starts(n, seg):
        end = min(start + seg.window - 1, n)
        frames = data[start - 1 : end]
        out.append(SegmentEncoding(start, end, _pool_segment(frames, smooth, rp)))
    return out


def write_encodings(encodings: list[SegmentEncoding], path: str | Path) -> Path:
    """Write encodings in the AME1 binary layout (components as float32)."""
    path = Path(path)
    if not encodings:
        raise ValueError("refusing to write an empty encoding list")
    dim = encodings[0].w.shape[0]
    with open(path, "wb") as fh:
        fh.write(_ENC_HEADER.pack(ENCODING_MAGIC, len(encodings), dim))
        for e in encodings:
            if e.w.shape[0] != dim:
                raise ValueError("all encodings must share one dimension")
            fh.write(struct.pack("<II", e.start_frame, e.end_frame))
            fh.write(np.asarray(e.w, dtype="<f4").tobytes())
    return path


def read_encodings(path: str | Path) -> list[SegmentEncoding]:
    path = Path(path)
    raw = path.read_bytes()
    if len(raw) < _ENC_HEADER.size:
        raise DataFormatError(
            f"{path}: truncated header at byte {len(raw)}, need {_ENC_HEADER.size}"
        )
    magic, count, dim = _ENC_HEADER.unpack_from(raw, 0)
    if magic != ENCODING_MAGIC:
        raise DataFormatError(f"{path}: bad magic {magic!r} at byte 0")
    record = 8 + 4 * dim
    expected = _ENC_HEADER.size + count * record
    if len(raw) != expected:
        raise DataFormatError(
            f"{path}: payload is {len(raw)} bytes, header at byte 4 implies {expected}"
        )
    out = []
    offset = _ENC_HEADER.size
    for i in range(count):
        start, end = struct.unpack_from("<II", raw, offset)
        if start < 1 or end < start:
            raise DataFormatError(
                f"{path}: record {i}: bad frame span [{start}, {end}] at byte {offset}"
            )
        w = np.frombuffer(raw, dtype="<f4", offset=offset + 8, count=dim).astype(
            np.float64
        )
        out.append(SegmentEncoding(start, end, w))
        offset += record
    return out
