"""Frame smoothing and normalization applied before temporal pooling.

Raw frame features are noisy; pooling operates on a smoothed, unit-normalized
version of the sequence.  Two smoothers are offered: the time-varying mean
(each position averages all frames up to it) and a first-order recursive
filter controlled by ``alpha``.  Both are applied per segment, restarting at
the segment's first frame.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError

DEFAULT_ARMA_ALPHA = 0.9


@dataclass(frozen=True)
class SmoothingConfig:
    """Smoother selection: mode "tvm" (time-varying mean) or "arma".

    ``alpha`` is the recursive filter's carry-over weight and is only
    meaningful for mode "arma"; omitted there, it defaults to 0.9.
    """

    mode: str = "tvm"
    alpha: float | None = None

    def __post_init__(self):
        if self.mode not in ("tvm", "arma"):
            raise ConfigError(f"unknown smoothing mode {self.mode!r}")
        if self.mode == "tvm":
            if self.alpha is not None:
                raise ConfigError("alpha only applies to arma smoothing")
        else:
            alpha = DEFAULT_ARMA_ALPHA if self.alpha is None else self.alpha
            if not 0.0 < alpha < 1.0:
                raise ConfigError(f"alpha must be in (0, 1), got {alpha}")
            object.__setattr__(self, "alpha", alpha)


def _as_frames(x) -> np.ndarray:
    data = x.data if hasattr(x, "data") and hasattr(x, "n_frames") else x
    arr = np.asarray(data, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] < 1:
        raise ValueError(f"expected a non-empty (n, d) frame array, got {arr.shape}")
    return arr


def time_varying_mean(x) -> np.ndarray:
    """Running mean: position t holds the average of frames 1..t."""
    frames = _as_frames(x)
    counts = np.arange(1, frames.shape[0] + 1, dtype=np.float64)
    return np.cumsum(frames, axis=0) / counts[:, None]


def arma_smooth(x, alpha: float) -> np.ndarray:
    """First-order recursive smoothing, seeded so position 1 equals frame 1.

    m_t = alpha * m_{t-1} + (1 - alpha) * x_t, with m_0 = x_1.
    """
    if not 0.0 < alpha < 1.0:
        raise ConfigError(f"alpha must be in (0, 1), got {alpha}")
    frames = _as_frames(x)
    out = np.empty_like(frames)
    out[0] = frames[0]
    for t in range(1, frames.shape[0]):
        out[t] = alpha * out[t - 1] + (1.0 - alpha) * frames[t]
    return out


def unit_normalize(means: np.ndarray) -> np.ndarray:
    """Scale each row to unit length; all-zero rows stay zero."""
    means = np.asarray(means, dtype=np.float64)
    norms = np.linalg.norm(means, axis=1, keepdims=True)
    safe = np.where(norms == 0.0, 1.0, norms)
    return means / safe


def smooth_sequence(x, cfg: SmoothingConfig) -> np.ndarray:
    """Apply the configured smoother, then unit-normalize each position."""
    if cfg.mode == "tvm":
        return unit_normalize(time_varying_mean(x))
    return unit_normalize(arma_smooth(x, cfg.alpha))
