"""Squared-norm row/column sampling and reproducible per-trial random streams."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class DegenerateSystemError(ValueError):
    """The matrix has no nonzero row (or column) to sample."""


class RngStream:
    """Counter-based (Philox) stream keyed by ``(seed, stream_id)``.

    Streams with different ids are independent by construction: the id enters
    the seed sequence as a spawn key, so no two trials share a key.
    """

    def __init__(self, seed: int, stream_id: int = 0):
        if seed < 0 or stream_id < 0:
            raise ValueError("seed and stream_id must be nonnegative")
        self.seed = int(seed)
        self.stream_id = int(stream_id)
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=(self.stream_id,))
        self.generator = np.random.Generator(np.random.Philox(ss))

    def uniform(self) -> float:
        """One draw from [0, 1)."""
        return float(self.generator.random())

    def uniforms(self, count: int) -> np.ndarray:
        """``count`` draws from [0, 1); same values as ``count`` calls to :meth:`uniform`."""
        return self.generator.random(count)

    def normal(self, size) -> np.ndarray:
        return self.generator.standard_normal(size)

    def __repr__(self) -> str:
        return f"RngStream(seed={self.seed}, stream_id={self.stream_id})"


def derive_stream(seed: int, trial: int) -> RngStream:
    return RngStream(seed, trial)


@dataclass(frozen=True, eq=False)
class DiscreteSampler:
    """Inverse-CDF sampler over indices with probability ``weights / total``."""

    weights: np.ndarray
    cum: np.ndarray
    total: float

    @classmethod
    def from_weights(cls, weights) -> DiscreteSampler:
        weights = np.asarray(weights, dtype=np.float64).reshape(-1)
        if np.any(weights < 0) or not np.all(np.isfinite(weights)):
            raise ValueError("weights must be finite and nonnegative")
        total = float(weights.sum())
        if total <= 0.0:
            raise DegenerateSystemError("degenerate system: all weights are zero")
        cum = np.cumsum(weights) / total
        # pin the tail to exactly 1 so u < 1 always lands on the last nonzero index
        last = int(np.flatnonzero(weights)[-1])
        cum[last:] = 1.0
        return cls(weights=weights, cum=cum, total=total)

    @property
    def probabilities(self) -> np.ndarray:
        return self.weights / self.total

    @property
    def support(self) -> np.ndarray:
        """Indices with nonzero probability."""
        return np.flatnonzero(self.weights)

    def __len__(self) -> int:
        return self.weights.shape[0]

    def index_of(self, u):
        """Map uniform(s) in [0, 1) to the smallest index with ``cum > u``."""
        return np.searchsorted(self.cum, u, side="right")


def build_row_sampler(a) -> DiscreteSampler:
    a = np.asarray(a, dtype=np.float64)
    return DiscreteSampler.from_weights(np.einsum("ij,ij->i", a, a))


def build_col_sampler(a) -> DiscreteSampler:
    a = np.asarray(a, dtype=np.float64)
    return DiscreteSampler.from_weights(np.einsum("ij,ij->j", a, a))


def sample(s: DiscreteSampler, rng: RngStream) -> int:
    return int(s.index_of(rng.uniform()))
