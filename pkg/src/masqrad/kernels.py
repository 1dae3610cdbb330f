"""Desk-scale attention kernels: scaled dot-product, multi-head, grouped-query,
and rotary position encoding.

These exist as an independently verified reference suite, not as a serving
path; everything is plain numpy at small sizes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFAULT_ROPE_BASE = 10000.0


class ShapeMismatch(ValueError):
    pass


class InvalidGrouping(ValueError):
    pass


@dataclass(frozen=True)
class AttentionParams:
    """Projection weights for h query heads sharing g key/value heads.

    w_q is stacked (h, d_model, d_k); w_k and w_v are stacked (g, d_model, d_k)
    and (g, d_model, d_v); w_o maps the concatenated heads back to d_model.
    """

    w_q: np.ndarray
    w_k: np.ndarray
    w_v: np.ndarray
    w_o: np.ndarray
    h: int
    g: int

    def __post_init__(self):
        if self.h < 1 or self.g < 1 or self.g > self.h:
            raise InvalidGrouping(f"need 1 <= g <= h, got h={self.h}, g={self.g}")
        if self.h % self.g != 0:
            raise InvalidGrouping(f"h={self.h} not divisible by g={self.g}")
        for name, arr, heads in (
            ("w_q", self.w_q, self.h),
            ("w_k", self.w_k, self.g),
            ("w_v", self.w_v, self.g),
        ):
            if arr.ndim != 3 or arr.shape[0] != heads:
                raise ShapeMismatch(f"{name} must be stacked ({heads}, d_model, d)")
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} contains non-finite entries")
        if self.w_o.ndim != 2 or not np.all(np.isfinite(self.w_o)):
            raise ShapeMismatch("w_o must be a finite 2-D matrix")

    @classmethod
    def random(
        cls,
        rng: np.random.Generator,
        d_model: int,
        d_k: int,
        h: int,
        g: int,
    ) -> "AttentionParams":
        return cls(
            w_q=rng.standard_normal((h, d_model, d_k)),
            w_k=rng.standard_normal((g, d_model, d_k)),
            w_v=rng.standard_normal((g, d_model, d_k)),
            w_o=rng.standard_normal((h * d_k, d_model)),
            h=h,
            g=g,
        )


@dataclass(frozen=True)
class RopeConfig:
    dim: int
    base_frequency: float = DEFAULT_ROPE_BASE

    def __post_init__(self):
        if self.dim <= 0 or self.dim % 2 != 0:
            raise ValueError(f"dim must be an even positive integer, got {self.dim}")
        if self.base_frequency <= 0:
            raise ValueError("base_frequency must be positive")


def softmax_rows(scores: np.ndarray) -> np.ndarray:
    shifted = scores - scores.max(axis=-1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=-1, keepdims=True)


def scaled_dot_attention(Q: np.ndarray, K: np.ndarray, V: np.ndarray) -> np.ndarray:
    """softmax(Q K^T / sqrt(d_k)) V with row-wise softmax."""
    Q, K, V = (np.asarray(a, dtype=float) for a in (Q, K, V))
    if Q.ndim != 2 or K.ndim != 2 or V.ndim != 2:
        raise ShapeMismatch("Q, K, V must be 2-D matrices")
    if Q.shape[1] != K.shape[1]:
        raise ShapeMismatch(f"Q has d_k={Q.shape[1]} but K has d_k={K.shape[1]}")
    if K.shape[0] != V.shape[0]:
        raise ShapeMismatch(f"K has {K.shape[0]} rows but V has {V.shape[0]}")
    scores = (Q @ K.T) / np.sqrt(Q.shape[1])
    return softmax_rows(scores) @ V


def grouped_query_attention(
    Q: np.ndarray, K: np.ndarray, V: np.ndarray, params: AttentionParams
) -> np.ndarray:
    """Attention with query heads partitioned into g groups sharing K/V heads."""
    Q, K, V = (np.asarray(a, dtype=float) for a in (Q, K, V))
    d_model = params.w_q.shape[1]
    if Q.shape[1] != d_model or K.shape[1] != d_model or V.shape[1] != d_model:
        raise ShapeMismatch("input width must equal d_model of the projections")
    heads_per_group = params.h // params.g
    projected_k = [K @ params.w_k[j] for j in range(params.g)]
    projected_v = [V @ params.w_v[j] for j in range(params.g)]
    heads = []
    for i in range(params.h):
        group = i // heads_per_group
        heads.append(
            scaled_dot_attention(Q @ params.w_q[i], projected_k[group], projected_v[group])
        )
    return np.concatenate(heads, axis=1) @ params.w_o


def multi_head_attention(
    Q: np.ndarray, K: np.ndarray, V: np.ndarray, params: AttentionParams
) -> np.ndarray:
    """Standard multi-head attention: one K/V head per query head.

    Shares the grouped computation path with g = h, so the degenerate grouping
    is the same arithmetic, not merely numerically close.
    """
    if params.g != params.h:
        raise InvalidGrouping("multi_head_attention requires one K/V head per query head")
    return grouped_query_attention(Q, K, V, params)


def rope_frequencies(config: RopeConfig) -> np.ndarray:
    half = config.dim // 2
    return config.base_frequency ** (-2.0 * np.arange(half) / config.dim)


def apply_rope(
    x: np.ndarray, config: RopeConfig, positions: list[int] | np.ndarray
) -> np.ndarray:
    """Rotate each adjacent coordinate pair of every vector by position * freq.

    Norm-preserving by construction; position 0 is the identity.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 2 or x.shape[1] != config.dim:
        raise ShapeMismatch(f"expected (n, {config.dim}) input, got {x.shape}")
    positions = np.asarray(positions)
    if positions.shape != (x.shape[0],):
        raise ShapeMismatch("one position per vector required")
    freqs = rope_frequencies(config)  # (dim/2,)
    angles = positions[:, None] * freqs[None, :]  # (n, dim/2)
    cos, sin = np.cos(angles), np.sin(angles)
    even, odd = x[:, 0::2], x[:, 1::2]
    out = np.empty_like(x)
    out[:, 0::2] = even * cos - odd * sin
    out[:, 1::2] = even * sin + odd * cos
    return out


def selftest(seed: int = 0) -> list[tuple[str, bool, str]]:
    """Run the kernel property suite; returns (name, passed, detail) rows."""
    rng = np.random.default_rng(seed)
    results: list[tuple[str, bool, str]] = []

    worst = 0.0
    for _ in range(200):
        n, m, d_k = rng.integers(1, 7), rng.integers(1, 7), rng.integers(1, 9)
        Q, K, V = (rng.standard_normal((r, d_k)) for r in (n, m, m))
        scores = softmax_rows((Q @ K.T) / np.sqrt(d_k))
        worst = max(worst, float(np.abs(scores.sum(axis=1) - 1.0).max()))
    results.append(
        ("softmax_rows_sum_to_one", worst <= 1e-9, f"max |row sum - 1| = {worst:.2e}")
    )

    worst = 0.0
    for _ in range(200):
        h = int(rng.choice([1, 2, 4]))
        d_model, d_k = int(rng.integers(2, 7)), int(rng.integers(1, 5))
        n, m = int(rng.integers(1, 6)), int(rng.integers(1, 6))
        params = AttentionParams.random(rng, d_model, d_k, h, h)
        Q, K, V = (rng.standard_normal((r, d_model)) for r in (n, m, m))
        diff = np.abs(
            grouped_query_attention(Q, K, V, params)
            - multi_head_attention(Q, K, V, params)
        )
        worst = max(worst, float(diff.max()))
    results.append(("gqa_degenerates_to_mha", worst <= 1e-12, f"max diff = {worst:.2e}"))

    worst = 0.0
    for _ in range(200):
        dim = int(rng.choice([2, 4, 8, 16]))
        config = RopeConfig(dim)
        x = rng.standard_normal((5, dim))
        pos = rng.integers(0, 100, size=5)
        rotated = apply_rope(x, config, pos)
        norm_err = np.abs(
            np.linalg.norm(rotated, axis=1) - np.linalg.norm(x, axis=1)
        )
        worst = max(worst, float(norm_err.max()))
    results.append(("rope_preserves_norms", worst <= 1e-9, f"max norm error = {worst:.2e}"))

    worst = 0.0
    for _ in range(200):
        dim = int(rng.choice([4, 8, 16]))
        config = RopeConfig(dim)
        a, b = rng.standard_normal(dim), rng.standard_normal(dim)
        p, q, shift = (
            int(rng.integers(0, 50)),
            int(rng.integers(0, 50)),
            int(rng.integers(0, 30)),
        )
        d1 = apply_rope(np.stack([a, b]), config, [p, q])
        d2 = apply_rope(np.stack([a, b]), config, [p + shift, q + shift])
        worst = max(worst, abs(float(d1[0] @ d1[1]) - float(d2[0] @ d2[1])))
    results.append(
        ("rope_relative_position", worst <= 1e-8, f"max dot drift = {worst:.2e}")
    )

    return results
