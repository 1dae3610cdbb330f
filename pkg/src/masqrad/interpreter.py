"""Query interpretation: structured clue prediction plus creative clue extraction.

The structured path applies a multilabel classification head (sigmoid over a
linear map) to an externally supplied query embedding.  The creative path
pattern-matches clue lines out of free-form backend text.  Both merge into a
single ClueSet handed to the actor.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol

import numpy as np


class DimensionMismatch(ValueError):
    pass


CLUE_LINE = re.compile(r"^\s*[-*]?\s*clue\s*:\s*([A-Za-z0-9_ ]+)\s*$", re.IGNORECASE)


@dataclass(frozen=True)
class ClassifierHead:
    """Linear + sigmoid head mapping an embedding to per-label probabilities."""

    weight: np.ndarray  # (L, d)
    bias: np.ndarray  # (L,)
    labels: tuple[str, ...]
    threshold: float = 0.5

    def __post_init__(self):
        object.__setattr__(self, "weight", np.asarray(self.weight, dtype=float))
        object.__setattr__(self, "bias", np.asarray(self.bias, dtype=float))
        L = len(self.labels)
        if L < 1:
            raise ValueError("head needs at least one label")
        if len(set(self.labels)) != L:
            raise ValueError("labels must be unique")
        if self.weight.shape[0] != L or self.bias.shape != (L,):
            raise ValueError(
                f"inconsistent head shapes: weight {self.weight.shape}, "
                f"bias {self.bias.shape}, {L} labels"
            )
        if not 0.0 < self.threshold < 1.0:
            raise ValueError("threshold must lie in (0, 1)")

    @property
    def dim(self) -> int:
        return self.weight.shape[1]

    @classmethod
    def from_file(cls, path: str | Path) -> "ClassifierHead":
        raw = json.loads(Path(path).read_text())
        labels = tuple(raw["labels"])
        weight = np.asarray(raw["weight"], dtype=float).reshape(len(labels), -1)
        return cls(
            weight=weight,
            bias=np.asarray(raw["bias"], dtype=float),
            labels=labels,
            threshold=float(raw.get("threshold", 0.5)),
        )


@dataclass(frozen=True)
class Clue:
    label: str
    source: str  # "structured" | "creative"
    probability: float | None = None

    def __post_init__(self):
        if self.source == "structured" and self.probability is None:
            raise ValueError("structured clues carry a probability")
        if self.source == "creative" and self.probability is not None:
            raise ValueError("creative clues carry no probability")


@dataclass(frozen=True)
class ClueSet:
    clues: tuple[Clue, ...] = ()

    @property
    def structured(self) -> tuple[Clue, ...]:
        return tuple(c for c in self.clues if c.source == "structured")

    @property
    def creative(self) -> tuple[Clue, ...]:
        return tuple(c for c in self.clues if c.source == "creative")


class Encoder(Protocol):
    """Pluggable embedding provider; the engine never tokenizes text itself."""

    def encode(self, query: str) -> np.ndarray: ...


class HashEncoder:
    """Deterministic stand-in encoder: embeds a query by hashing its bytes.

    Carries no semantics; exists so offline runs produce stable embeddings of
    the right dimension.
    """

    def __init__(self, dim: int):
        self.dim = dim

    def encode(self, query: str) -> np.ndarray:
        seed = int.from_bytes(hashlib.sha256(query.encode()).digest()[:8], "big")
        rng = np.random.default_rng(seed)
        return rng.standard_normal(self.dim)


def predict_probs(embedding: np.ndarray, head: ClassifierHead) -> np.ndarray:
    """Per-label relevance probabilities: sigmoid(W x + b)."""
    x = np.asarray(embedding, dtype=float)
    if x.shape != (head.dim,):
        raise DimensionMismatch(
            f"embedding has shape {x.shape}, head expects ({head.dim},)"
        )
    if not np.all(np.isfinite(x)):
        raise ValueError("embedding entries must be finite")
    z = head.weight @ x + head.bias
    # Branch on sign to stay stable for large |z|.
    probs = np.empty_like(z)
    pos = z >= 0
    probs[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    exp_z = np.exp(z[~pos])
    probs[~pos] = exp_z / (1.0 + exp_z)
    return probs


def threshold_labels(
    probs: np.ndarray, head: ClassifierHead
) -> list[tuple[str, float]]:
    """Labels at or above the head's threshold, most probable first.

    Ties keep label-list order (stable sort on the negated probability).
    """
    probs = np.asarray(probs, dtype=float)
    if probs.shape != (len(head.labels),):
        raise DimensionMismatch(
            f"got {probs.shape[0] if probs.ndim else 0} probabilities "
            f"for {len(head.labels)} labels"
        )
    picked = [
        (label, float(p)) for label, p in zip(head.labels, probs) if p >= head.threshold
    ]
    picked.sort(key=lambda item: -item[1])
    return picked


def normalize_label(raw: str) -> str:
    return re.sub(r"\s+", "_", raw.strip().lower())


def extract_creative_clues(generated_text: str) -> list[str]:
    """Collect clue labels from generated text, in order, deduplicated."""
    seen: set[str] = set()
    out: list[str] = []
    for line in generated_text.splitlines():
        m = CLUE_LINE.match(line)
        if not m:
            continue
        label = normalize_label(m.group(1))
        if label and label not in seen:
            seen.add(label)
            out.append(label)
    return out


def merge_clue_sets(
    structured: list[tuple[str, float]], creative: list[str]
) -> ClueSet:
    """Union of both clue sources; structured wins on label collisions."""
    clues = [
        Clue(label=label, source="structured", probability=prob)
        for label, prob in structured
    ]
    taken = {label for label, _ in structured}
    for label in creative:
        if label not in taken:
            taken.add(label)
            clues.append(Clue(label=label, source="creative"))
    return ClueSet(tuple(clues))


def interpret(
    query: str, encoder: Encoder, head: ClassifierHead, creative_text: str
) -> ClueSet:
    """Full interpretation: structured head plus creative extraction, merged."""
    probs = predict_probs(encoder.encode(query), head)
    return merge_clue_sets(
        threshold_labels(probs, head), extract_creative_clues(creative_text)
    )
