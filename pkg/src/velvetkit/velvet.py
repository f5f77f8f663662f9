"""Co-occurrence ingredient embedding and the VELVET distance metric.

Each ingredient is embedded as its proportion profile across the training
formulations: a vector of length F whose entry j is the ingredient's w/w%
in formulation j divided by 100. Ingredients that are used together sit
close in this space. A prediction is scored as the mean Euclidean distance
between every (predicted, reference) ingredient pair; names the training
split never saw have no embedding and contribute the maximum observed
pairwise distance instead, so out-of-distribution suggestions are penalized
rather than skipped. Lower is better.

The embedding must be built from the training split only — building it
from test references would leak the answers into the metric.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import DomainError
from .formulations import Formulation
from .parsing import ParsedResponse
from .textnorm import normalize_text

EMBEDDING_FORMAT_VERSION = 1

EMPTY_SIDE = "EMPTY_SIDE"
DEGENERATE_EMBEDDING = "DEGENERATE_EMBEDDING"


@dataclass(frozen=True)
class IngredientEmbedding:
    """Ingredient vectors over training formulations plus the OOV penalty."""

    vocabulary: tuple[str, ...]
    vectors: np.ndarray  # shape (len(vocabulary), n_formulations)
    penalty: float
    diagnostics: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "_index", {name: i for i, name in enumerate(self.vocabulary)})
        self.vectors.setflags(write=False)

    @property
    def n_formulations(self) -> int:
        return int(self.vectors.shape[1])

    def __contains__(self, normalized_name: str) -> bool:
        return normalized_name in self._index

    def row(self, normalized_name: str) -> int | None:
        return self._index.get(normalized_name)

    def vector(self, normalized_name: str) -> np.ndarray | None:
        i = self._index.get(normalized_name)
        return None if i is None else self.vectors[i]

    def to_dict(self) -> dict:
        sparse = {}
        for i, name in enumerate(self.vocabulary):
            row = self.vectors[i]
            nonzero = np.nonzero(row)[0]
            sparse[name] = [[int(j), float(row[j])] for j in nonzero]
        return {
            "format_version": EMBEDDING_FORMAT_VERSION,
            "vocabulary": list(self.vocabulary),
            "n_formulations": self.n_formulations,
            "penalty": self.penalty,
            "vectors": sparse,
            "diagnostics": list(self.diagnostics),
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "IngredientEmbedding":
        version = d.get("format_version")
        if version != EMBEDDING_FORMAT_VERSION:
            raise DomainError(f"unsupported embedding format_version {version!r}")
        vocabulary = tuple(d["vocabulary"])
        n_formulations = int(d["n_formulations"])
        vectors = np.zeros((len(vocabulary), n_formulations))
        for i, name in enumerate(vocabulary):
            for j, value in d["vectors"].get(name, []):
                vectors[i, int(j)] = float(value)
        return cls(
            vocabulary=vocabulary,
            vectors=vectors,
            penalty=float(d["penalty"]),
            diagnostics=tuple(d.get("diagnostics", [])),
        )


def save_embedding(emb: IngredientEmbedding, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(emb.to_dict(), fh)


def load_embedding(path: str | Path) -> IngredientEmbedding:
    with open(path, encoding="utf-8") as fh:
        return IngredientEmbedding.from_dict(json.load(fh))


def _max_pairwise_distance(matrix: np.ndarray, chunk: int = 128) -> float:
    """Max Euclidean distance over all row pairs, streamed in row blocks.

    Never materializes the full pairwise matrix; memory is O(chunk * rows).
    """
    n = matrix.shape[0]
    if n < 2:
        return 0.0
    sq = np.einsum("ij,ij->i", matrix, matrix)
    best = 0.0
    for start in range(0, n, chunk):
        block = matrix[start:start + chunk]
        d2 = sq[start:start + chunk, None] + sq[None, :] - 2.0 * (block @ matrix.T)
        np.maximum(d2, 0.0, out=d2)
        best = max(best, float(d2.max()))
    return math.sqrt(best)


def build_embedding(train: Sequence[Formulation]) -> IngredientEmbedding:
    """Build the ingredient x formulation matrix from the training split.

    Proportions are divided by 100, so entries live in [0, 1] for valid
    data. Vocabulary keys are normalized names; two raw spellings that
    normalize identically are treated as the same ingredient (their
    proportions add up within a formulation).
    """
    if not train:
        raise DomainError("cannot build an embedding from an empty training set")

    names = sorted({normalize_text(name) for f in train for name in f.composition} - {""})
    if not names:
        raise DomainError("training formulations contain no usable ingredient names")
    index = {name: i for i, name in enumerate(names)}

    vectors = np.zeros((len(names), len(train)))
    for j, f in enumerate(train):
        for raw_name, pct in f.composition.items():
            norm = normalize_text(raw_name)
            if norm:
                vectors[index[norm], j] += pct / 100.0

    diagnostics = () if len(names) > 1 else (DEGENERATE_EMBEDDING,)
    return IngredientEmbedding(
        vocabulary=tuple(names),
        vectors=vectors,
        penalty=_max_pairwise_distance(vectors),
        diagnostics=diagnostics,
    )


@dataclass(frozen=True)
class PairScore:
    score: float
    oov_count: int
    diagnostics: tuple[str, ...] = ()


def _normalized_names(side: ParsedResponse | Iterable[str]) -> list[str]:
    if isinstance(side, ParsedResponse):
        return side.names()
    seen: dict[str, None] = {}
    for name in side:
        norm = normalize_text(name)
        if norm:
            seen.setdefault(norm)
    return list(seen)


def velvet_score(
    prediction: ParsedResponse | Iterable[str],
    reference: ParsedResponse | Iterable[str],
    emb: IngredientEmbedding,
) -> PairScore:
    """Mean pairwise distance between predicted and reference ingredients.

    Both sides are deduplicated normalized name sets. Every (p, r) pair
    where either name is out of vocabulary contributes the penalty; an
    empty side scores the penalty outright (EMPTY_SIDE diagnostic).
    """
    pred = _normalized_names(prediction)
    ref = _normalized_names(reference)
    oov = sum(1 for name in dict.fromkeys(pred + ref) if name not in emb)

    if not pred or not ref:
        return PairScore(emb.penalty, oov, (EMPTY_SIDE,))

    pred_rows = [emb.row(name) for name in pred]
    ref_rows = [emb.row(name) for name in ref]

    distances = np.full((len(pred), len(ref)), emb.penalty)
    in_pred = [i for i, r in enumerate(pred_rows) if r is not None]
    in_ref = [j for j, r in enumerate(ref_rows) if r is not None]
    if in_pred and in_ref:
        p_vecs = emb.vectors[[pred_rows[i] for i in in_pred]]
        r_vecs = emb.vectors[[ref_rows[j] for j in in_ref]]
        diff = p_vecs[:, None, :] - r_vecs[None, :, :]
        block = np.sqrt(np.einsum("prf,prf->pr", diff, diff))
        distances[np.ix_(in_pred, in_ref)] = block
    return PairScore(float(distances.mean()), oov)


def api_affinity_score(
    api_name: str,
    prediction: ParsedResponse | Iterable[str],
    emb: IngredientEmbedding,
) -> PairScore:
    """Mean distance from the API to each predicted excipient.

    Alternative scoring mode: instead of comparing against a reference
    list, measure how close the suggested excipients sit to the API in the
    co-occurrence space.
    """
    return velvet_score(prediction, [api_name], emb)


@dataclass(frozen=True)
class VelvetResult:
    per_example: tuple[PairScore, ...]
    mean: float
    std: float


def mean_std(values: Sequence[float]) -> tuple[float, float]:
    """Mean and sample (n-1) standard deviation; std is 0 for n < 2."""
    n = len(values)
    mean = math.fsum(values) / n
    if n < 2:
        return mean, 0.0
    var = math.fsum((v - mean) ** 2 for v in values) / (n - 1)
    return mean, math.sqrt(var)


def velvet_corpus(
    pairs: Sequence[tuple[ParsedResponse | Iterable[str], ParsedResponse | Iterable[str]]],
    emb: IngredientEmbedding,
) -> VelvetResult:
    """Score (prediction, reference) pairs and aggregate mean +/- std."""
    if not pairs:
        raise DomainError("VELVET needs at least one prediction/reference pair")
    scores = tuple(velvet_score(pred, ref, emb) for pred, ref in pairs)
    mean, std = mean_std([s.score for s in scores])
    return VelvetResult(per_example=scores, mean=mean, std=std)
