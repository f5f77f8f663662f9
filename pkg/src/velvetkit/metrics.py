"""Corpus BLEU and per-example ROUGE-1/-2/-L over token sequences.

One shared tokenizer (lowercase alphanumeric runs) feeds every metric so
scores stay comparable across experiments. ROUGE is reported as F1; BLEU is
corpus-level only: clipped n-gram counts are pooled over all pairs before
the geometric mean, there is no per-sentence smoothing.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Sequence

from .errors import DomainError
from .textnorm import tokenize

__all__ = ["tokenize", "RougeScore", "rouge_n", "rouge_l", "lcs_length", "bleu_corpus"]

TokenSequence = Sequence[str]


@dataclass(frozen=True)
class RougeScore:
    precision: float
    recall: float
    f1: float


def _f1(precision: float, recall: float) -> float:
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def _ngrams(tokens: TokenSequence, n: int) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def rouge_n(reference: TokenSequence, prediction: TokenSequence, n: int) -> RougeScore:
    """N-gram overlap with clipped counts (min of the two multiplicities)."""
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    ref_ngrams = _ngrams(reference, n)
    pred_ngrams = _ngrams(prediction, n)
    overlap = sum(min(count, ref_ngrams[gram]) for gram, count in pred_ngrams.items())
    total_pred = sum(pred_ngrams.values())
    total_ref = sum(ref_ngrams.values())
    precision = overlap / total_pred if total_pred else 0.0
    recall = overlap / total_ref if total_ref else 0.0
    return RougeScore(precision, recall, _f1(precision, recall))


def lcs_length(a: TokenSequence, b: TokenSequence) -> int:
    """Longest common subsequence length, O(|a||b|) dynamic programming."""
    if not a or not b:
        return 0
    previous = [0] * (len(b) + 1)
    for token_a in a:
        current = [0]
        for j, token_b in enumerate(b, start=1):
            if token_a == token_b:
                current.append(previous[j - 1] + 1)
            else:
                current.append(max(previous[j], current[j - 1]))
        previous = current
    return previous[len(b)]


def rouge_l(reference: TokenSequence, prediction: TokenSequence) -> RougeScore:
    length = lcs_length(reference, prediction)
    precision = length / len(prediction) if prediction else 0.0
    recall = length / len(reference) if reference else 0.0
    return RougeScore(precision, recall, _f1(precision, recall))


def bleu_corpus(
    references: Sequence[TokenSequence],
    predictions: Sequence[TokenSequence],
    max_n: int = 4,
) -> float:
    """Corpus BLEU: pooled clipped n-gram precisions and a brevity penalty.

    ``score = BP * exp(mean over n of ln p_n)`` with ``BP = min(1,
    exp(1 - r/c))`` where r/c are the summed reference/prediction lengths.
    Any pooled ``p_n`` of zero zeroes the score.
    """
    if len(references) != len(predictions):
        raise DomainError(
            f"got {len(references)} references but {len(predictions)} predictions"
        )
    if not references:
        raise DomainError("BLEU needs a non-empty corpus")

    clipped = [0] * max_n
    totals = [0] * max_n
    ref_length = 0
    pred_length = 0
    for ref, pred in zip(references, predictions):
        ref_length += len(ref)
        pred_length += len(pred)
        for n in range(1, max_n + 1):
            ref_ngrams = _ngrams(ref, n)
            pred_ngrams = _ngrams(pred, n)
            clipped[n - 1] += sum(min(c, ref_ngrams[g]) for g, c in pred_ngrams.items())
            totals[n - 1] += sum(pred_ngrams.values())

    if pred_length == 0:
        return 0.0
    log_sum = 0.0
    for n in range(max_n):
        if totals[n] == 0 or clipped[n] == 0:
            return 0.0
        log_sum += math.log(clipped[n] / totals[n])
    brevity = min(1.0, math.exp(1.0 - ref_length / pred_length))
    return brevity * math.exp(log_sum / max_n)
