"""Structured extraction from model-generated formulation text.

``parse_response`` is total: whatever a fine-tuned model emits — including
the nonsensical alphanumeric output of a catastrophically forgotten model —
it returns a :class:`ParsedResponse`, downgrading every anomaly to a
diagnostic instead of raising.

Pipeline: detect printability and aspect on the raw text, strip the fixed
template phrases, split the ingredient section on commas, then split each
segment on its *last* colon into name / value (model outputs routinely glue
prose containing colons in front of the ingredient list, so the last colon
is the reliable one).
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum

from .formulations import FilamentAspect, Printability, parse_aspect
from .textnorm import normalize_text, strip_template_phrases

__all__ = [
    "Unit",
    "Diagnostic",
    "ParsedIngredient",
    "ParsedResponse",
    "normalize_text",
    "strip_template_phrases",
    "parse_response",
]

# Diagnostic codes
DUPLICATE_INGREDIENT = "DUPLICATE_INGREDIENT"
NO_PROPORTION = "NO_PROPORTION"
UNIT_MISMATCH = "UNIT_MISMATCH"
NON_ASCII_TAIL = "NON_ASCII_TAIL"
EMPTY_PARSE = "EMPTY_PARSE"
UNRECOGNIZED_ASPECT = "UNRECOGNIZED_ASPECT"


class Unit(Enum):
    WW_PCT = "w/w%"
    OTHER = "other"
    NONE = "none"


@dataclass(frozen=True)
class Diagnostic:
    code: str
    span: tuple[int, int] | None = None
    detail: str = ""


@dataclass(frozen=True)
class ParsedIngredient:
    name: str
    normalized_name: str
    proportion: float | None
    unit: Unit


@dataclass(frozen=True)
class ParsedResponse:
    excipients: tuple[ParsedIngredient, ...]
    printable: Printability
    aspect: FilamentAspect
    diagnostics: tuple[Diagnostic, ...] = ()

    def names(self) -> list[str]:
        """Deduplicated normalized ingredient names, first occurrence wins."""
        seen: dict[str, None] = {}
        for ing in self.excipients:
            seen.setdefault(ing.normalized_name)
        return list(seen)


_NOT_PRINTABLE = re.compile(r"is\s+not\s+printable", re.IGNORECASE)
_PRINTABLE = re.compile(r"is\s+printable", re.IGNORECASE)
_ASPECT = re.compile(r"has\s+an?\s+(\w+)\s+filament\s+aspect", re.IGNORECASE)
# A proportion is the leading decimal of the value side of a segment.
_LEADING_NUMBER = re.compile(r"^\s*[-+]?(\d+(?:\.\d+)?|\.\d+)")
_WW_UNIT = re.compile(r"w\s*/\s*w\s*%", re.IGNORECASE)
_STARTS_WITH_LETTER = re.compile(r"^[a-z]")
_NON_ASCII = re.compile(r"[^\x00-\x7f]")


def _detect_printability(s: str) -> Printability:
    if _NOT_PRINTABLE.search(s):
        return Printability.NO
    if _PRINTABLE.search(s):
        return Printability.YES
    return Printability.UNKNOWN


def _detect_aspect(s: str) -> tuple[FilamentAspect, Diagnostic | None]:
    m = _ASPECT.search(s)
    if not m:
        return FilamentAspect.UNKNOWN, None
    aspect, recognized = parse_aspect(m.group(1))
    if not recognized:
        return aspect, Diagnostic(UNRECOGNIZED_ASPECT, m.span(1), m.group(1))
    return aspect, None


def _parse_segment(segment: str, offset: int) -> tuple[ParsedIngredient | None, list[Diagnostic]]:
    diagnostics: list[Diagnostic] = []
    span = (offset, offset + len(segment))
    name_part, colon, value_part = segment.rpartition(":")
    if not colon:
        # No proportion at all. Keep it as a name-only entry when it looks
        # like a name (normalized text leads with a letter); digit/symbol
        # noise such as "0##ability05." is dropped instead of becoming a
        # phantom ingredient.
        name = segment.strip()
        norm = normalize_text(name)
        if not norm or not _STARTS_WITH_LETTER.match(norm):
            return None, diagnostics
        diagnostics.append(Diagnostic(NO_PROPORTION, span, name))
        return ParsedIngredient(name, norm, None, Unit.NONE), diagnostics

    name = name_part.strip()
    norm = normalize_text(name)
    if not norm:
        return None, diagnostics

    m = _LEADING_NUMBER.match(value_part)
    if not m:
        diagnostics.append(Diagnostic(NO_PROPORTION, span, name))
        return ParsedIngredient(name, norm, None, Unit.NONE), diagnostics

    proportion = float(m.group(1))
    rest = value_part[m.end():]
    if _WW_UNIT.search(rest):
        unit = Unit.WW_PCT
    elif normalize_text(rest):
        unit = Unit.OTHER
        diagnostics.append(Diagnostic(UNIT_MISMATCH, span, rest.strip()))
    else:
        unit = Unit.NONE
    return ParsedIngredient(name, norm, proportion, unit), diagnostics


def parse_response(s: str) -> ParsedResponse:
    """Extract structure from arbitrary generated text. Never raises."""
    diagnostics: list[Diagnostic] = []

    printable = _detect_printability(s)
    aspect, aspect_diag = _detect_aspect(s)
    if aspect_diag:
        diagnostics.append(aspect_diag)

    tail = _NON_ASCII.search(s)
    if tail:
        diagnostics.append(Diagnostic(NON_ASCII_TAIL, (tail.start(), len(s)), s[tail.start():tail.start() + 40]))

    body = strip_template_phrases(s)

    excipients: list[ParsedIngredient] = []
    offset = 0
    for segment in body.split(","):
        ingredient, segment_diags = _parse_segment(segment, offset)
        offset += len(segment) + 1
        diagnostics.extend(segment_diags)
        if ingredient is not None:
            excipients.append(ingredient)

    seen: set[str] = set()
    for ing in excipients:
        if ing.normalized_name in seen:
            diagnostics.append(Diagnostic(DUPLICATE_INGREDIENT, None, ing.normalized_name))
        seen.add(ing.normalized_name)

    if not excipients:
        diagnostics.append(Diagnostic(EMPTY_PARSE, (0, len(s)), ""))

    return ParsedResponse(
        excipients=tuple(excipients),
        printable=printable,
        aspect=aspect,
        diagnostics=tuple(diagnostics),
    )
