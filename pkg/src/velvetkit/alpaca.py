"""Instruction/response corpus construction: rendering, splitting, JSONL IO.

The response text follows a fixed grammar so it can be parsed back without
loss:

    For this formulation, use these excipients: <name>: <pct> w/w%, ... .
    This is <printable|not printable|of unknown printability> and has a
    <Aspect> filament aspect.<eos>

Excipients render in lexicographic name order, which makes rendering a
deterministic function of the formulation.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence, TypeVar

from .errors import DomainError, JsonlError
from .formulations import DatasetSchema, Formulation, Printability

DEFAULT_SYSTEM_INSTRUCTION = (
    "Given a drug and its quantity, suggest suitable excipients with their "
    "quantities, and indicate printability and filament aspect."
)
DEFAULT_INSTRUCTION_PATTERN = "Recommend excipients for {dose} w/w% {api}"

RESPONSE_LEAD = "For this formulation, use these excipients: "

_PRINTABILITY_PHRASE = {
    Printability.YES: "printable",
    Printability.NO: "not printable",
    Printability.UNKNOWN: "of unknown printability",
}


@dataclass(frozen=True)
class PromptTemplates:
    """Configurable text surrounding the fixed response grammar.

    ``table4_input``: when true, the Alpaca ``input`` field carries
    "<api>: <dose> w/w%" and ``instruction`` is the system instruction;
    otherwise ``input`` stays empty and the rendered request lives in
    ``instruction``.
    """

    system_instruction: str = DEFAULT_SYSTEM_INSTRUCTION
    instruction_pattern: str = DEFAULT_INSTRUCTION_PATTERN
    eos_token: str = ""
    table4_input: bool = False

    def __post_init__(self):
        for slot in ("{dose}", "{api}"):
            if self.instruction_pattern.count(slot) != 1:
                raise DomainError(
                    f"instruction pattern must contain {slot} exactly once: {self.instruction_pattern!r}"
                )


@dataclass(frozen=True)
class InstructionPair:
    instruction: str
    input: str
    response: str

    def to_dict(self) -> dict:
        return {"instruction": self.instruction, "input": self.input, "response": self.response}


@dataclass(frozen=True)
class SplitSpec:
    test_fraction: float = 0.2
    seed: int = 0


def format_dose(value: float) -> str:
    """Shortest exact decimal; integral values drop the fraction part."""
    if math.isfinite(value) and value == int(value):
        return str(int(value))
    return repr(float(value))


def _dose_api_phrase(apis: Sequence[tuple[str, float]]) -> tuple[str, str]:
    """First dose plus the api slot text, which appends any further APIs."""
    head_api, head_dose = apis[0]
    api_slot = head_api + "".join(
        f" and {format_dose(dose)} w/w% {api}" for api, dose in apis[1:]
    )
    return format_dose(head_dose), api_slot


def render_response(f: Formulation, api_names: Sequence[str], eos_token: str = "") -> str:
    excipients = sorted(
        (name, pct) for name, pct in f.composition.items() if name not in set(api_names)
    )
    if not excipients:
        raise DomainError(f"formulation {f.id!r} has no excipients to render")
    listed = ", ".join(f"{name}: {format_dose(pct)} w/w%" for name, pct in excipients)
    return (
        f"{RESPONSE_LEAD}{listed}. "
        f"This is {_PRINTABILITY_PHRASE[f.printable]} and has a "
        f"{f.aspect.value} filament aspect.{eos_token}"
    )


def formulation_to_pair(
    f: Formulation,
    api_name: str | Sequence[str],
    templates: PromptTemplates = PromptTemplates(),
) -> InstructionPair:
    """Render one formulation into an instruction/response pair.

    ``api_name`` may be a single name or, for multi-API formulations, all
    API names; every one must be present in the composition and at least
    one excipient must remain.
    """
    api_names = [api_name] if isinstance(api_name, str) else list(api_name)
    if not api_names:
        raise DomainError("at least one API name is required")
    for name in api_names:
        if name not in f.composition:
            raise DomainError(f"API {name!r} is not in the composition of formulation {f.id!r}")

    apis = [(name, f.composition[name]) for name in api_names]
    dose_text, api_slot = _dose_api_phrase(apis)
    request = templates.instruction_pattern.format(dose=dose_text, api=api_slot)
    response = render_response(f, api_names, templates.eos_token)

    if templates.table4_input:
        input_text = ", ".join(f"{name}: {format_dose(dose)} w/w%" for name, dose in apis)
        return InstructionPair(templates.system_instruction, input_text, response)
    return InstructionPair(request, "", response)


def build_pairs(
    dataset: Iterable[Formulation],
    schema: DatasetSchema,
    templates: PromptTemplates = PromptTemplates(),
) -> tuple[list[InstructionPair], list[tuple[str, str]]]:
    """Convert a dataset, skipping rows that cannot form a pair.

    Returns ``(pairs, skipped)`` where each skip is ``(formulation id,
    reason)``. Multi-API rows produce a single pair listing every API.
    """
    api_set = set(schema.api_columns)
    pairs: list[InstructionPair] = []
    skipped: list[tuple[str, str]] = []
    for f in dataset:
        apis = [name for name in f.composition if name in api_set]
        if not apis:
            skipped.append((f.id, "NO_API"))
            continue
        if len(apis) == len(f.composition):
            skipped.append((f.id, "NO_EXCIPIENTS"))
            continue
        pairs.append(formulation_to_pair(f, apis, templates))
    return pairs, skipped


T = TypeVar("T")


def split_holdout(dataset: Sequence[T], spec: SplitSpec) -> tuple[list[T], list[T]]:
    """Seeded hold-out partition; test size is round(fraction * N).

    The split is a deterministic function of (dataset order, fraction,
    seed); both halves preserve the original dataset order.
    """
    if not 0.0 <= spec.test_fraction <= 1.0:
        raise DomainError(f"test fraction {spec.test_fraction} outside [0, 1]")
    n = len(dataset)
    n_test = int(math.floor(spec.test_fraction * n + 0.5))
    indices = list(range(n))
    random.Random(spec.seed).shuffle(indices)
    test_indices = set(indices[:n_test])
    train = [item for i, item in enumerate(dataset) if i not in test_indices]
    test = [item for i, item in enumerate(dataset) if i in test_indices]
    return train, test


PAIR_KEYS = ("instruction", "input", "response")


def write_jsonl(pairs: Iterable[InstructionPair], path: str | Path) -> None:
    """One JSON object per line, UTF-8, LF line endings."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for pair in pairs:
            fh.write(json.dumps(pair.to_dict(), ensure_ascii=False) + "\n")


def read_jsonl(path: str | Path) -> list[InstructionPair]:
    with open(path, encoding="utf-8") as fh:
        return parse_jsonl(fh)


def parse_jsonl(lines: Iterable[str]) -> list[InstructionPair]:
    pairs = []
    for line_no, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise JsonlError(line_no, f"malformed JSON: {exc.msg}") from None
        if not isinstance(record, dict):
            raise JsonlError(line_no, "record is not a JSON object")
        for key in PAIR_KEYS:
            if key not in record:
                raise JsonlError(line_no, f"missing key {key!r}")
            if not isinstance(record[key], str):
                raise JsonlError(line_no, f"key {key!r} is not a string")
        pairs.append(InstructionPair(record["instruction"], record["input"], record["response"]))
    return pairs
