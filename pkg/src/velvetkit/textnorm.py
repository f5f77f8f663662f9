"""Text normalization shared by the parser, the metrics and the embedding.

``normalize_text`` produces the canonical join key used everywhere an
ingredient name has to be matched against another source (parser output vs
embedding vocabulary, CSV columns vs generated text). Keeping a single
implementation here avoids the classic failure mode where two modules
normalize slightly differently and silently stop matching.
"""

import re

# Anything outside ASCII letters/digits collapses to a single space. Runs
# map to *one* space (not deletion) so multi-word names keep their word
# boundaries: "guar gum" must not become "guargum".
_NON_ALNUM_RUN = re.compile(r"[^a-z0-9]+")

_TOKEN = re.compile(r"[a-z0-9]+")

# The fixed phrases of the response grammar. The second one carries the
# printability tri-state and a one-word aspect slot.
_LEAD_PHRASE = re.compile(r"for\s+this\s+formulation\s*,?\s+use\s+these\s+excipients\s*:", re.IGNORECASE)
_TRAIL_PHRASE = re.compile(
    r"this\s+is\s+(?:not\s+printable|printable|of\s+unknown\s+printability)"
    r"\s+and\s+has\s+a\s+\S+\s+filament\s+aspect\s*\.?",
    re.IGNORECASE,
)


def normalize_text(s: str) -> str:
    """Lowercase ``s`` and collapse every non-alphanumeric run to one space.

    Idempotent; the result contains only ``[a-z0-9 ]`` with single internal
    spaces and no leading/trailing space.
    """
    return _NON_ALNUM_RUN.sub(" ", s.lower()).strip()


def tokenize(s: str) -> list[str]:
    """Split ``s`` into lowercase alphanumeric tokens.

    Shared tokenizer for BLEU and ROUGE: maximal ``[a-z0-9]`` runs after
    lowercasing, everything else is a separator.
    """
    return _TOKEN.findall(s.lower())


def strip_template_phrases(s: str) -> str:
    """Remove the fixed response-template phrases from ``s``.

    Case-insensitive, whitespace-tolerant, idempotent. The printability /
    aspect sentence is matched with a wildcard aspect slot, so it strips
    regardless of which aspect the text declares. Removal runs to a fixed
    point: deleting one phrase can splice the halves of another together,
    and a second pass has to catch that for idempotence to hold.
    """
    out = s
    while True:
        step = _LEAD_PHRASE.sub(" ", out)
        step = _TRAIL_PHRASE.sub(" ", step)
        step = step.strip()
        if step == out:
            return step
        out = step
