"""Token counting and context-limit enforcement.

Counting is deliberately tokenizer-agnostic: the default mode charges one
token per four characters, a whitespace-word mode is available for tests,
and a callback mode lets a backend plug in its exact tokenizer. Results that
depend on truncation percentages are defined relative to the configured
counting mode.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Callable

CHARS_DIV_4 = "chars_div_4"
WHITESPACE_WORDS = "whitespace_words"
EXTERNAL_CALLBACK = "external_count_callback"

COUNTING_MODES = (CHARS_DIV_4, WHITESPACE_WORDS, EXTERNAL_CALLBACK)

_WORD_RE = re.compile(r"\S+")


def count_tokens(
    text: str,
    mode: str = CHARS_DIV_4,
    callback: Callable[[str], int] | None = None,
) -> int:
    """Count tokens of ``text`` under the given counting mode."""
    if mode == CHARS_DIV_4:
        return math.ceil(len(text) / 4)
    if mode == WHITESPACE_WORDS:
        return len(_WORD_RE.findall(text))
    if mode == EXTERNAL_CALLBACK:
        if callback is None:
            raise ValueError("external_count_callback mode requires a callback")
        return callback(text)
    raise ValueError(f"unknown counting mode: {mode!r}")


def truncate_to_fraction(
    text: str,
    fraction: float,
    mode: str = CHARS_DIV_4,
    callback: Callable[[str], int] | None = None,
) -> str:
    """Keep the first ``floor(fraction * count_tokens(text))`` tokens.

    The cut lands on a token boundary; fraction 1 is the identity and
    fraction 0 yields the empty string.
    """
    if not 0.0 <= fraction <= 1.0:
        raise ValueError(f"fraction must be in [0, 1], got {fraction}")
    if fraction == 1.0 or not text:
        return text
    total = count_tokens(text, mode, callback)
    keep = math.floor(fraction * total)
    if keep <= 0:
        return ""
    if mode == CHARS_DIV_4:
        return text[: 4 * keep]
    if mode == WHITESPACE_WORDS:
        spans = list(_WORD_RE.finditer(text))
        return text[: spans[keep - 1].end()]
    # Callback boundaries are opaque; take the longest prefix whose count
    # stays within the allowance. Counts are monotone in prefix length, so
    # a binary search is valid.
    lo, hi = 0, len(text)
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if count_tokens(text[:mid], mode, callback) <= keep:
            lo = mid
        else:
            hi = mid - 1
    return text[:lo]


@dataclass(frozen=True)
class TokenBudget:
    """Context limit plus the counting mode used to enforce it."""

    context_limit: int
    counting_mode: str = CHARS_DIV_4
    count_callback: Callable[[str], int] | None = None

    def __post_init__(self) -> None:
        if self.context_limit <= 0:
            raise ValueError("context_limit must be positive")
        if self.counting_mode not in COUNTING_MODES:
            raise ValueError(f"unknown counting mode: {self.counting_mode!r}")

    def count(self, text: str) -> int:
        return count_tokens(text, self.counting_mode, self.count_callback)

    def exceeded_by(self, text: str) -> bool:
        return self.count(text) > self.context_limit
