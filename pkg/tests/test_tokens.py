from __future__ import annotations

import math

import pytest
from hypothesis import given, strategies as st

from graphbench.tokens import (
    CHARS_DIV_4,
    WHITESPACE_WORDS,
    TokenBudget,
    count_tokens,
    truncate_to_fraction,
)


def test_count_empty():
    assert count_tokens("", CHARS_DIV_4) == 0
    assert count_tokens("", WHITESPACE_WORDS) == 0


def test_count_chars_div_4():
    assert count_tokens("abcdefgh") == 2
    assert count_tokens("abcdefghi") == 3


def test_count_whitespace_words():
    assert count_tokens("a b  c\td\n", WHITESPACE_WORDS) == 4


def test_count_matches_independent_recount(five_node):
    graph, _ = five_node
    text = "\n".join(graph.features)
    assert count_tokens(text) == math.ceil(len(text) / 4)
    assert count_tokens(text, WHITESPACE_WORDS) == len(text.split())


def test_truncate_identity_and_empty():
    assert truncate_to_fraction("hello world", 1.0) == "hello world"
    assert truncate_to_fraction("hello world", 0.0) == ""


def test_truncate_whitespace_boundary():
    assert truncate_to_fraction("a b c d", 0.5, WHITESPACE_WORDS) == "a b"


def test_truncate_callback_mode():
    counter = lambda text: text.count("|")
    out = truncate_to_fraction("a|b|c|d|", 0.5, "external_count_callback", counter)
    assert counter(out) <= 2


@given(st.text(max_size=200), st.floats(min_value=0.0, max_value=1.0))
def test_truncate_count_bound(text, fraction):
    for mode in (CHARS_DIV_4, WHITESPACE_WORDS):
        kept = truncate_to_fraction(text, fraction, mode)
        assert count_tokens(kept, mode) <= math.floor(fraction * count_tokens(text, mode))
        assert text.startswith(kept)


@given(st.text(max_size=200), st.floats(min_value=0.0, max_value=1.0))
def test_truncate_monotone_in_fraction(text, fraction):
    smaller = truncate_to_fraction(text, fraction / 2, CHARS_DIV_4)
    larger = truncate_to_fraction(text, fraction, CHARS_DIV_4)
    assert larger.startswith(smaller)


@given(st.text(max_size=200))
def test_truncate_idempotent_at_extremes(text):
    # The floor rule shrinks strictly for 0 < p < 1, so only the endpoints
    # are fixed points of repeated truncation.
    for fraction in (0.0, 1.0):
        once = truncate_to_fraction(text, fraction)
        assert truncate_to_fraction(once, fraction) == once


def test_budget_validation():
    with pytest.raises(ValueError):
        TokenBudget(context_limit=0)
    with pytest.raises(ValueError):
        TokenBudget(context_limit=10, counting_mode="bogus")


def test_budget_exceeded():
    budget = TokenBudget(context_limit=2)
    assert not budget.exceeded_by("abcdefgh")
    assert budget.exceeded_by("abcdefghi")
