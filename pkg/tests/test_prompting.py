from __future__ import annotations

import re

import pytest

from graphbench.backend import Rule, ScriptedBackend, ScriptedPolicy
from graphbench.episodes import ANSWERED, PARSE_FAILURE, TOKEN_LIMIT
from graphbench.prompting import (
    AnswerParseError,
    PromptConfig,
    TokenLimitExceeded,
    build_prompt,
    neighborhood_rings,
    parse_answer,
    run_prompt_episode,
)
from graphbench.tokens import TokenBudget

from conftest import GOLDENS, build_leak_fixture, build_longtext_fixture

BIG = TokenBudget(context_limit=1_000_000)


def test_zero_hop_has_no_neighbor_sections(five_node):
    graph, labels = five_node
    prompt = build_prompt(graph, labels, 0, PromptConfig(hops=0), BIG)
    assert "Neighbors" not in prompt
    assert "Available class labels:" in prompt
    assert "Node 0: description:" in prompt


def test_golden_prompts(five_node):
    graph, labels = five_node
    cases = [
        ("prompt_hop0.txt", PromptConfig(hops=0)),
        ("prompt_hop1.txt", PromptConfig(hops=1)),
        ("prompt_hop2.txt", PromptConfig(hops=2)),
        ("prompt_budget_cap1_seed3.txt", PromptConfig(hops=2, budget_cap=1, seed=3)),
    ]
    for name, cfg in cases:
        expected = (GOLDENS / name).read_text(encoding="utf-8")
        assert build_prompt(graph, labels, 0, cfg, BIG) == expected


def test_prompt_is_pure_function(five_node):
    graph, labels = five_node
    cfg = PromptConfig(hops=2, budget_cap=1, seed=5)
    assert build_prompt(graph, labels, 0, cfg, BIG) == build_prompt(graph, labels, 0, cfg, BIG)


def test_prompt_token_limit(longtext):
    graph, labels = longtext
    with pytest.raises(TokenLimitExceeded):
        build_prompt(graph, labels, 0, PromptConfig(hops=2), TokenBudget(context_limit=100))


def test_budget_caps_nest(five_node):
    graph, labels = five_node

    def included(cap):
        rings = neighborhood_rings(graph, 0, 2, budget_cap=cap, seed=11)
        return set(rings[0]) | set(rings[1])

    previous: set[int] = set()
    for cap in (1, 2, 3, 4):
        current = included(cap)
        assert previous <= current
        previous = current
    assert included(4) == {1, 2, 3, 4}


def test_rings_dedup_to_minimal_hop(homophilic):
    graph, labels = homophilic
    rings = neighborhood_rings(graph, 0, 2)
    assert rings[0] == [1, 2, 3, 4, 5]
    assert rings[1] == []  # clique: everything is already 1 hop away


def test_no_heldout_label_in_prompt():
    graph, labels = build_leak_fixture()
    prompt = build_prompt(graph, labels, 0, PromptConfig(hops=2), BIG)
    body = "\n".join(
        line
        for line in prompt.splitlines()
        if not any(line == f"{i}: {d}" for i, d in enumerate(graph.class_catalog))
    )
    assert not re.search(r"\b[678]\b", body)
    assert "label: None." in prompt


def test_parse_answer_forms():
    assert parse_answer("thinking... Answer: 3", 5) == 3
    assert parse_answer("Answer: [12]", 40) == 12
    assert parse_answer("answer 2", 5) == 2
    assert parse_answer("Answer: 1 no wait. Answer: 4", 5) == 4


def test_parse_answer_failures():
    with pytest.raises(AnswerParseError):
        parse_answer("no conclusion here", 5)
    with pytest.raises(AnswerParseError):
        parse_answer("Answer: 9", 5)


def test_prompt_episode_answered(five_node):
    graph, labels = five_node
    backend = ScriptedBackend(ScriptedPolicy(default="Answer: 1"))
    episode = run_prompt_episode(backend, graph, labels, 0, PromptConfig(hops=1), BIG)
    assert episode.status == ANSWERED
    assert episode.predicted == 1
    assert episode.tokens_in > 0


def test_prompt_episode_parse_failure(five_node):
    graph, labels = five_node
    backend = ScriptedBackend(ScriptedPolicy(default="I cannot tell."))
    episode = run_prompt_episode(backend, graph, labels, 0, PromptConfig(hops=1), BIG)
    assert episode.status == PARSE_FAILURE
    assert episode.predicted is None


def test_prompt_episode_token_limit():
    graph, labels = build_longtext_fixture()
    backend = ScriptedBackend(ScriptedPolicy(default="Answer: 0"))
    episode = run_prompt_episode(
        backend, graph, labels, 0, PromptConfig(hops=2), TokenBudget(context_limit=100)
    )
    assert episode.status == TOKEN_LIMIT
    assert episode.tokens_in == 0


def test_prompt_modal_oracle_hits_every_neighbor_label(homophilic):
    graph, labels = homophilic
    policy = ScriptedPolicy(rules=(Rule(responder="prompt-1hop-modal"),))
    for node, expected in ((0, 0), (6, 1)):
        episode = run_prompt_episode(
            ScriptedBackend(policy), graph, labels, node, PromptConfig(hops=1), BIG
        )
        assert episode.status == ANSWERED
        assert episode.predicted == expected
