"""Single-turn neighborhood prompts.

The prompt lists the class catalog, the target node, then one section per
hop ring (nodes at their minimal distance only, ascending ids). The budget
variant caps every node's neighbor expansion with a seeded permutation
prefix, so larger caps strictly extend smaller ones. A prompt that would
exceed the context limit raises TokenLimitExceeded instead of being sent.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass

from .backend import Backend, BackendError, ChatRequest, Message
from .episodes import (
    ANSWERED,
    BACKEND_ERROR,
    PARSE_FAILURE,
    TOKEN_LIMIT,
    Episode,
    Turn,
    catalog_lines,
    visible_label_text,
)
from .graph import LabelView, TextGraph
from .seeding import derive_rng
from .tokens import TokenBudget

log = logging.getLogger(__name__)

HOP_CHOICES = (0, 1, 2)

ANSWER_INSTRUCTION = "Think and end your response with: Answer: [class_id]."

# Accepts "Answer: [3]", "Answer: 3", "Answer 3" and lowercase variants.
_ANSWER_RE = re.compile(r"answer\s*:?\s*\[?\s*(\d+)\s*\]?", re.IGNORECASE)


class TokenLimitExceeded(Exception):
    """The assembled prompt does not fit the context limit."""


class AnswerParseError(Exception):
    pass


@dataclass(frozen=True)
class PromptConfig:
    hops: int = 2
    budget_cap: int | None = None
    seed: int = 0

    def __post_init__(self) -> None:
        if self.hops not in HOP_CHOICES:
            raise ValueError(f"hops must be one of {HOP_CHOICES}")
        if self.budget_cap is not None and self.budget_cap < 1:
            raise ValueError("budget_cap must be at least 1 when present")


def _expansion(graph: TextGraph, node: int, cap: int | None, seed: int) -> list[int]:
    """A node's neighbor list, optionally capped by a seeded permutation prefix.

    The permutation depends only on (seed, node), so caps nest: the set kept
    at cap c is always a subset of the set kept at any larger cap.
    """
    neighbors = list(graph.adjacency[node])
    if cap is None or len(neighbors) <= cap:
        return neighbors
    rng = derive_rng("budget", seed, node)
    rng.shuffle(neighbors)
    return sorted(neighbors[:cap])


def neighborhood_rings(
    graph: TextGraph, node: int, hops: int, budget_cap: int | None = None, seed: int = 0
) -> list[list[int]]:
    """Hop rings 1..hops around ``node``; each node appears at its minimal
    distance within the (possibly capped) expansion."""
    graph.check_node(node)
    seen = {node}
    frontier = [node]
    rings: list[list[int]] = []
    for _ in range(hops):
        ring: set[int] = set()
        for current in frontier:
            for other in _expansion(graph, current, budget_cap, seed):
                if other not in seen:
                    ring.add(other)
        ordered = sorted(ring)
        rings.append(ordered)
        seen |= ring
        frontier = ordered
    return rings


def _node_line(graph: TextGraph, labels: LabelView, node: int) -> str:
    return (
        f"Node {node}: description: {graph.features[node]}; "
        f"label: {visible_label_text(labels, node)}."
    )


def build_prompt(
    graph: TextGraph,
    labels: LabelView,
    node: int,
    cfg: PromptConfig,
    budget: TokenBudget,
) -> str:
    """Render the full prompt; raises TokenLimitExceeded if it cannot fit."""
    graph.check_node(node)
    parts = [
        f"Task: determine the label for node {node}.",
        "",
        "Available class labels:",
        catalog_lines(graph),
        "",
        _node_line(graph, labels, node),
    ]
    rings = neighborhood_rings(graph, node, cfg.hops, cfg.budget_cap, cfg.seed)
    for hop, ring in enumerate(rings, start=1):
        if not ring:
            continue
        unit = "hop" if hop == 1 else "hops"
        parts.append("")
        parts.append(f"Neighbors {hop}-{unit} away:")
        parts.extend(_node_line(graph, labels, other) for other in ring)
    parts.append("")
    parts.append(ANSWER_INSTRUCTION)
    prompt = "\n".join(parts)
    if budget.exceeded_by(prompt):
        raise TokenLimitExceeded(
            f"prompt for node {node} needs {budget.count(prompt)} tokens, "
            f"limit is {budget.context_limit}"
        )
    return prompt


def parse_answer(response: str, class_count: int) -> int:
    """Extract the last answer pattern; rejects out-of-range class indices."""
    matches = list(_ANSWER_RE.finditer(response))
    if not matches:
        raise AnswerParseError("no answer pattern found")
    last = matches[-1]
    value = int(last.group(1))
    if not 0 <= value < class_count:
        raise AnswerParseError(f"class index {value} outside [0, {class_count})")
    form = "bracketed" if "[" in last.group(0) else "bare"
    log.debug("parsed answer %d (%s form)", value, form)
    return value


def run_prompt_episode(
    backend: Backend,
    graph: TextGraph,
    labels: LabelView,
    node: int,
    cfg: PromptConfig,
    budget: TokenBudget,
    model_name: str = "",
    max_output_tokens: int = 1024,
) -> Episode:
    """One prompt, one completion, one parsed answer."""
    episode = Episode(target=node)
    try:
        prompt = build_prompt(graph, labels, node, cfg, budget)
    except TokenLimitExceeded:
        episode.status = TOKEN_LIMIT
        return episode
    episode.turns.append(Turn("system", prompt))
    request = ChatRequest(
        messages=(Message(role="system", text=prompt),),
        model_name=model_name,
        max_output_tokens=max_output_tokens,
    )
    try:
        reply = backend.complete(request)
    except BackendError:
        episode.status = BACKEND_ERROR
        return episode
    episode.tokens_in = reply.tokens_in
    episode.tokens_out = reply.tokens_out
    episode.turns.append(Turn("model", reply.text))
    try:
        episode.predicted = parse_answer(reply.text, graph.class_count)
        episode.status = ANSWERED
    except AnswerParseError:
        episode.status = PARSE_FAILURE
    return episode
