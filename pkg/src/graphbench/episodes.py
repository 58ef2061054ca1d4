"""Episode records, observation rendering, and the shared interaction loop.

An episode is one classification attempt for one query node. The tool and
code modes share the same think-act-observe loop: the model's reply is
parsed, the environment appends an observation (or a format reminder), and
the episode ends on a terminal answer, the step limit, the token limit,
three consecutive parse failures, or a backend error.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

from .backend import Backend, BackendError, ChatRequest, Message, request_text
from .graph import LabelView, TextGraph
from .tokens import TokenBudget

ANSWERED = "answered"
STEP_LIMIT = "step_limit"
TOKEN_LIMIT = "token_limit"
PARSE_FAILURE = "parse_failure"
BACKEND_ERROR = "backend_error"

STATUSES = (ANSWERED, STEP_LIMIT, TOKEN_LIMIT, PARSE_FAILURE, BACKEND_ERROR)

MAX_CONSECUTIVE_PARSE_FAILURES = 3

TRUNCATION_MARKER = "[truncated]"


@dataclass(frozen=True)
class Turn:
    role: str  # system | model | environment
    text: str


@dataclass
class Episode:
    """Transcript and outcome of one classification attempt.

    ``actions`` holds the parsed artifacts of accepted model turns: Action
    objects in tool mode, query strings in code mode, empty in prompt mode.
    """

    target: int
    turns: list[Turn] = field(default_factory=list)
    actions: list = field(default_factory=list)
    predicted: int | None = None
    status: str = ANSWERED
    tokens_in: int = 0
    tokens_out: int = 0


# -- Observation rendering ---------------------------------------------------


def visible_label_text(labels: LabelView, node: int) -> str:
    """Class index for known nodes, the literal "None" otherwise.

    This is the single place a node label is ever rendered for a model, so
    query-set and unlabeled nodes are indistinguishable by construction.
    """
    label = labels.visible_label(node)
    return "None" if label is None else str(label)


def format_id_list(ids: Sequence[int]) -> str:
    return "[" + ", ".join(str(i) for i in ids) + "]"


def node_feature_lines(graph: TextGraph, ids: Sequence[int]) -> str:
    return "\n".join(f"Node {i}: {graph.features[i]}" for i in ids)


def node_label_lines(labels: LabelView, ids: Sequence[int]) -> str:
    return "\n".join(f"Node {i}: {visible_label_text(labels, i)}" for i in ids)


def catalog_lines(graph: TextGraph) -> str:
    return "\n".join(f"{i}: {desc}" for i, desc in enumerate(graph.class_catalog))


def truncate_observation(text: str, cap: int) -> str:
    """Cut an observation at ``cap`` characters, marking the cut explicitly."""
    if len(text) <= cap:
        return text
    return text[:cap] + TRUNCATION_MARKER


# -- Shared loop --------------------------------------------------------------


@dataclass(frozen=True)
class StepOutcome:
    """What a mode made of one model reply."""

    kind: str  # answer | observe | reject
    predicted: int | None = None
    observation: str | None = None
    artifact: object | None = None
    reminder: str | None = None


def answer(predicted: int, artifact: object | None = None) -> StepOutcome:
    return StepOutcome(kind="answer", predicted=predicted, artifact=artifact)


def observe(observation: str, artifact: object | None = None) -> StepOutcome:
    return StepOutcome(kind="observe", observation=observation, artifact=artifact)


def reject(reminder: str) -> StepOutcome:
    return StepOutcome(kind="reject", reminder=reminder)


def _to_chat(turns: Sequence[Turn]) -> tuple[Message, ...]:
    role_map = {"system": "system", "model": "assistant", "environment": "user"}
    return tuple(Message(role=role_map[t.role], text=t.text) for t in turns)


def run_react_loop(
    backend: Backend,
    system_text: str,
    target: int,
    step_fn: Callable[[str], StepOutcome],
    max_steps: int,
    budget: TokenBudget,
    model_name: str = "",
    max_output_tokens: int = 1024,
) -> Episode:
    """Drive one episode: completion, parse, observation, until terminal."""
    if max_steps < 1:
        raise ValueError("max_steps must be at least 1")
    episode = Episode(target=target, turns=[Turn("system", system_text)], status=STEP_LIMIT)
    failures = 0
    for _ in range(max_steps):
        request = ChatRequest(
            messages=_to_chat(episode.turns),
            model_name=model_name,
            max_output_tokens=max_output_tokens,
        )
        if budget.exceeded_by(request_text(request)):
            episode.status = TOKEN_LIMIT
            return episode
        try:
            reply = backend.complete(request)
        except BackendError:
            episode.status = BACKEND_ERROR
            return episode
        episode.tokens_in += reply.tokens_in
        episode.tokens_out += reply.tokens_out
        episode.turns.append(Turn("model", reply.text))
        outcome = step_fn(reply.text)
        if outcome.kind == "answer":
            if outcome.artifact is not None:
                episode.actions.append(outcome.artifact)
            episode.predicted = outcome.predicted
            episode.status = ANSWERED
            return episode
        if outcome.kind == "observe":
            failures = 0
            if outcome.artifact is not None:
                episode.actions.append(outcome.artifact)
            episode.turns.append(Turn("environment", outcome.observation or ""))
        else:
            failures += 1
            if failures >= MAX_CONSECUTIVE_PARSE_FAILURES:
                episode.status = PARSE_FAILURE
                return episode
            episode.turns.append(Turn("environment", outcome.reminder or ""))
    episode.status = STEP_LIMIT
    return episode
