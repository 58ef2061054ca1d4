"""Fixed-action tool loop over the graph.

The model acts through a closed action set: answer, neighbors, features,
label, and (in the plus variant) exact-k hop features/labels. Only the final
non-empty line of a reply is parsed. Invalid node ids produce error
observations rather than ending the episode; malformed lines get a format
reminder and three consecutive failures end the episode.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .backend import Backend
from .episodes import (
    Episode,
    StepOutcome,
    answer,
    catalog_lines,
    format_id_list,
    node_feature_lines,
    node_label_lines,
    observe,
    reject,
    run_react_loop,
    truncate_observation,
    visible_label_text,
)
from .graph import LabelView, TextGraph, khop
from .tokens import TokenBudget

VARIANT_BASIC = "tool"
VARIANT_PLUS = "tool-plus"

ANSWER = "answer"
NEIGHBORS = "neighbors"
FEATURES = "features"
LABEL = "label"
HOP_FEATURES = "hop_features"
HOP_LABELS = "hop_labels"

DEFAULT_MAX_STEPS = 20
DEFAULT_OBSERVATION_CAP = 4000


class ActionParseError(Exception):
    pass


@dataclass(frozen=True)
class Action:
    kind: str
    node: int | None = None
    hop: int | None = None
    class_index: int | None = None


_ANSWER_RE = re.compile(r"^action\s*0\s*,\s*answer\s+(\d+)\s*$", re.IGNORECASE)
_NODE_RE = re.compile(r"^action\s*([123])\s*,\s*node\s+(\d+)\s*$", re.IGNORECASE)
_HOP_RE = re.compile(
    r"^action\s*([45])\s*,\s*node\s+(\d+)\s*,\s*hop\s+(\d+)\s*$", re.IGNORECASE
)

_NODE_KINDS = {"1": NEIGHBORS, "2": FEATURES, "3": LABEL}
_HOP_KINDS = {"4": HOP_FEATURES, "5": HOP_LABELS}


def final_nonempty_line(text: str) -> str:
    for line in reversed(text.splitlines()):
        if line.strip():
            return line.strip()
    return ""


def parse_action(response: str, variant: str = VARIANT_BASIC) -> Action:
    """Parse the final non-empty line of a model reply into an action."""
    line = final_nonempty_line(response)
    if not line:
        raise ActionParseError("empty response")
    if match := _ANSWER_RE.match(line):
        return Action(kind=ANSWER, class_index=int(match.group(1)))
    if match := _NODE_RE.match(line):
        return Action(kind=_NODE_KINDS[match.group(1)], node=int(match.group(2)))
    if match := _HOP_RE.match(line):
        if variant != VARIANT_PLUS:
            raise ActionParseError(f"action {match.group(1)} unavailable in this variant")
        hop = int(match.group(3))
        if hop < 1:
            raise ActionParseError("hop must be at least 1")
        return Action(kind=_HOP_KINDS[match.group(1)], node=int(match.group(2)), hop=hop)
    raise ActionParseError(f"unrecognized action line: {line!r}")


def execute_action(
    graph: TextGraph,
    labels: LabelView,
    action: Action,
    observation_cap: int = DEFAULT_OBSERVATION_CAP,
) -> str:
    """Run a non-terminal action and render its observation."""
    try:
        if action.kind == NEIGHBORS:
            text = format_id_list(graph.neighbors(action.node))
        elif action.kind == FEATURES:
            graph.check_node(action.node)
            text = graph.features[action.node]
        elif action.kind == LABEL:
            graph.check_node(action.node)
            text = visible_label_text(labels, action.node)
        elif action.kind == HOP_FEATURES:
            text = node_feature_lines(graph, khop(graph, action.node, action.hop))
        elif action.kind == HOP_LABELS:
            text = node_label_lines(labels, khop(graph, action.node, action.hop))
        else:
            raise ValueError(f"not an executable action: {action.kind}")
        return truncate_observation(text, observation_cap)
    except ValueError as exc:
        if "invalid node id" in str(exc):
            return f"error: {exc}"
        raise


def tool_system_prompt(graph: TextGraph, node: int, variant: str = VARIANT_BASIC) -> str:
    lines = [
        f"Task: determine the label for node {node} by querying the graph.",
        "Reason first; the final non-empty line of each response must be one action:",
        "Action 0, answer class_id: submit the final integer label.",
        "Action 1, node node_id: list the neighbors of the node.",
        "Action 2, node node_id: show the textual description of the node.",
        "Action 3, node node_id: show the label of the node, or None if it is not known.",
    ]
    if variant == VARIANT_PLUS:
        lines += [
            "Action 4, node node_id, hop num_hop: descriptions of all nodes exactly num_hop hops away.",
            "Action 5, node node_id, hop num_hop: labels (or None) of all nodes exactly num_hop hops away.",
        ]
    lines += ["Available class labels:", catalog_lines(graph)]
    return "\n".join(lines)


_FORMAT_REMINDER = (
    'Could not parse an action. End your response with a line like '
    '"Action 1, node 0" or "Action 0, answer 0".'
)


def run_tool_episode(
    backend: Backend,
    graph: TextGraph,
    labels: LabelView,
    node: int,
    variant: str = VARIANT_BASIC,
    max_steps: int = DEFAULT_MAX_STEPS,
    budget: TokenBudget | None = None,
    observation_cap: int = DEFAULT_OBSERVATION_CAP,
    model_name: str = "",
    max_output_tokens: int = 1024,
) -> Episode:
    graph.check_node(node)
    if variant not in (VARIANT_BASIC, VARIANT_PLUS):
        raise ValueError(f"unknown tool variant: {variant!r}")
    budget = budget or TokenBudget(context_limit=1_000_000)

    def step(reply: str) -> StepOutcome:
        try:
            action = parse_action(reply, variant)
        except ActionParseError as exc:
            return reject(f"error: {exc}. {_FORMAT_REMINDER}")
        if action.kind == ANSWER:
            if not 0 <= action.class_index < graph.class_count:
                return reject(
                    f"error: class index {action.class_index} outside "
                    f"[0, {graph.class_count}). {_FORMAT_REMINDER}"
                )
            return answer(action.class_index, artifact=action)
        return observe(execute_action(graph, labels, action, observation_cap), artifact=action)

    return run_react_loop(
        backend,
        tool_system_prompt(graph, node, variant),
        node,
        step,
        max_steps,
        budget,
        model_name=model_name,
        max_output_tokens=max_output_tokens,
    )
