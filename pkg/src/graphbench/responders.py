"""Computed responders for scripted policies.

Each responder reconstructs what a cooperative (or adversarial) model would
say from the visible transcript alone: the request messages are all it gets,
exactly like a real backend. Registering them by name keeps scripted
policies loadable from JSON.
"""

from __future__ import annotations

import re
from collections import Counter

from .backend import ChatRequest, ScriptedBackend, register_responder, request_text

_TARGET_RE = re.compile(r"label for node (\d+)")
_PROMPT_LABEL_RE = re.compile(r"label: (\d+)\.")
_OBS_LABEL_LINE_RE = re.compile(r"^Node \d+: (\d+|None)$", re.MULTILINE)
_COUNT_LINE_RE = re.compile(r"^(\d+): (\d+)$", re.MULTILINE)
_ID_LIST_RE = re.compile(r"^\[([0-9, ]*)\]$")


def _target_node(request: ChatRequest) -> int:
    match = _TARGET_RE.search(request.messages[0].text)
    if match is None:
        raise ValueError("system text does not name a target node")
    return int(match.group(1))


def _modal(values: list[int]) -> int:
    counts = Counter(values)
    return max(counts.items(), key=lambda item: (item[1], -item[0]))[0]


@register_responder("prompt-1hop-modal")
def prompt_1hop_modal(request: ChatRequest, backend: ScriptedBackend) -> str:
    """Answer with the modal label of the 1-hop section of a prompt."""
    text = request_text(request)
    section = text.split("Neighbors 1-hop away:", 1)
    scope = section[1].split("Neighbors 2-hops away:", 1)[0] if len(section) > 1 else ""
    found = [int(v) for v in _PROMPT_LABEL_RE.findall(scope)]
    if not found:
        return "No labeled neighbors visible. Answer: [0]"
    return f"Neighbor labels: {found}. Answer: [{_modal(found)}]"


@register_responder("tool-1hop-modal")
def tool_1hop_modal(request: ChatRequest, backend: ScriptedBackend) -> str:
    """Basic-variant oracle: list neighbors, query each label, answer the mode."""
    target = _target_node(request)
    asked: list[int] = []
    neighbor_ids: list[int] | None = None
    collected: list[str] = []
    messages = request.messages
    for index, message in enumerate(messages):
        if message.role != "assistant":
            continue
        line = message.text.strip().splitlines()[-1]
        observation = messages[index + 1].text if index + 1 < len(messages) else ""
        if line.lower().startswith("action 1"):
            match = _ID_LIST_RE.match(observation.strip())
            if match:
                raw = match.group(1).strip()
                neighbor_ids = [int(v) for v in raw.split(",")] if raw else []
        elif line.lower().startswith("action 3"):
            asked.append(int(line.rsplit(" ", 1)[-1]))
            collected.append(observation.strip())
    if neighbor_ids is None:
        return f"First, look at the neighborhood.\nAction 1, node {target}"
    remaining = [n for n in neighbor_ids if n not in asked]
    if remaining:
        return f"Check a neighbor label.\nAction 3, node {remaining[0]}"
    labels = [int(v) for v in collected if v != "None"]
    if not labels:
        return "No labels found.\nAction 0, answer 0"
    return f"Labels seen: {labels}.\nAction 0, answer {_modal(labels)}"


@register_responder("tool-plus-1hop-modal")
def tool_plus_1hop_modal(request: ChatRequest, backend: ScriptedBackend) -> str:
    """Plus-variant oracle: one exact-1-hop label retrieval, then the mode."""
    target = _target_node(request)
    if backend.step == 0:
        return f"Fetch every 1-hop label at once.\nAction 5, node {target}, hop 1"
    observation = request.messages[-1].text
    values = [v for v in _OBS_LABEL_LINE_RE.findall(observation) if v != "None"]
    if not values:
        return "Nothing labeled nearby.\nAction 0, answer 0"
    return f"Action 0, answer {_modal([int(v) for v in values])}"


@register_responder("code-1hop-modal")
def code_1hop_modal(request: ChatRequest, backend: ScriptedBackend) -> str:
    """Code-mode oracle: count neighbor labels in one query, then the mode."""
    target = _target_node(request)
    if backend.step == 0:
        return f"count_labels(neighbors({target}))"
    observation = request.messages[-1].text
    pairs = [(int(label), int(count)) for label, count in _COUNT_LINE_RE.findall(observation)]
    if not pairs:
        return "Answer 0"
    best = max(pairs, key=lambda item: (item[1], -item[0]))[0]
    return f"Answer {best}"


@register_responder("random-answer")
def random_answer(request: ChatRequest, backend: ScriptedBackend) -> str:
    """Uniform answer over the class catalog parsed from the request."""
    text = request_text(request)
    catalog = text.split("Available class labels:", 1)
    indices = [int(m) for m in re.findall(r"^(\d+): ", catalog[-1], re.MULTILINE)]
    upper = max(indices) + 1 if indices else 1
    return f"Answer: {backend.rng.randrange(upper)}"


@register_responder("random-action")
def random_action(request: ChatRequest, backend: ScriptedBackend) -> str:
    """Adversarial fuzzer for the tool loop; params bound the ids it emits.

    params: max_node (default 4), max_hop (default 4), answer_after (default 3),
    classes (default 1) for the terminal answer range.
    """
    params = backend.params
    rng = backend.rng
    if backend.step >= params.get("answer_after", 3):
        return f"Action 0, answer {rng.randrange(params.get('classes', 1))}"
    max_node = params.get("max_node", 4)
    max_hop = params.get("max_hop", 4)
    choice = rng.randrange(5)
    node = rng.randrange(max_node + 1)
    if choice < 3:
        return f"Action {choice + 1}, node {node}"
    return f"Action {choice + 1}, node {node}, hop {rng.randrange(max_hop + 1)}"
