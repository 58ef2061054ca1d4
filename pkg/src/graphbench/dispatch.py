"""Mode specifications and episode dispatch.

A mode spec names one way of producing a prediction (a prompting variant,
a tool loop variant, the code loop, or a baseline) together with its
parameters. Dispatch runs one episode per query node, in parallel across a
worker pool; a fresh scripted backend is created per episode so policies
never share state.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

from . import responders  # noqa: F401  (populates the responder registry)
from .backend import Backend
from .baselines import label_propagation, predict_majority, predict_random
from .dsl import DEFAULT_RENDER_CAP, run_code_episode
from .episodes import ANSWERED, BACKEND_ERROR, STATUSES, Episode
from .graph import LabelView, TextGraph
from .prompting import PromptConfig, run_prompt_episode
from .seeding import derive_rng
from .tokens import TokenBudget
from .tool import (
    DEFAULT_MAX_STEPS,
    DEFAULT_OBSERVATION_CAP,
    VARIANT_BASIC,
    VARIANT_PLUS,
    run_tool_episode,
)

PROMPT = "prompt"
TOOL = VARIANT_BASIC
TOOL_PLUS = VARIANT_PLUS
CODE = "code"
RANDOM = "random"
MAJORITY = "majority"
LABEL_PROPAGATION = "label-propagation"

MODE_KINDS = (PROMPT, TOOL, TOOL_PLUS, CODE, RANDOM, MAJORITY, LABEL_PROPAGATION)

BACKEND_MODES = (PROMPT, TOOL, TOOL_PLUS, CODE)


@dataclass(frozen=True)
class ModeSpec:
    kind: str
    hops: int = 2
    budget_cap: int | None = None
    max_steps: int = DEFAULT_MAX_STEPS
    propagation_steps: int = 10

    def __post_init__(self) -> None:
        if self.kind not in MODE_KINDS:
            raise ValueError(f"unknown mode: {self.kind!r}")

    @property
    def label(self) -> str:
        if self.kind == PROMPT:
            name = f"prompt-{self.hops}hop"
            if self.budget_cap is not None:
                name += f"-budget{self.budget_cap}"
            return name
        return self.kind

    @property
    def needs_backend(self) -> bool:
        return self.kind in BACKEND_MODES


def parse_mode_spec(data: dict | str) -> ModeSpec:
    if isinstance(data, str):
        data = {"mode": data}
    kind = data.get("mode")
    kwargs = {}
    if "hops" in data:
        kwargs["hops"] = int(data["hops"])
    if data.get("budget_cap") is not None:
        kwargs["budget_cap"] = int(data["budget_cap"])
    if "max_steps" in data:
        kwargs["max_steps"] = int(data["max_steps"])
    if "propagation_steps" in data:
        kwargs["propagation_steps"] = int(data["propagation_steps"])
    return ModeSpec(kind=kind, **kwargs)


BackendFactory = Callable[[tuple], Backend]


@dataclass(frozen=True)
class EpisodeSettings:
    budget: TokenBudget
    observation_cap: int = DEFAULT_OBSERVATION_CAP
    render_cap: int = DEFAULT_RENDER_CAP
    model_name: str = ""
    max_output_tokens: int = 1024
    workers: int = 8


def _episode_seed(seed: int, node: int) -> int:
    return derive_rng("episode", seed, node).getrandbits(32)


def run_one_episode(
    spec: ModeSpec,
    graph: TextGraph,
    labels: LabelView,
    node: int,
    seed: int,
    backend: Backend,
    settings: EpisodeSettings,
) -> Episode:
    if spec.kind == PROMPT:
        cfg = PromptConfig(hops=spec.hops, budget_cap=spec.budget_cap, seed=seed)
        return run_prompt_episode(
            backend, graph, labels, node, cfg, settings.budget,
            model_name=settings.model_name,
            max_output_tokens=settings.max_output_tokens,
        )
    if spec.kind in (TOOL, TOOL_PLUS):
        return run_tool_episode(
            backend, graph, labels, node,
            variant=spec.kind,
            max_steps=spec.max_steps,
            budget=settings.budget,
            observation_cap=settings.observation_cap,
            model_name=settings.model_name,
            max_output_tokens=settings.max_output_tokens,
        )
    if spec.kind == CODE:
        return run_code_episode(
            backend, graph, labels, node,
            max_steps=spec.max_steps,
            budget=settings.budget,
            render_cap=settings.render_cap,
            episode_seed=_episode_seed(seed, node),
            model_name=settings.model_name,
            max_output_tokens=settings.max_output_tokens,
        )
    raise ValueError(f"mode {spec.kind!r} does not run per-node episodes")


def _baseline_episodes(
    spec: ModeSpec,
    graph: TextGraph,
    labels: LabelView,
    nodes: Sequence[int],
    seed: int,
) -> list[Episode]:
    if spec.kind == RANDOM:
        predictions = predict_random(graph.class_count, nodes, seed)
    elif spec.kind == MAJORITY:
        predictions = predict_majority(labels, nodes)
    else:
        predictions = label_propagation(
            graph, labels, steps=spec.propagation_steps, query=nodes
        )
    return [
        Episode(target=p.node, predicted=p.class_index, status=ANSWERED)
        for p in predictions
    ]


def run_episodes(
    spec: ModeSpec,
    graph: TextGraph,
    labels: LabelView,
    nodes: Sequence[int],
    seed: int,
    backend_factory: BackendFactory | None,
    settings: EpisodeSettings,
) -> list[Episode]:
    """One episode per node, status-labelled; unexpected errors become
    backend_error records rather than aborting the run."""
    if not spec.needs_backend:
        return _baseline_episodes(spec, graph, labels, nodes, seed)
    if backend_factory is None:
        raise ValueError(f"mode {spec.kind!r} requires a backend")

    def run(node: int) -> Episode:
        backend = backend_factory((seed, node))
        try:
            return run_one_episode(spec, graph, labels, node, seed, backend, settings)
        except Exception:
            return Episode(target=node, predicted=None, status=BACKEND_ERROR)

    if settings.workers <= 1 or len(nodes) <= 1:
        return [run(node) for node in nodes]
    with ThreadPoolExecutor(max_workers=settings.workers) as pool:
        return list(pool.map(run, nodes))


def accuracy(episodes: Sequence[Episode], graph: TextGraph) -> float:
    """Fraction of episodes whose prediction matches the ground-truth label.

    Every non-answered episode counts as incorrect.
    """
    if not episodes:
        return 0.0
    correct = 0
    for episode in episodes:
        truth = graph.labels[episode.target]
        if truth is None:
            raise ValueError(f"query node {episode.target} has no ground-truth label")
        if episode.status == ANSWERED and episode.predicted == truth:
            correct += 1
    return correct / len(episodes)


def status_counts(episodes: Sequence[Episode]) -> dict[str, int]:
    counts = {status: 0 for status in STATUSES}
    for episode in episodes:
        counts[episode.status] += 1
    return counts
