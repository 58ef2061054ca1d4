"""Sandboxed query language over the node table.

The model queries a logical table (one row per node: features, neighbors,
label) through a closed set of builtins. Expressions are single composable
calls parsed by recursive descent; there is no assignment, attribute access,
subscripting, or any identifier outside the builtin set, so evaluation can
only ever touch table contents. Rendered results are capped, and evaluation
work is bounded by a node-visit budget.
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
from .graph import LabelView, TextGraph, khop_with_limit
from .seeding import derive_rng
from .tokens import TokenBudget
from .tool import final_nonempty_line

MAX_DEPTH = 16
DEFAULT_RENDER_CAP = 4000
DEFAULT_VISIT_CAP = 200_000
DEFAULT_MAX_STEPS = 20

# Value types: INT covers node ids and counts, IDS is a list of node ids,
# TEXT is rendered output and cannot be passed to another call.
T_INT = "int"
T_IDS = "id list"
T_TEXT = "text"

DSL_GRAMMAR = """Columns: features (text), neighbors (ids), label (int or None).
One query per turn on the final line:
row(i) features(i) label(i) neighbors(i) hop(i,k) degree(i) features_of(l) labels_of(l) count_labels(l) filter_label(l,c) sample(l,n[,s]) head(l,n) size(l) classes()
Finish with: Answer class_id"""

# name -> (required arg types, optional arg types, result type)
BUILTINS: dict[str, tuple[tuple[str, ...], tuple[str, ...], str]] = {
    "row": ((T_INT,), (), T_TEXT),
    "features": ((T_INT,), (), T_TEXT),
    "label": ((T_INT,), (), T_TEXT),
    "neighbors": ((T_INT,), (), T_IDS),
    "hop": ((T_INT, T_INT), (), T_IDS),
    "degree": ((T_INT,), (), T_INT),
    "features_of": ((T_IDS,), (), T_TEXT),
    "labels_of": ((T_IDS,), (), T_TEXT),
    "count_labels": ((T_IDS,), (), T_TEXT),
    "filter_label": ((T_IDS, T_INT), (), T_IDS),
    "sample": ((T_IDS, T_INT), (T_INT,), T_IDS),
    "head": ((T_IDS, T_INT), (), T_IDS),
    "size": ((T_IDS,), (), T_INT),
    "classes": ((), (), T_TEXT),
}


class QueryParseError(Exception):
    pass


class QueryEvalError(Exception):
    pass


@dataclass(frozen=True)
class IntLit:
    value: int


@dataclass(frozen=True)
class StrLit:
    value: str


@dataclass(frozen=True)
class ListLit:
    values: tuple[int, ...]


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple


QueryAst = IntLit | StrLit | ListLit | Call

_TOKEN_RE = re.compile(
    r"(?:(?P<int>\d+)|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<string>'[^']*'|\"[^\"]*\")|(?P<punct>[()\[\],]))"
)


def _tokenize(text: str) -> list[tuple[str, str]]:
    tokens: list[tuple[str, str]] = []
    pos = 0
    while pos < len(text):
        if text[pos].isspace():
            pos += 1
            continue
        match = _TOKEN_RE.match(text, pos)
        if match is None:
            # Kept as an opaque token so the parser can name it in context.
            tokens.append(("other", text[pos]))
            pos += 1
            continue
        pos = match.end()
        for kind in ("int", "ident", "string", "punct"):
            value = match.group(kind)
            if value is not None:
                tokens.append((kind, value))
                break
    return tokens


class _Parser:
    def __init__(self, tokens: list[tuple[str, str]]):
        self._tokens = tokens
        self._pos = 0

    def _peek(self) -> tuple[str, str] | None:
        return self._tokens[self._pos] if self._pos < len(self._tokens) else None

    def _advance(self) -> tuple[str, str]:
        token = self._peek()
        if token is None:
            raise QueryParseError("unexpected end of query")
        self._pos += 1
        return token

    def _expect(self, value: str) -> None:
        token = self._peek()
        if token is None or token[1] != value:
            found = token[1] if token else "end of query"
            raise QueryParseError(f"expected {value!r}, found {found!r}")
        self._advance()

    def parse(self) -> QueryAst:
        ast = self._expression(depth=1)
        leftover = self._peek()
        if leftover is not None:
            raise QueryParseError(f"unexpected token {leftover[1]!r} after expression")
        return ast

    def _expression(self, depth: int) -> QueryAst:
        if depth > MAX_DEPTH:
            raise QueryParseError(f"expression nesting exceeds depth {MAX_DEPTH}")
        kind, value = self._advance()
        if kind == "int":
            return IntLit(int(value))
        if kind == "string":
            return StrLit(value[1:-1])
        if kind == "punct" and value == "[":
            return self._id_list()
        if kind == "ident":
            nxt = self._peek()
            if nxt is None or nxt[1] != "(":
                raise QueryParseError(f"unknown identifier {value}")
            if value not in BUILTINS:
                raise QueryParseError(f"unknown function {value}")
            self._advance()
            args: list[QueryAst] = []
            if self._peek() is not None and self._peek()[1] == ")":
                self._advance()
            else:
                while True:
                    args.append(self._expression(depth + 1))
                    kind2, value2 = self._advance()
                    if value2 == ")":
                        break
                    if value2 != ",":
                        raise QueryParseError(f"expected ',' or ')', found {value2!r}")
            return Call(value, tuple(args))
        raise QueryParseError(f"unexpected token {value!r}")

    def _id_list(self) -> ListLit:
        values: list[int] = []
        token = self._peek()
        if token is not None and token[1] == "]":
            self._advance()
            return ListLit(())
        while True:
            kind, value = self._advance()
            if kind != "int":
                raise QueryParseError(f"id lists may only contain integers, found {value!r}")
            values.append(int(value))
            kind, value = self._advance()
            if value == "]":
                break
            if value != ",":
                raise QueryParseError(f"expected ',' or ']', found {value!r}")
        return ListLit(tuple(values))


def type_of(ast: QueryAst) -> str:
    """Static type of an expression; raises QueryParseError on mismatches."""
    if isinstance(ast, IntLit):
        return T_INT
    if isinstance(ast, StrLit):
        return T_TEXT
    if isinstance(ast, ListLit):
        return T_IDS
    required, optional, result = BUILTINS[ast.name]
    arity_lo, arity_hi = len(required), len(required) + len(optional)
    if not arity_lo <= len(ast.args) <= arity_hi:
        expected = str(arity_lo) if arity_lo == arity_hi else f"{arity_lo} to {arity_hi}"
        raise QueryParseError(
            f"{ast.name} takes {expected} argument(s), got {len(ast.args)}"
        )
    signature = required + optional
    for position, arg in enumerate(ast.args):
        actual = type_of(arg)
        if actual != signature[position]:
            raise QueryParseError(
                f"argument {position + 1} of {ast.name} must be {signature[position]}, "
                f"got {actual}"
            )
    return result


def parse_query(text: str) -> QueryAst:
    """Parse and type-check the final non-empty line as one DSL expression."""
    line = final_nonempty_line(text)
    if not line:
        raise QueryParseError("empty query")
    ast = _Parser(_tokenize(line)).parse()
    type_of(ast)
    return ast


class _Evaluator:
    def __init__(
        self,
        graph: TextGraph,
        labels: LabelView,
        episode_seed: int,
        visit_cap: int,
    ):
        self._graph = graph
        self._labels = labels
        self._seed = episode_seed
        self._budget = [visit_cap]

    def _charge(self, amount: int) -> None:
        self._budget[0] -= amount
        if self._budget[0] < 0:
            raise QueryEvalError("result too large")

    def _check_ids(self, ids: list[int]) -> list[int]:
        self._charge(len(ids))
        for node in ids:
            if not 0 <= node < self._graph.node_count:
                raise QueryEvalError(f"invalid node id: {node}")
        return ids

    def eval(self, ast: QueryAst):
        if isinstance(ast, IntLit):
            return ast.value
        if isinstance(ast, StrLit):
            return ast.value
        if isinstance(ast, ListLit):
            return list(ast.values)
        args = [self.eval(a) for a in ast.args]
        return self._call(ast.name, args)

    def _node(self, value: int) -> int:
        if not 0 <= value < self._graph.node_count:
            raise QueryEvalError(f"invalid node id: {value}")
        return value

    def _call(self, name: str, args: list):
        graph, labels = self._graph, self._labels
        if name == "row":
            node = self._node(args[0])
            return (
                f"Node {node}: features: {graph.features[node]}; "
                f"neighbors: {format_id_list(graph.adjacency[node])}; "
                f"label: {visible_label_text(labels, node)}"
            )
        if name == "features":
            return graph.features[self._node(args[0])]
        if name == "label":
            return visible_label_text(labels, self._node(args[0]))
        if name == "neighbors":
            node = self._node(args[0])
            self._charge(len(graph.adjacency[node]))
            return list(graph.adjacency[node])
        if name == "hop":
            node = self._node(args[0])
            if args[1] < 0:
                raise QueryEvalError("hop count must be non-negative")
            try:
                return khop_with_limit(graph, node, args[1], self._budget)
            except ValueError as exc:
                raise QueryEvalError(str(exc)) from exc
        if name == "degree":
            return graph.degree(self._node(args[0]))
        if name == "features_of":
            return node_feature_lines(graph, self._check_ids(args[0]))
        if name == "labels_of":
            return node_label_lines(labels, self._check_ids(args[0]))
        if name == "count_labels":
            return self._count_labels(self._check_ids(args[0]))
        if name == "filter_label":
            ids = self._check_ids(args[0])
            return [i for i in ids if labels.visible_label(i) == args[1]]
        if name == "sample":
            ids = self._check_ids(args[0])
            n = max(args[1], 0)
            seed = args[2] if len(args) > 2 else self._seed
            rng = derive_rng("dsl-sample", seed)
            return sorted(rng.sample(ids, min(n, len(ids))))
        if name == "head":
            ids = self._check_ids(args[0])
            return ids[: max(args[1], 0)]
        if name == "size":
            return len(self._check_ids(args[0]))
        if name == "classes":
            return catalog_lines(graph)
        raise QueryEvalError(f"unknown function {name}")

    def _count_labels(self, ids: list[int]) -> str:
        counts: dict[int, int] = {}
        unknown = 0
        for node in ids:
            label = self._labels.visible_label(node)
            if label is None:
                unknown += 1
            else:
                counts[label] = counts.get(label, 0) + 1
        lines = [f"{label}: {count}" for label, count in sorted(counts.items())]
        if unknown:
            lines.append(f"None: {unknown}")
        return "\n".join(lines)


def render_value(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, list):
        return format_id_list(value)
    return str(value)


def eval_query(
    graph: TextGraph,
    labels: LabelView,
    ast: QueryAst,
    render_cap: int = DEFAULT_RENDER_CAP,
    episode_seed: int = 0,
    visit_cap: int = DEFAULT_VISIT_CAP,
) -> str:
    """Evaluate an expression and render the observation.

    Invalid node ids and exhausted cost budgets come back as error
    observations (the episode continues); they do not raise.
    """
    evaluator = _Evaluator(graph, labels, episode_seed, visit_cap)
    try:
        value = evaluator.eval(ast)
    except QueryEvalError as exc:
        return f"error: {exc}"
    return truncate_observation(render_value(value), render_cap)


# -- Episode loop -------------------------------------------------------------

_TERMINAL_RE = re.compile(r"^answer\s*:?\s*\[?\s*(\d+)\s*\]?\s*$", re.IGNORECASE)

_FORMAT_REMINDER = (
    "End your response with a single query expression on the final line, "
    'or "Answer class_id" to finish.'
)


def code_system_prompt(graph: TextGraph, node: int) -> str:
    return "\n".join(
        [
            f"Task: determine the label for node {node}.",
            DSL_GRAMMAR,
            "Available class labels:",
            catalog_lines(graph),
        ]
    )


def run_code_episode(
    backend: Backend,
    graph: TextGraph,
    labels: LabelView,
    node: int,
    max_steps: int = DEFAULT_MAX_STEPS,
    budget: TokenBudget | None = None,
    render_cap: int = DEFAULT_RENDER_CAP,
    episode_seed: int = 0,
    model_name: str = "",
    max_output_tokens: int = 1024,
) -> Episode:
    graph.check_node(node)
    budget = budget or TokenBudget(context_limit=1_000_000)

    def step(reply: str) -> StepOutcome:
        line = final_nonempty_line(reply)
        if match := _TERMINAL_RE.match(line):
            predicted = int(match.group(1))
            if not 0 <= predicted < graph.class_count:
                return reject(
                    f"error: class index {predicted} outside [0, {graph.class_count}). "
                    + _FORMAT_REMINDER
                )
            return answer(predicted, artifact=line)
        try:
            ast = parse_query(line)
        except QueryParseError as exc:
            return reject(f"error: {exc}. {_FORMAT_REMINDER}")
        observation = eval_query(
            graph, labels, ast, render_cap=render_cap, episode_seed=episode_seed
        )
        return observe(observation, artifact=line)

    return run_react_loop(
        backend,
        code_system_prompt(graph, node),
        node,
        step,
        max_steps,
        budget,
        model_name=model_name,
        max_output_tokens=max_output_tokens,
    )
