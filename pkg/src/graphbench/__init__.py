"""graphbench: node-classification harness for LLM-graph interaction strategies.

Modes: k-hop prompting (with optional neighbor budgets), a fixed-action tool
loop, and a sandboxed query language over the node table, plus random,
majority, and label-propagation baselines. Experiments and perturbation
grids run against an OpenAI-compatible HTTP backend or fully offline
scripted policies.
"""

from .backend import ChatReply, ChatRequest, HttpBackend, Message, ScriptedBackend, ScriptedPolicy
from .baselines import Prediction, label_propagation, predict_majority, predict_random
from .episodes import Episode, Turn
from .graph import LabelView, TextGraph, edge_homophily, khop, load_graph, save_graph, stats
from .tokens import TokenBudget, count_tokens, truncate_to_fraction

__version__ = "0.1.0"

__all__ = [
    "ChatReply",
    "ChatRequest",
    "Episode",
    "HttpBackend",
    "LabelView",
    "Message",
    "Prediction",
    "ScriptedBackend",
    "ScriptedPolicy",
    "TextGraph",
    "TokenBudget",
    "Turn",
    "__version__",
    "count_tokens",
    "edge_homophily",
    "khop",
    "label_propagation",
    "load_graph",
    "predict_majority",
    "predict_random",
    "save_graph",
    "stats",
    "truncate_to_fraction",
]
