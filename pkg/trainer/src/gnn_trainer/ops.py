"""The nine per-slot layer types.

Every layer maps (num_nodes, hidden) -> (num_nodes, hidden) given the shared
graph tensors, so slots can be rewired freely. Aggregation runs per directed
edge through index_add, which is deterministic on CPU.

Some layers are deliberately lighter than their literature namesakes; the
README lists each simplification. In short: the attention layer runs a
single head, the spectral layer truncates the polynomial at order 2 with the
spectrum bound fixed at 2, and the recursive filter runs one stack for one
iteration.
"""

import torch
import torch.nn.functional as F
from torch import nn

from .space import RequestError


def neighbor_sum(x, edge_index):
    src, dst = edge_index
    out = x.new_zeros(x.shape)
    out.index_add_(0, dst, x[src])
    return out


class GcnLayer(nn.Module):
    """Self-loop-augmented symmetric-normalized convolution."""

    def __init__(self, hidden):
        super().__init__()
        self.lin = nn.Linear(hidden, hidden)

    def forward(self, x, graph):
        return torch.sparse.mm(graph.adj_norm, self.lin(x))


class GatLayer(nn.Module):
    """Single-head additive attention over incoming edges plus a self-loop."""

    def __init__(self, hidden):
        super().__init__()
        self.lin = nn.Linear(hidden, hidden, bias=False)
        bound = 1.0 / hidden ** 0.5
        self.att_src = nn.Parameter(torch.empty(hidden).uniform_(-bound, bound))
        self.att_dst = nn.Parameter(torch.empty(hidden).uniform_(-bound, bound))

    def forward(self, x, graph):
        h = self.lin(x)
        src, dst = graph.edge_index_self
        score = F.leaky_relu((h[src] * self.att_src).sum(-1) + (h[dst] * self.att_dst).sum(-1), 0.2)
        # per-target max subtraction keeps the softmax finite at any scale
        peak = x.new_full((x.shape[0],), float("-inf"))
        peak = peak.index_reduce(0, dst, score, "amax", include_self=True)
        weight = (score - peak[dst]).exp()
        denom = x.new_zeros(x.shape[0])
        denom.index_add_(0, dst, weight)
        alpha = weight / denom[dst]
        out = h.new_zeros(h.shape)
        out.index_add_(0, dst, h[src] * alpha.unsqueeze(-1))
        return out


class SageLayer(nn.Module):
    """Separate transforms for the node itself and its mean-pooled neighbors."""

    def __init__(self, hidden):
        super().__init__()
        self.lin_self = nn.Linear(hidden, hidden)
        self.lin_neigh = nn.Linear(hidden, hidden, bias=False)

    def forward(self, x, graph):
        mean = neighbor_sum(x, graph.edge_index) / graph.degree.clamp(min=1.0).unsqueeze(-1)
        return self.lin_self(x) + self.lin_neigh(mean)


class GinLayer(nn.Module):
    """Sum aggregation with a learnable self-weight, followed by a two-layer MLP."""

    def __init__(self, hidden):
        super().__init__()
        self.eps = nn.Parameter(torch.zeros(()))
        self.mlp = nn.Sequential(
            nn.Linear(hidden, hidden), nn.ReLU(), nn.Linear(hidden, hidden)
        )

    def forward(self, x, graph):
        return self.mlp((1.0 + self.eps) * x + neighbor_sum(x, graph.edge_index))


class ChebLayer(nn.Module):
    """Order-2 polynomial in the rescaled Laplacian: one term per order."""

    def __init__(self, hidden):
        super().__init__()
        self.lin0 = nn.Linear(hidden, hidden)
        self.lin1 = nn.Linear(hidden, hidden, bias=False)

    def forward(self, x, graph):
        return self.lin0(x) + self.lin1(torch.sparse.mm(graph.lap_scaled, x))


class ArmaLayer(nn.Module):
    """One recursive-filter step: propagated transform plus a root skip."""

    def __init__(self, hidden):
        super().__init__()
        self.lin_prop = nn.Linear(hidden, hidden, bias=False)
        self.lin_root = nn.Linear(hidden, hidden)

    def forward(self, x, graph):
        return torch.sparse.mm(graph.adj_noself_norm, self.lin_prop(x)) + self.lin_root(x)


class GraphConvLayer(nn.Module):
    """Sum-aggregated convolution with a separate self transform."""

    def __init__(self, hidden):
        super().__init__()
        self.lin_self = nn.Linear(hidden, hidden)
        self.lin_neigh = nn.Linear(hidden, hidden, bias=False)

    def forward(self, x, graph):
        return self.lin_self(x) + self.lin_neigh(neighbor_sum(x, graph.edge_index))


class SkipLayer(nn.Module):
    """Identity; contributes no parameters and ignores the graph."""

    def forward(self, x, graph):
        return x


class FcLayer(nn.Module):
    """Plain linear transform; ignores the graph."""

    def __init__(self, hidden):
        super().__init__()
        self.lin = nn.Linear(hidden, hidden)

    def forward(self, x, graph):
        return self.lin(x)


LAYER_BUILDERS = {
    "arma": ArmaLayer,
    "cheb": ChebLayer,
    "fc": FcLayer,
    "gat": GatLayer,
    "gcn": GcnLayer,
    "gin": GinLayer,
    "graph": GraphConvLayer,
    "sage": SageLayer,
    "skip": lambda hidden: SkipLayer(),
}


def build_layer(tag, hidden):
    try:
        builder = LAYER_BUILDERS[tag]
    except KeyError:
        raise RequestError(f"unknown operation {tag!r}")
    return builder(hidden)
