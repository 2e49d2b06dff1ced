"""Assemble a trainable model from (macro, ops).

Stage 0 is the encoded input: a linear projection into the hidden width runs
unconditionally, so every slot sees the same shape and ``skip`` can stay a
true identity. Each slot layer reads the stage its macro entry names and
produces the next stage. Stages no later layer consumes are summed into the
classifier head; stage 4 always qualifies because nothing runs after layer 3,
and stage 0 never does because every admissible pattern starts with 0.

Slot outputs pass through ReLU and dropout, except ``skip``, which forwards
its input untouched; an all-skip trunk therefore computes the identity and
owns zero parameters. Pre- and post-process blocks are linear+ReLU+dropout.
"""

import torch.nn.functional as F
from torch import nn

from .ops import build_layer
from .space import NUM_SLOTS, check_architecture


class ArchModel(nn.Module):
    def __init__(self, macro, ops, feature_dim, num_classes, hidden,
                 dropout=0.5, pre_layers=1, post_layers=1):
        super().__init__()
        self.macro, self.ops = check_architecture(macro, ops)
        self.dropout = float(dropout)
        self.encoder = nn.Linear(feature_dim, hidden)
        self.pre = nn.ModuleList(nn.Linear(hidden, hidden) for _ in range(pre_layers))
        self.trunk = nn.ModuleList(build_layer(tag, hidden) for tag in self.ops)
        self.post = nn.ModuleList(nn.Linear(hidden, hidden) for _ in range(post_layers))
        self.head = nn.Linear(hidden, num_classes)
        consumed = set(self.macro)
        self.head_stages = tuple(
            s for s in range(1, NUM_SLOTS + 1) if s not in consumed
        )

    def _block(self, x):
        return F.dropout(F.relu(x), self.dropout, self.training)

    def stage_outputs(self, features, graph):
        """All five stage tensors, in order. Stage 0 is the encoded input."""
        x = self._block(self.encoder(features))
        for lin in self.pre:
            x = self._block(lin(x))
        stages = [x]
        for slot, layer in enumerate(self.trunk):
            out = layer(stages[self.macro[slot]], graph)
            if self.ops[slot] != "skip":
                out = self._block(out)
            stages.append(out)
        return stages

    def forward(self, features, graph):
        stages = self.stage_outputs(features, graph)
        merged = stages[self.head_stages[0]]
        for s in self.head_stages[1:]:
            merged = merged + stages[s]
        for lin in self.post:
            merged = self._block(lin(merged))
        return self.head(merged)

    def trunk_parameter_count(self) -> int:
        return sum(p.numel() for p in self.trunk.parameters())
