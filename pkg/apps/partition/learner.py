"""
Iterate addition over a subgraph collection: one stack per subgraph, the
active node plays the sum of the stacks that contain it.
"""
import logging
from dataclasses import dataclass, field

import numpy as np

from apps.core.exceptions import OrphanNode, ProtocolViolation

logger = logging.getLogger(__name__)


@dataclass
class PartitionPrediction:
    w: np.ndarray
    v: float
    parts: list = field(default_factory=list)

    @property
    def domains(self):
        """(subgraph index, w_F) pairs, the ledger's per-domain input"""
        return [(index, prediction.w) for index, prediction in self.parts]


class PartitionLearner:
    """
    `simulator` must forward over exactly the collection's subgraphs so
    its knowledge list lines up with the stacks. `stack_factory(knowledge,
    subgraph)` builds each stack.
    """

    def __init__(self, collection, simulator, stack_factory, dim):
        if [d.label for d in simulator.domains] != collection.labels:
            raise ProtocolViolation('forwarding domains do not match the subgraph collection')
        self.collection = collection
        self.simulator = simulator
        self.dim = dim
        self.stacks = [stack_factory(knowledge, subgraph)
                       for knowledge, subgraph in zip(simulator.knowledge, collection)]
        self._pending = None

    def predict(self, t, node):
        indices = self.collection.containing(node)
        if not indices:
            raise OrphanNode(f'node {node} lies in no subgraph of the collection')
        if self._pending is not None:
            raise ProtocolViolation(f'round {t} predicted before round {self._pending.t} was fed back')
        parts = [(i, self.stacks[i].predict(node, t)) for i in indices]
        w = np.zeros(self.dim)
        for _, prediction in parts:
            w += prediction.w
        result = PartitionPrediction(w=w, v=float(sum(p.v for _, p in parts)), parts=parts)
        self._pending = _Pending(t, node, tuple(indices))
        return result

    def update(self, step, g_hat):
        """
        Feed round `step.t`'s decoded gradient to every stack that played;
        returns the summed scale feedback.
        """
        pending, self._pending = self._pending, None
        if pending is None or pending.t != step.t:
            raise ProtocolViolation(f'feedback for round {step.t} without a matching prediction')
        if tuple(sorted(step.positions)) != tuple(sorted(pending.indices)):
            raise ProtocolViolation(f'round {step.t} registered with {sorted(step.positions)}, '
                                    f'predicted by {list(pending.indices)}')
        return float(sum(self.stacks[i].update(step.positions[i], g_hat) for i in pending.indices))

    def potentials(self):
        return {stack.label: stack.potential() for stack in self.stacks}


@dataclass(frozen=True)
class _Pending:
    t: int
    node: int
    indices: tuple


def partition_predict(learner, t, node):
    """w_t = sum over subgraphs F containing the node of w_t^F"""
    return learner.predict(t, node)
