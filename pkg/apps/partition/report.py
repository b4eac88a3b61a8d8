"""
Regret against a partition comparator.

For a partition P = {F_1..F_k} drawn from Q with a comparator u_j per cell,

    sum_t <w_t, g_t> - sum_j sum_{t: I_t in F_j} <u_j, g_t>
        = sum_{F not in P} R~_F(0) + sum_j R~_{F_j}(u_j)

where R~_F is the linearized regret of F's own stack over the rounds it
played. The report carries both sides so the identity can be checked.
"""
import csv
from dataclasses import dataclass, field

import numpy as np

from apps.core.exceptions import InvalidPartition


@dataclass(frozen=True)
class CellRegret:
    label: str
    size: int
    rounds: int
    u_norm: float
    regret: float
    stack_regret: float

    def as_row(self):
        return {
            'cell': self.label,
            'size': self.size,
            'rounds': self.rounds,
            'u_norm': repr(self.u_norm),
            'regret': repr(self.regret),
            'stack_regret': repr(self.stack_regret),
        }


@dataclass
class PartitionReport:
    cells: list
    total: float
    off_partition: dict = field(default_factory=dict)

    @property
    def decomposed_total(self):
        return sum(self.off_partition.values()) + sum(c.stack_regret for c in self.cells)

    @property
    def residual(self):
        return abs(self.total - self.decomposed_total)


def validate_partition(collection, cells, active_nodes):
    """Cells must be disjoint members of Q covering every node that was ever active"""
    if len(set(cells)) != len(cells):
        raise InvalidPartition(f'cells repeat a subgraph: {cells}')
    seen = set()
    for index in cells:
        if not 0 <= index < len(collection):
            raise InvalidPartition(f'cell {index} is not a subgraph of the collection')
        members = collection[index].node_subset
        if seen & members:
            raise InvalidPartition(f'cell {collection[index].label} overlaps earlier cells on {sorted(seen & members)}')
        seen |= members
    missed = sorted({int(n) for n in active_nodes} - seen)
    if missed:
        raise InvalidPartition(f'active nodes {missed} lie in no cell')


def partition_regret_report(ledger, collection, cells, comparators):
    """
    `cells` are indices into the collection, `comparators` one vector per
    cell. The ledger must have been recorded with the collection's
    subgraphs as domains.
    """
    cells = list(cells)
    if len(comparators) != len(cells):
        raise InvalidPartition(f'{len(cells)} cells but {len(comparators)} comparators')
    validate_partition(collection, cells, np.unique(ledger.nodes))

    rows = []
    for index, u in zip(cells, comparators):
        subgraph = collection[index]
        u = np.asarray(u, dtype=np.float64)
        rows.append(CellRegret(
            label=subgraph.label,
            size=len(subgraph),
            rounds=int(ledger.domain_rounds[index]),
            u_norm=float(np.linalg.norm(u)),
            regret=ledger.cell_regret(subgraph.members, u),
            stack_regret=ledger.domain_regret(index, u),
        ))
    off = {
        collection[i].label: ledger.domain_regret(i, np.zeros(ledger.dim))
        for i in range(len(collection)) if i not in cells
    }
    return PartitionReport(cells=rows, total=float(sum(r.regret for r in rows)), off_partition=off)


def default_cells(collection, active_nodes):
    """
    Cluster subgraphs when they partition the active nodes, else the full
    graph when Q holds it; None when neither applies.
    """
    clusters = [i for i, label in enumerate(collection.labels) if label.startswith('cluster')]
    for candidate in (clusters, [i for i, s in enumerate(collection) if len(s) == collection.graph.num_nodes]):
        if not candidate:
            continue
        try:
            validate_partition(collection, candidate, active_nodes)
        except InvalidPartition:
            continue
        return candidate
    return None


CELL_COLUMNS = ('comparator', 'cell', 'size', 'rounds', 'u_norm', 'regret', 'stack_regret')


def write_cells_csv(path, reports):
    """`reports` maps comparator names to their `PartitionReport`"""
    with open(path, 'w', encoding='utf-8', newline='') as handle:
        writer = csv.DictWriter(handle, fieldnames=CELL_COLUMNS, lineterminator='\n')
        writer.writeheader()
        for name, report in reports.items():
            for cell in report.cells:
                writer.writerow({'comparator': name, **cell.as_row()})
