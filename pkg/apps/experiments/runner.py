"""
Seeded experiment runs: one simulation per seed, its trace and cell files,
and the run's summary and manifest.
"""
import csv
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from django.conf import settings

from apps.adversary.scenarios import attack_expected_regret, scenario_from_config
from apps.core.arrays import GrowableArray
from apps.core.exceptions import ConfigurationError, OrphanNode
from apps.encoding.coders import GradientCodec
from apps.encoding.specs import spec_for_budget
from apps.graphs.builders import graph_from_config
from apps.learners.accumulators import DelayedSum
from apps.learners.stack import make_stack, scale_tuning
from apps.metrics.bounds import bound_evaluator
from apps.metrics.export import file_sha256, staleness_profile, write_trace_csv
from apps.metrics.lag import LagTracker, lag_ceiling
from apps.metrics.ledger import RunLedger, comparators_from_config
from apps.partition.collection import collection_from_config
from apps.partition.learner import PartitionLearner
from apps.partition.report import default_cells, partition_regret_report, write_cells_csv
from apps.transport.forwarding import ForwardingSimulator
from apps.transport.records import GradientRecord

from .config import apply_override, canonical_json, config_hash

logger = logging.getLogger(__name__)

INLINE = 'inline'
CELERY = 'celery'


@dataclass
class RunPlan:
    """Everything a seed run needs that does not depend on the seed"""
    config: dict
    graph: object
    collection: object
    encoder: object
    eps: float
    grad_hat: float
    comparators: list
    cells: list = None

    @classmethod
    def from_config(cls, config):
        graph = graph_from_config(config['graph'])
        learner = config['learner']
        collection = collection_from_config(graph, {**config['collection'], 'nu_total': learner['nu_total']})
        encoder = spec_for_budget(config['encoder']['kind'], config['dim'], config['grad_bound'],
                                  config['bit_budget'], collection.diameter, config['encoder'].get('precision'))
        eps, grad_hat = scale_tuning(encoder, learner.get('eps'), learner.get('grad_bound'))
        comparators = comparators_from_config(config['comparators'], config['dim'])
        cells = config['collection'].get('cells')
        if cells is not None:
            cells = [collection.index(label) for label in cells]
        logger.debug('plan: %r, |Q|=%d, D_Q=%d, k=%d, eps=%.4g, G_hat=%.4g', graph, len(collection),
                     collection.diameter, encoder.bits_per_gradient, eps, grad_hat)
        return cls(config, graph, collection, encoder, eps, grad_hat, comparators, cells)

    @property
    def dim(self):
        return self.config['dim']

    @property
    def T(self):
        return self.config['T']

    @property
    def label(self):
        return f'{self.config["learner"]["kind"]}/{self.config["collection"]["mode"]}'

    def stack_factory(self, knowledge, subgraph):
        learner = self.config['learner']
        return make_stack(
            learner['kind'], knowledge, self.dim,
            nu=self.collection.nu,
            eps=self.eps,
            grad_bound=self.grad_hat,
            delay_bound=subgraph.diameter,
            c=learner['c'],
            a_multiplier=learner['a_multiplier'],
            learning_rate=learner.get('learning_rate'),
        )


@dataclass
class RunResult:
    seed: int
    scenario: object
    ledger: RunLedger
    simulator: ForwardingSimulator
    learner: PartitionLearner
    lag: LagTracker
    lag_cum: list = field(default_factory=list)
    payloads: list = field(default_factory=list)
    directions: GrowableArray = None
    subgraph_lags: list = field(default_factory=list)

    @property
    def trace(self):
        return self.simulator.trace


def simulate(plan, seed):
    """Play one seeded scenario through transport, encoder and learners"""
    config = plan.config
    scenario = scenario_from_config(config['scenario'], plan.graph, plan.T, plan.dim, config['grad_bound'],
                                    seed, plan.encoder)
    orphans = plan.collection.uncovered(np.unique(scenario.activations))
    if orphans:
        raise OrphanNode(f'active nodes {orphans} lie in no subgraph of the collection')
    simulator = ForwardingSimulator(plan.graph, domains=plan.collection.subgraphs,
                                    horizon=plan.collection.diameter, payload_bits=plan.encoder.payload_bits,
                                    bit_budget=config['bit_budget'])
    learner = PartitionLearner(plan.collection, simulator, plan.stack_factory, plan.dim)
    codec = GradientCodec(plan.encoder, master_seed=seed)
    result = RunResult(
        seed=seed,
        scenario=scenario,
        ledger=RunLedger(plan.dim, plan.graph.num_nodes, len(plan.collection)),
        simulator=simulator,
        learner=learner,
        lag=LagTracker(simulator.accounting),
        directions=GrowableArray((plan.dim,)),
        subgraph_lags=[DelayedSum(knowledge) for knowledge in simulator.knowledge],
    )

    for t, node, g in scenario.rounds():
        prediction = learner.predict(t, node)
        payload = codec.encode(g, t)
        g_hat = codec.decode(payload)
        record = GradientRecord(issue_time=t, origin=node, true_gradient=g, payload=payload, decoded_gradient=g_hat)
        step = simulator.step_forwarding(t, node, record)
        h_hat = learner.update(step, g_hat)
        h = float(sum(part.z @ g for _, part in prediction.parts))

        norm = float(np.linalg.norm(g))
        for index, position in step.positions.items():
            result.subgraph_lags[index].record(position, norm)
        result.lag_cum.append(result.lag.record(step.global_position, g, g_hat, h))
        result.payloads.append(record.payload_hex)
        if len(prediction.parts) == 1:
            result.directions.append(prediction.parts[0][1].z)
        result.ledger.record(t, node, prediction.w, g, g_hat, v=prediction.v, h_hat=h_hat, h=h,
                             domains=prediction.domains)
    logger.debug('seed %d: %d rounds, true lag %.6g', seed, len(scenario), result.lag.true_lag)
    return result


def cell_comparators(plan, result, cells, comparator):
    """
    Per-cell comparators: clusters of a two-cluster stream get the
    comparator's norm along their own direction, other cells share it.
    """
    directions = result.scenario.extra.get('cluster_directions')
    vectors = []
    for index in cells:
        label = plan.collection[index].label
        if directions is not None and label.startswith('cluster'):
            vectors.append(comparator.norm * directions[int(label[len('cluster'):])])
        else:
            vectors.append(comparator.vector)
    return vectors


def partition_reports(plan, result):
    active = np.unique(result.ledger.nodes)
    cells = plan.cells if plan.cells is not None else default_cells(plan.collection, active)
    if cells is None or not len(active):
        return cells, {}
    reports = {
        comparator.name: partition_regret_report(result.ledger, plan.collection, cells,
                                                 cell_comparators(plan, result, cells, comparator))
        for comparator in plan.comparators
    }
    return cells, reports


def cluster_regrets(plan, result):
    """Regret against each cluster's own comparator, for any learner on a clustered stream"""
    directions = result.scenario.extra.get('cluster_directions')
    if directions is None:
        return None
    clusters = result.scenario.extra['clusters']
    return {
        c.name: float(sum(result.ledger.cell_regret(members, c.norm * direction)
                          for members, direction in zip(clusters, directions)))
        for c in plan.comparators
    }


def cluster_best_regrets(plan, result):
    """Sum over clusters of the regret against each cluster's worst comparator in the ball"""
    clusters = result.scenario.extra.get('clusters')
    if clusters is None:
        return None
    return {
        c.name: float(sum(result.ledger.cell_best_regret(members, c.norm) for members in clusters))
        for c in plan.comparators
    }


def attack_regrets(plan, result):
    """Expected regret of both collision-attack variants given the iterates played"""
    pair = result.scenario.extra.get('pair')
    if pair is None:
        return None
    g, h = pair
    T = len(result.ledger)
    w_sum = result.ledger.w.sum(axis=0)
    table = {}
    for c in plan.comparators:
        if c.norm == 0:
            continue
        with_g, with_h = attack_expected_regret(g, h, w_sum, T, c.norm)
        table[c.name] = {'variant_g': with_g, 'variant_h': with_h,
                         'floor': T / 4 * result.scenario.extra['gap'] * c.norm}
    return table


def default_bound_keys(plan):
    deterministic = plan.encoder.is_deterministic
    if len(plan.collection) == 1:
        return ['B8', 'T3'] if deterministic else ['T5']
    return ['T6'] if deterministic else ['T7']


def bound_params(plan, result, cells):
    params = {
        'nu': plan.collection.nu,
        'eps': plan.eps,
        'grad_bound': plan.grad_hat,
        'G': plan.config['grad_bound'],
        'delay_bound': plan.collection.diameter,
        'T': len(result.ledger),
        'lag': result.lag.true_lag,
        'lag_hat': result.lag.decoded_lag,
        'lag_h': result.lag.feedback_lag,
        'dim': plan.dim,
        'bit_budget': plan.config['bit_budget'],
        'collection_size': len(plan.collection),
        'collection_diameter': plan.collection.diameter,
    }
    if cells is not None:
        params['cells'] = [
            {
                'lag': result.subgraph_lags[i].full_totals().lag,
                'diameter': plan.collection[i].diameter,
                'rounds': int(result.ledger.domain_rounds[i]),
            }
            for i in cells
        ]
    return params


def evaluate_bounds(plan, result, cells, regrets):
    keys = plan.config.get('bounds') or default_bound_keys(plan)
    params = bound_params(plan, result, cells)
    rows = []
    for key in keys:
        for comparator in plan.comparators:
            local = dict(params)
            if key in ('B8', 'T2'):
                # the stack is tuned with G_hat, which bounds the decoded gradients
                local['G'] = plan.grad_hat
            if 'cells' in local:
                local['cells'] = [{**cell, 'u_norm': comparator.norm} for cell in local['cells']]
            value = bound_evaluator(key, local, comparator.norm)
            rows.append({**value.as_dict(), 'comparator': comparator.name,
                         'holds': bool(regrets[comparator.name] <= value.value)})
    return rows


def max_bits_per_node(result, plan):
    return max((r.max_sends for r in result.simulator.ledger.rounds), default=0) * plan.encoder.payload_bits


def summarize(plan, result, out_dir):
    """Write the seed's trace (and cell) files; returns its JSON-ready summary"""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    ledger = result.ledger
    trace_name = f'trace_seed{result.seed}.csv'
    write_trace_csv(out_dir / trace_name, ledger, result.trace, plan.comparators, result.lag_cum, result.payloads)

    cells, reports = partition_reports(plan, result)
    cells_name = None
    if reports:
        cells_name = f'cells_seed{result.seed}.csv'
        write_cells_csv(out_dir / cells_name, reports)

    regrets = {c.name: ledger.regret(c.vector) for c in plan.comparators}
    summary = {
        'seed': result.seed,
        'scenario': result.scenario.descriptor(),
        'rounds': len(ledger),
        'trace': trace_name,
        'trace_sha256': file_sha256(out_dir / trace_name),
        'cells': cells_name,
        'cells_sha256': file_sha256(out_dir / cells_name) if cells_name else None,
        'regret': regrets,
        'cluster_regret': cluster_regrets(plan, result),
        'best_regret': {c.name: ledger.best_regret(c.norm) for c in plan.comparators},
        'cluster_best_regret': cluster_best_regrets(plan, result),
        'attack': attack_regrets(plan, result),
        'partition_total': {name: report.total for name, report in reports.items()},
        'stack_null_regret': {
            s.label: ledger.domain_regret(i, np.zeros(plan.dim)) for i, s in enumerate(plan.collection)
        },
        'potentials': result.learner.potentials(),
        'lag': {
            'true': result.lag.true_lag,
            'decoded': result.lag.decoded_lag,
            'feedback': result.lag.feedback_lag,
            'ceiling': lag_ceiling(plan.config['grad_bound'], plan.graph.diameter, len(ledger)),
        },
        'bits': {
            'payload': plan.encoder.payload_bits,
            'max_per_node_round': max_bits_per_node(result, plan),
            'max_in_flight': result.simulator.max_in_flight(),
        },
        'staleness_max': staleness_profile(result.trace),
        'bounds': evaluate_bounds(plan, result, cells, regrets),
    }
    return json.loads(json.dumps(summary, default=_json_default))


def _json_default(value):
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError(f'{type(value).__name__} is not JSON serializable')


def execute_seed(plan, seed, out_dir):
    result = simulate(plan, seed)
    return summarize(plan, result, out_dir), result


def run_seed(config, seed, out_dir):
    """One seed from a validated config; the unit of work for dispatch"""
    summary, _ = execute_seed(RunPlan.from_config(config), seed, out_dir)
    return summary


def write_json(path, data):
    with open(path, 'w', encoding='utf-8', newline='\n') as handle:
        json.dump(data, handle, sort_keys=True, indent=2, default=_json_default)
        handle.write('\n')


def _mean_stderr(values):
    values = np.asarray(values, dtype=np.float64)
    if not len(values):
        return None, None
    stderr = float(values.std(ddof=1) / np.sqrt(len(values))) if len(values) > 1 else 0.0
    return float(values.mean()), stderr


def aggregate(seed_summaries, key):
    names = seed_summaries[0][key].keys() if seed_summaries and seed_summaries[0].get(key) else []
    table = {}
    for name in names:
        mean, stderr = _mean_stderr([s[key][name] for s in seed_summaries])
        table[name] = {'mean': mean, 'stderr': stderr}
    return table


def dispatch_seeds(config, seeds, out_dir):
    mode = getattr(settings, 'DOCO_DISPATCH', INLINE)
    if mode == INLINE:
        return [run_seed(config, seed, out_dir) for seed in seeds]
    if mode == CELERY:
        from celery import group

        from .tasks import run_seed as run_seed_task

        job = group(run_seed_task.s(config, seed, str(out_dir)) for seed in seeds)
        return job.apply_async().get()
    raise ConfigurationError(f'DOCO_DISPATCH must be {INLINE!r} or {CELERY!r}, got {mode!r}')


def run_experiment(config, out_dir, seeds=None, verify=False):
    """
    Run every seed of `config` into `out_dir`, then write summary.json and
    manifest.json. With `verify` the seeds run in-process and every
    invariant suite is checked on their traces.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    plan = RunPlan.from_config(config)
    count = config['seeds'] if seeds is None else seeds
    seed_list = [config['master_seed'] + k for k in range(count)]
    logger.info('running %s (%s) for %d seeds into %s', config['name'], plan.label, count, out_dir)

    report = None
    if verify:
        from .verification import verify_runs

        pairs = [execute_seed(plan, seed, out_dir) for seed in seed_list]
        summaries = [summary for summary, _ in pairs]
        report = verify_runs(plan, [result for _, result in pairs], out_dir)
    else:
        summaries = dispatch_seeds(config, seed_list, out_dir)

    digest = config_hash(config)
    summary = {
        'name': config['name'],
        'learner': plan.label,
        'config_hash': digest,
        'version': settings.DOCO_VERSION,
        'seeds': seed_list,
        'encoder': plan.encoder.as_dict(),
        'tuning': {'eps': plan.eps, 'grad_hat': plan.grad_hat, 'nu': plan.collection.nu,
                   'collection_diameter': plan.collection.diameter},
        'collection': plan.collection.as_dict(),
        'runs': summaries,
        'aggregate': {
            'regret': aggregate(summaries, 'regret'),
            'cluster_regret': aggregate(summaries, 'cluster_regret'),
            'best_regret': aggregate(summaries, 'best_regret'),
            'cluster_best_regret': aggregate(summaries, 'cluster_best_regret'),
        },
    }
    if report is not None:
        summary['verification'] = report.as_dict()
        write_json(out_dir / 'verification.json', report.as_dict())
    write_json(out_dir / 'summary.json', summary)

    manifest = {
        'config': json.loads(canonical_json(config)),
        'config_hash': digest,
        'version': settings.DOCO_VERSION,
        'master_seeds': seed_list,
        'traces': {s['trace']: s['trace_sha256'] for s in summaries},
        'cells': {s['cells']: s['cells_sha256'] for s in summaries if s['cells']},
    }
    write_json(out_dir / 'manifest.json', manifest)
    logger.info('wrote %d traces, summary.json and manifest.json to %s', len(summaries), out_dir)
    return summary, report


def _slug(value):
    return json.dumps(value) if not isinstance(value, str) else value


def run_sweep(config, key, values, out_dir, seeds=None):
    """One run per swept value under `out_dir/<key>=<value>`, merged into sweep.csv"""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = []
    for value in values:
        swept = apply_override(config, key, value)
        summary, _ = run_experiment(swept, out_dir / f'{key}={_slug(value)}', seeds)
        row = {'key': key, 'value': _slug(value), 'learner': summary['learner'], 'T': swept['T'],
               'seeds': len(summary['seeds'])}
        for table in ('regret', 'cluster_regret', 'best_regret', 'cluster_best_regret'):
            for name, stats in summary['aggregate'][table].items():
                row[f'mean_{table}_{name}'] = stats['mean']
                row[f'stderr_{table}_{name}'] = stats['stderr']
        rows.append(row)

    columns = []
    for row in rows:
        columns += [name for name in row if name not in columns]
    with open(out_dir / 'sweep.csv', 'w', encoding='utf-8', newline='') as handle:
        writer = csv.DictWriter(handle, fieldnames=columns, lineterminator='\n')
        writer.writeheader()
        for row in rows:
            writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})
    logger.info('sweep over %s: %d values, table at %s', key, len(rows), out_dir / 'sweep.csv')
    return rows
