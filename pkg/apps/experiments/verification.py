"""
Invariant suites checked on freshly generated traces.

Each check reports its worst slack: how far the tightest instance sits
inside its bound (negative when violated).
"""
import logging
import math
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from apps.core.seeding import VERIFY_STREAM, derive_rng
from apps.encoding.coders import decode, repetition_distribution, sample_ball
from apps.learners.inequalities import SLACK, concavity_check, prod_generalization_gap
from apps.learners.integrals import gaussian_moments, quadrature_moments, relative_gap
from apps.learners.scale import ScaleLearner, integration_limit
from apps.learners.stack import COMPARATOR_ADAPTIVE
from apps.metrics.bounds import decoded_lag_holds, scale_learner_bound
from apps.metrics.export import file_sha256, load_trace_csv
from apps.metrics.lag import approximate_lag_ceiling, lag, lag_ceiling
from apps.metrics.ledger import regret_curve
from apps.partition.report import default_cells, partition_regret_report
from apps.transport.knowledge import NodeKnowledge
from apps.transport.records import hex_to_bits

logger = logging.getLogger(__name__)

CLOSED_FORM_TOLERANCE = 1e-6


@dataclass
class InvariantResult:
    name: str
    passed: bool
    worst_slack: float
    checked: int
    detail: str = ''

    def as_dict(self):
        slack = self.worst_slack
        return {
            'name': self.name,
            'passed': self.passed,
            'worst_slack': None if slack is None or not math.isfinite(slack) else slack,
            'checked': self.checked,
            'detail': self.detail,
        }


def invariant(name, slacks, detail=''):
    """Pass when every slack is non-negative; vacuous when there is none"""
    slacks = np.asarray(list(slacks), dtype=np.float64)
    if not len(slacks):
        return InvariantResult(name, True, None, 0, detail or 'vacuous')
    worst = float(slacks.min())
    return InvariantResult(name, worst >= 0, worst, len(slacks), detail)


@dataclass
class VerificationReport:
    results: list

    @property
    def passed(self):
        return all(r.passed for r in self.results)

    @property
    def failures(self):
        return [r for r in self.results if not r.passed]

    def as_dict(self):
        return {'passed': self.passed, 'invariants': [r.as_dict() for r in self.results]}


def _relative(bound, value, tolerance):
    return bound - value + tolerance * max(1.0, abs(bound))


def scalar_streams(plan, seed, traces, rounds):
    """
    Scalar feedback streams for the scale learner alone. Stream 0 is the
    constant +G_hat stream at one node, the first to break when the
    integration limit is too wide; the rest are random with truth within
    eps of the feedback.
    """
    graph = plan.graph
    G_hat, eps = plan.grad_hat, plan.eps
    for k in range(traces):
        if k == 0:
            feedback = np.full(rounds, G_hat)
            yield np.zeros(rounds, dtype=np.int64), feedback, feedback.copy()
            continue
        rng = derive_rng(seed, VERIFY_STREAM, k)
        activations = rng.integers(graph.num_nodes, size=rounds)
        truth = rng.uniform(-G_hat, G_hat, size=rounds)
        noise = eps * rng.choice([-1.0, 1.0], size=rounds) * np.where(rng.random(rounds) < 0.5, 1.0, rng.random(rounds))
        feedback = np.clip(truth + noise, -G_hat, G_hat)
        yield activations, feedback, truth


def scalar_suite(plan, seed):
    """Null comparator, per-round potential decrease and the explicit regret ceiling"""
    options = plan.config['verify']
    tolerance = options['tolerance']
    rounds = min(plan.T, options['scalar_rounds'])
    nu = plan.collection.nu
    D = plan.graph.diameter
    a_multiplier = plan.config['learner']['a_multiplier']
    null, decrease, ceiling = [], [], []

    for activations, feedback, truth in scalar_streams(plan, seed, options['scalar_traces'], rounds):
        knowledge = NodeKnowledge(plan.graph)
        learner = ScaleLearner(knowledge, nu, plan.eps, plan.grad_hat, D, a_multiplier, cross_check=False)
        gains = []
        previous = learner.potential()
        v = np.zeros(rounds)
        for t, node in enumerate(activations, start=1):
            v[t - 1] = learner.predict(knowledge.view(int(node), t))
            learner.update(knowledge.register(t, int(node)), float(feedback[t - 1]))
            current = learner.potential()
            decrease.append(_relative(previous - v[t - 1] * truth[t - 1], current, tolerance))
            previous = current
            gains.append(v[t - 1] * truth[t - 1])
        null.append(_relative(nu, float(np.sum(gains)), tolerance))

        lag_h = _scalar_lag(plan.graph, activations, truth)
        for comparator in plan.comparators:
            u = comparator.norm
            bound = scale_learner_bound(u, nu, plan.eps, plan.grad_hat, D, rounds, lag_h)
            ceiling.append(_relative(bound, float((v - u) @ truth), tolerance))

    return [
        invariant('scale.null_comparator', null),
        invariant('scale.potential_decrease', decrease),
        invariant('scale.regret_ceiling', ceiling),
    ]


def _scalar_lag(graph, activations, values):
    knowledge = NodeKnowledge(graph)
    gammas = [knowledge.missing_at_issue(knowledge.register(t, int(node))) for t, node in enumerate(activations, start=1)]
    return lag(values, gammas)


# counters of the whole-run verify streams; scalar traces use 1..traces
CLOSED_FORM_COUNTER = 1_000_001
INEQUALITY_COUNTER = 1_000_002
ENCODER_COUNTER = 1_000_003


def closed_form_suite(plan, seed):
    """Closed-form moments against adaptive quadrature on reachable (L, V) states"""
    count = plan.config['verify']['closed_form_states']
    rng = derive_rng(seed, VERIFY_STREAM, CLOSED_FORM_COUNTER)
    D = plan.graph.diameter
    a = integration_limit(plan.grad_hat, plan.eps, D, plan.config['learner']['a_multiplier'])
    horizon = max(1, min(plan.T, plan.config['verify']['scalar_rounds']))
    gaps = []
    for _ in range(count):
        shifted = rng.uniform(-plan.grad_hat, plan.grad_hat, size=int(rng.integers(1, horizon + 1))) + plan.eps
        squares = float(shifted @ shifted)
        L = float(shifted.sum())
        V = 1.0 + squares * (1.0 + 2.0 * D * float(rng.random()))
        closed = gaussian_moments(L, V, a)
        quad = quadrature_moments(L, V, a)
        gaps.append(CLOSED_FORM_TOLERANCE - max(relative_gap(closed[0], quad[0]), relative_gap(closed[1], quad[1])))
    return [invariant('scale.closed_form', gaps)]


def inequality_suite(plan, seed):
    count = plan.config['verify']['prod_tuples']
    rng = derive_rng(seed, VERIFY_STREAM, INEQUALITY_COUNTER)
    prod = []
    for _ in range(count):
        tau = int(rng.integers(1, 9))
        radius = 1.0 / (20.0 * (1 + tau))
        x = float(rng.uniform(-radius, radius))
        ys = rng.uniform(-radius, radius, size=tau)
        weights = rng.uniform(0, 1 / 20, size=tau)
        gap = prod_generalization_gap(x, ys, weights)
        prod.append(gap + SLACK * max(1.0, abs(gap)))
    concave = []
    for tau in range(1, 9):
        ys = rng.uniform(-1, 1, size=tau) / (10 * tau)
        concave.append(-concavity_check(ys))
    return [invariant('inequality.prod_generalization', prod), invariant('inequality.concavity', concave)]


def encoder_suite(plan, results):
    spec = plan.encoder
    if spec.is_deterministic:
        slacks = []
        for result in results:
            if len(result.ledger):
                errors = np.linalg.norm(result.ledger.g_hat - result.ledger.g, axis=1)
                slacks.append(spec.error_bound * (1 + 1e-12) - float(errors.max()))
        return [invariant('encoding.error_bound', slacks)]
    rng = derive_rng(plan.config['master_seed'], VERIFY_STREAM, ENCODER_COUNTER)
    slacks = []
    for x in sample_ball(rng, spec.dim, spec.grad_bound, 64):
        mean = sum(p * vector for p, vector in repetition_distribution(x, spec))
        slacks.append(1e-12 * spec.dim * spec.grad_bound - float(np.abs(mean - x).max()))
    return [invariant('encoding.unbiased', slacks)]


def _decomposition_gap(ledger, directions, comparator):
    """|R~(u) - [sum (v_t - |u|) h_t + |u| sum <z_t - u/|u|, g_t>]| for a single stack"""
    u, norm = comparator.vector, comparator.norm
    lhs = ledger.linearized_regret(u)
    h = np.einsum('td,td->t', directions, ledger.g)
    rhs = float(h @ (ledger.v - norm))
    if norm > 0:
        rhs += norm * float(np.einsum('td,td->', directions - u / norm, ledger.g))
    return lhs, abs(lhs - rhs)


def stack_suite(plan, results):
    tolerance = plan.config['verify']['tolerance']
    adaptive = plan.config['learner']['kind'] == COMPARATOR_ADAPTIVE
    single = len(plan.collection) == 1
    deterministic = plan.encoder.is_deterministic
    G, D = plan.config['grad_bound'], plan.graph.diameter
    decomposition, null, ceiling, approximate, bits = [], [], [], [], []

    for result in results:
        ledger = result.ledger
        T = len(ledger)
        if adaptive and single and T:
            for comparator in plan.comparators:
                lhs, gap = _decomposition_gap(ledger, result.directions.view(), comparator)
                decomposition.append(tolerance * max(1.0, abs(lhs)) - gap)
        if adaptive and deterministic:
            for i in range(len(plan.collection)):
                null.append(_relative(plan.collection.nu, ledger.domain_regret(i, np.zeros(plan.dim)), tolerance))
        ceiling.append(_relative(lag_ceiling(G, D, T), result.lag.true_lag, tolerance))
        if deterministic and plan.eps <= G:
            bound = approximate_lag_ceiling(result.lag.true_lag, plan.eps, G, max(D, 1), T)
            holds = decoded_lag_holds(result.lag.true_lag, result.lag.decoded_lag, plan.eps, G, D, T)
            approximate.append(max(bound - result.lag.decoded_lag, 0.0) if holds else bound - result.lag.decoded_lag)
        worst = max((r.max_sends for r in result.simulator.ledger.rounds), default=0) * plan.encoder.payload_bits
        bits.append(plan.config['bit_budget'] - worst)

    return [
        invariant('stack.regret_decomposition', decomposition,
                  '' if single else 'partition runs check the iterate-addition identity instead'),
        invariant('stack.null_comparator', null,
                  '' if deterministic else 'stochastic coding bounds hold in expectation'),
        invariant('lag.ceiling', ceiling),
        invariant('lag.approximate_gradients', approximate,
                  '' if approximate else 'needs deterministic coding with eps <= G'),
        invariant('transport.bit_budget', bits),
    ]


def partition_suite(plan, results):
    tolerance = plan.config['verify']['tolerance']
    identity = []
    for result in results:
        active = np.unique(result.ledger.nodes)
        cells = plan.cells if plan.cells is not None else default_cells(plan.collection, active)
        if cells is None or not len(active):
            continue
        for comparator in plan.comparators:
            report = partition_regret_report(result.ledger, plan.collection, cells, [comparator.vector] * len(cells))
            identity.append(tolerance * max(1.0, abs(report.total)) - report.residual)
    return [invariant('partition.iterate_addition', identity)]


def export_suite(plan, results, out_dir):
    """
    Bit-exact regret from the written traces, payloads that decode to the
    gradients the learners saw, and byte-identical reruns of the first seed.
    """
    out_dir = Path(out_dir)
    exact = []
    decoded = []
    for result in results:
        data = load_trace_csv(out_dir / f'trace_seed{result.seed}.csv')
        for payload, g_hat in zip(data['payload'], result.ledger.g_hat):
            decoded.append(0.0 if np.array_equal(decode(hex_to_bits(payload), plan.encoder), g_hat) else -1.0)
        for comparator in plan.comparators:
            recomputed = regret_curve(data['w'], data['g'], comparator.vector)
            same = (np.array_equal(recomputed, result.ledger.regret_curve(comparator.vector))
                    and np.array_equal(recomputed, data[f'regret_{comparator.name}']))
            exact.append(0.0 if same else -1.0)

    rerun = []
    if results:
        from .runner import execute_seed

        first = results[0]
        name = f'trace_seed{first.seed}.csv'
        with tempfile.TemporaryDirectory() as scratch:
            execute_seed(plan, first.seed, scratch)
            rerun.append(0.0 if file_sha256(Path(scratch) / name) == file_sha256(out_dir / name) else -1.0)
    return [
        invariant('export.bit_exact_regret', exact),
        invariant('export.payload_decode', decoded),
        invariant('export.deterministic_rerun', rerun),
    ]


def verify_runs(plan, results, out_dir):
    """Every invariant suite over `results` (already written to `out_dir`)"""
    seed = plan.config['master_seed']
    checks = []
    checks += scalar_suite(plan, seed)
    checks += closed_form_suite(plan, seed)
    checks += inequality_suite(plan, seed)
    checks += encoder_suite(plan, results)
    checks += stack_suite(plan, results)
    checks += partition_suite(plan, results)
    checks += export_suite(plan, results, out_dir)
    report = VerificationReport(checks)
    for failure in report.failures:
        logger.warning('invariant %s failed: worst slack %s', failure.name, failure.worst_slack)
    logger.info('verification %s: %d invariants, %d failed', 'passed' if report.passed else 'FAILED',
                len(checks), len(report.failures))
    return report
