import numpy as np
from django.test import SimpleTestCase

from apps.core.exceptions import ConfigurationError, ProtocolViolation
from apps.metrics.ledger import RunLedger, comparators_from_config


def random_ledger(rng, T=50, dim=3, num_nodes=4):
    ledger = RunLedger(dim, num_nodes, num_domains=2)
    for t in range(1, T + 1):
        node = int(rng.integers(num_nodes))
        w_a, w_b = rng.normal(size=dim), rng.normal(size=dim)
        g = rng.normal(size=dim)
        domains = [(0, w_a)] + ([(1, w_b)] if node < 2 else [])
        w = w_a + (w_b if node < 2 else 0)
        ledger.record(t, node, w, g, g, domains=domains)
    return ledger


class RunLedgerTests(SimpleTestCase):

    def test_oracle_replay_has_zero_regret(self):
        ledger = RunLedger(2, 1)
        w = np.array([0.5, -1.0])
        for t in range(1, 6):
            ledger.record(t, 0, w, np.array([t, 1.0]), np.array([t, 1.0]))
        self.assertAlmostEqual(ledger.regret(w), 0.0, places=12)

    def test_true_and_linearized_regret_coincide_for_linear_losses(self):
        ledger = random_ledger(np.random.default_rng(0))
        u = np.array([1.0, -2.0, 0.5])
        self.assertAlmostEqual(ledger.regret(u), ledger.linearized_regret(u), delta=1e-9)
        self.assertAlmostEqual(ledger.regret_curve(u)[-1], ledger.linearized_regret(u), delta=1e-9)

    def test_cell_regrets_add_up(self):
        ledger = random_ledger(np.random.default_rng(1))
        u = np.array([0.2, 0.0, -0.1])
        total = ledger.cell_regret([0, 1], u) + ledger.cell_regret([2, 3], u)
        self.assertAlmostEqual(total, ledger.linearized_regret(u), delta=1e-9)

    def test_domain_sums(self):
        ledger = random_ledger(np.random.default_rng(2))
        self.assertEqual(ledger.domain_rounds[0], len(ledger))
        zero = np.zeros(3)
        self.assertAlmostEqual(ledger.domain_regret(0, zero) + ledger.domain_regret(1, zero),
                               ledger.linearized_regret(zero), delta=1e-9)

    def test_rows_are_ordered(self):
        ledger = RunLedger(1, 1)
        ledger.record(2, 0, [0.0], [1.0], [1.0])
        with self.assertRaises(ProtocolViolation):
            ledger.record(2, 0, [0.0], [1.0], [1.0])

    def test_empty_ledger(self):
        ledger = RunLedger(2, 3)
        self.assertEqual(ledger.regret(np.ones(2)), 0.0)
        self.assertEqual(ledger.linearized_regret(np.ones(2)), 0.0)


class ComparatorConfigTests(SimpleTestCase):

    def test_forms(self):
        comparators = comparators_from_config(
            [[1.0, 0.0], {'name': 'far', 'norm': 10, 'direction': [0, 2]}, {'vector': [0.1, 0.1]}], 2)
        self.assertEqual([c.name for c in comparators], ['u0', 'far', 'u2'])
        np.testing.assert_allclose(comparators[1].vector, [0.0, 10.0])
        self.assertAlmostEqual(comparators[1].norm, 10.0)

    def test_wrong_dimension(self):
        with self.assertRaises(ConfigurationError):
            comparators_from_config([[1.0, 0.0, 0.0]], 2)
