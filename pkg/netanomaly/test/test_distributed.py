import unittest

import numpy as np

from netanomaly.errors import ContractError
from netanomaly.pca.distributed import (
    CoordinatorState, MessageBus, MonitorState, coordinator_step, delta_from_epsilon, monitor_step, simulate,
)
from netanomaly.pca.subspace import fit_pca, normalize_columns


def smooth_streams(steps: int = 400, n: int = 10, seed: int = 0) -> np.ndarray:
    rng = np.random.default_rng(seed)
    t = np.arange(steps)
    factors = np.stack([np.sin(2 * np.pi * t / 200), np.cos(2 * np.pi * t / 300)], axis=1)
    return 100.0 + 10.0 * factors @ rng.uniform(0.5, 1.5, size=(2, n)) + 0.1 * rng.normal(size=(steps, n))


class TestFilterWidth(unittest.TestCase):
    def test_unit_value(self):
        sigma, delta = delta_from_epsilon(1.0, m=100, n=10, epsilon=0.1)
        self.assertAlmostEqual(sigma, 0.2253, delta=0.0005)
        self.assertAlmostEqual(delta, sigma * 3 ** 0.5)

    def test_monotone_in_epsilon(self):
        widths = [delta_from_epsilon(2.0, 100, 10, eps)[1] for eps in (0.01, 0.1, 1.0)]
        self.assertEqual(widths, sorted(widths))
        with self.assertRaises(ContractError):
            delta_from_epsilon(1.0, 100, 10, 0.0)


class TestMonitors(unittest.TestCase):
    def test_monitor_filters(self):
        state = MonitorState(index=0, delta=1.0)
        sent = [monitor_step(state, v) is not None for v in (5.0, 5.5, 6.0, 6.1, 4.0)]
        self.assertEqual(sent, [True, False, False, True, True])
        self.assertEqual(state.last_sent, 4.0)
        exact = MonitorState(index=2, delta=0.0)
        self.assertTrue(all(monitor_step(exact, v) is not None for v in (5.0, 5.0, 5.0, 6.0, 6.0)))
        with self.assertRaises(ContractError):
            MonitorState(index=1, delta=-1.0)

    def test_coordinator_keeps_last_values(self):
        bus = MessageBus()
        monitors = [MonitorState(index=i, delta=0.5) for i in range(2)]
        coordinator = CoordinatorState(n=2, window_size=3)
        for row in ([1.0, 2.0], [1.2, 3.0]):
            for monitor, value in zip(monitors, row):
                if (message := monitor_step(monitor, value)) is not None:
                    bus.send(message)
            coordinator_step(coordinator, bus.drain())
        self.assertEqual(bus.sent, 3)
        np.testing.assert_array_equal(coordinator.predictions, [1.0, 3.0])
        self.assertEqual(len(coordinator.window), 2)


class TestSimulation(unittest.TestCase):
    def test_zero_width_agrees_with_exact(self):
        streams = smooth_streams(steps=150)
        streams[120, 3] += 5.0
        report = simulate(streams, 0.0, alpha=0.05, window_size=50, k=2)
        self.assertEqual(report.agreement, 1.0)
        self.assertEqual(report.message_ratio, 1.0)
        self.assertTrue(all(s.alarms == s.exact_alarm for s in report.steps))

    def test_homogeneous_filtering_saves_messages(self):
        streams = smooth_streams()
        x, _, _ = normalize_columns(streams)
        eigenvalue_mean = float(fit_pca(x).variances.mean())
        _, delta = delta_from_epsilon(eigenvalue_mean, 100, streams.shape[1], 0.05 * eigenvalue_mean)
        report = simulate(streams, delta, alpha=0.001, window_size=100, k=2)
        self.assertLess(report.message_ratio, 0.5)
        self.assertGreaterEqual(report.agreement, 0.95)

    def test_one_width_per_stream(self):
        with self.assertRaises(ContractError):
            simulate(smooth_streams(steps=10), [0.1, 0.2])
