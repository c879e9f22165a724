import unittest

import numpy as np

from netanomaly.core.records import FlowRecord
from netanomaly.errors import ConfigError, ContractError, DegenerateDataError
from netanomaly.gamma import (
    GammaParams, MultiResConfig, fit_all, fit_gamma, gamma_detect, gamma_windows, mahalanobis_distance,
    split_and_aggregate,
)
from netanomaly.sketch.hashing import hash_family
from netanomaly.utils.logs import warn_once

SCANNER = 0x0B000001
DURATION = 512


def packet(t: float, sip: int, packets: int = 1) -> FlowRecord:
    return FlowRecord(t=t, sip=sip, dip=0x0A000001, sp=1024, dp=80, proto=6, packets=packets, bytes=40 * packets)


def poisson_background(sources: int = 20_000, rate: float = 0.005, seed: int = 0, start: float = 0.0) -> list[FlowRecord]:
    rng = np.random.default_rng(seed)
    counts = rng.poisson(rate * DURATION, sources)
    sips = np.repeat(0x0A000000 + np.arange(sources), counts)
    times = start + rng.uniform(0.0, DURATION, sips.size)
    return [packet(float(t), int(s)) for t, s in zip(times, sips)]


def bursts(start: float = 0.0) -> list[FlowRecord]:
    """50 packets at once every 32 seconds."""
    return [packet(start + 32.0 * k + 0.5, SCANNER, packets=50) for k in range(DURATION // 32)]


def collision_free_seed(N: int, M: int) -> int:
    for seed in range(100):
        if len({h(SCANNER) for h in hash_family(N, M, seed)}) == N:
            return seed
    raise AssertionError('no collision-free seed')


class TestGammaFit(unittest.TestCase):
    def test_moment_fit(self):
        samples = np.random.default_rng(0).gamma(shape=3.0, scale=2.0, size=100_000)
        params = fit_gamma(samples)
        self.assertAlmostEqual(float(params.alpha[0]), 3.0, delta=0.15)
        self.assertAlmostEqual(float(params.beta[0]), 2.0, delta=0.1)

    def test_fit_errors(self):
        with self.assertRaises(ContractError):
            fit_gamma(np.ones(3))
        with self.assertRaises(DegenerateDataError):
            fit_gamma(np.full(16, 2.0))
        with self.assertRaises(DegenerateDataError):
            fit_gamma(np.zeros(16))

    def test_config(self):
        for kwargs in [dict(N=0), dict(levels=0), dict(base_bin=0.0), dict(statistic='gamma')]:
            with self.subTest(**kwargs):
                with self.assertRaises(ConfigError):
                    MultiResConfig(**kwargs)
        self.assertEqual(MultiResConfig(levels=3, base_bin=0.5).level_widths(), [0.5, 1.0, 2.0])

    def test_mahalanobis(self):
        reference = np.array([[0.0, 0.0], [2.0, 2.0]])
        self.assertEqual(mahalanobis_distance(np.array([1.0, 1.0]), reference), 0.0)
        self.assertAlmostEqual(mahalanobis_distance(np.array([3.0, 3.0]), reference), 2 ** 0.5)


class TestAggregation(unittest.TestCase):
    def test_dyadic_levels(self):
        config = MultiResConfig(N=2, M=4, levels=3, base_bin=1.0)
        records = [packet(float(t), sip=t % 5) for t in range(64)]
        aggregation = split_and_aggregate(records, lambda r: r.sip, config, t0=0.0, duration=64.0)
        self.assertEqual([level.shape for level in aggregation.levels], [(2, 4, 64), (2, 4, 32), (2, 4, 16)])
        np.testing.assert_array_equal(aggregation.levels[1], aggregation.levels[0][..., 0::2] + aggregation.levels[0][..., 1::2])
        for level in aggregation.levels:
            np.testing.assert_array_equal(level.sum(axis=(1, 2)), [64, 64])
        self.assertEqual(set().union(*aggregation.keys.values()), set(range(5)))

    def test_window_too_short(self):
        config = MultiResConfig(levels=4, base_bin=1.0)
        with self.assertRaises(ContractError) as cm:
            split_and_aggregate([packet(0.0, 1)], lambda r: r.sip, config, duration=32.0)
        self.assertIn('64 seconds', str(cm.exception))


class TestGammaDetection(unittest.TestCase):
    def test_bursty_source_identified(self):
        seed = collision_free_seed(8, 64)
        config = MultiResConfig(N=8, M=64, levels=4, base_bin=1.0, lam=3.0, seed=seed)
        records = poisson_background() + bursts()
        aggregation = split_and_aggregate(records, lambda r: r.sip, config, t0=0.0, duration=DURATION)
        detection = gamma_detect(fit_all(aggregation), config, aggregation.keys)
        buckets = [h(SCANNER) for h in hash_family(8, 64, seed)]
        self.assertTrue(all((n, m) in detection.alarmed for n, m in enumerate(buckets)))
        self.assertEqual(detection.keys, {SCANNER})
        self.assertTrue(all(a.score > a.threshold for a in detection.alarms))

    def test_windows(self):
        seed = collision_free_seed(8, 64)
        config = MultiResConfig(N=8, M=64, levels=4, base_bin=1.0, lam=3.0, seed=seed)
        records = poisson_background(seed=1) + poisson_background(seed=2, start=DURATION) + bursts(start=DURATION)
        records.sort(key=lambda r: r.t)
        alarms = gamma_windows(records, lambda r: r.sip, config, window=DURATION, format_key=hex)
        identified = {(a.t_index, key) for a in alarms for key in a.keys}
        self.assertEqual(identified, {(1, hex(SCANNER))})

    def test_sparse_window_is_skipped(self):
        seed = collision_free_seed(8, 64)
        config = MultiResConfig(N=8, M=64, levels=4, base_bin=1.0, lam=3.0, seed=seed)
        sparse = [packet(DURATION + 4.0 * k + 0.5, SCANNER) for k in range(40)]
        records = ([packet(0.0, 0x0A000000)] + poisson_background(seed=3) + sparse
                   + poisson_background(seed=4, start=2 * DURATION) + bursts(start=2 * DURATION))
        records.sort(key=lambda r: r.t)
        warn_once.cache_clear()
        with self.assertLogs('netanomaly.gamma', level='WARNING') as logs:
            alarms = gamma_windows(records, lambda r: r.sip, config, window=DURATION, format_key=hex)
        self.assertTrue(any('fewer than 2 sketch outputs' in line for line in logs.output))
        self.assertFalse([a for a in alarms if a.t_index == 1])
        identified = {(a.t_index, key) for a in alarms for key in a.keys}
        self.assertEqual(identified, {(2, hex(SCANNER))})

    def test_reference_size(self):
        config = MultiResConfig(N=3, M=1)
        params = GammaParams(alpha=np.array([1.0, 2.0]), beta=np.array([1.0, 1.0]))
        with self.assertRaises(DegenerateDataError):
            gamma_detect({(0, 0): params}, config)
        detection = gamma_detect({(0, 0): params, (1, 0): params}, config)
        self.assertEqual(detection.distances, {(0, 0): 0.0, (1, 0): 0.0})
        shifted = GammaParams(alpha=np.array([2.0, 4.0]), beta=np.array([1.0, 1.0]))
        detection = gamma_detect({(0, 0): params, (1, 0): shifted}, config)
        self.assertAlmostEqual(detection.distances[(0, 0)], 2.0)
        self.assertAlmostEqual(detection.distances[(1, 0)], 4.0)
        self.assertEqual(detection.alarmed, {(1, 0)})
