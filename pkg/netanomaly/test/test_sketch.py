import unittest

import numpy as np

from netanomaly.core.records import int_to_ip
from netanomaly.errors import ConfigError, ContractError
from netanomaly.sketch.change import change_detect, sketch_change_detect
from netanomaly.sketch.defeat import DefeatConfig, defeat_pipeline, format_hash_key, hash_key
from netanomaly.sketch.forecast import ForecastModel, forecast, forecast_path, forecast_series, sma_weights
from netanomaly.sketch.hashing import hash_family
from netanomaly.sketch.kary import KarySketch, sketch_stream
from netanomaly.synth import AnomalySpec, SynthConfig, node_of, synth_flows
from netanomaly.test.test_core import flow


def exact_f2(values) -> float:
    return float(sum(v * v for v in values))


class TestHashing(unittest.TestCase):
    def test_family_is_reproducible(self):
        a, b = hash_family(3, 64, seed=5), hash_family(3, 64, seed=5)
        self.assertEqual(a, b)
        self.assertNotEqual(a, hash_family(3, 64, seed=6))
        for h in a:
            self.assertTrue(all(0 <= h(key) < 64 for key in range(1000)))

    def test_roughly_uniform(self):
        h = hash_family(1, 16, seed=1)[0]
        counts = np.bincount([h(key) for key in range(16_000)], minlength=16)
        self.assertTrue(np.all(np.abs(counts - 1000) < 150))


class TestKarySketch(unittest.TestCase):
    def test_update(self):
        sketch = KarySketch.empty(rows=5, buckets=64, seed=0)
        sketch.update(42, 10.0)
        self.assertTrue(np.all((sketch.table == 10.0).sum(axis=1) == 1))
        sketch.update(42, -10.0)
        self.assertFalse(sketch.table.any())

    def test_row_sums(self):
        rng = np.random.default_rng(0)
        items = [(int(k), float(v)) for k, v in zip(rng.integers(0, 10 ** 6, 1000), rng.normal(size=1000))]
        sketch = sketch_stream(items, rows=5, buckets=64)
        np.testing.assert_allclose(sketch.table.sum(axis=1), sum(v for _, v in items), atol=1e-6)

    def test_single_key_exact(self):
        sketch = sketch_stream([(7, 4.0), (7, 6.0)], rows=3, buckets=4)
        self.assertAlmostEqual(sketch.estimate(7), 10.0)
        self.assertAlmostEqual(sketch.estimate_f2(), 100.0)
        empty = KarySketch.empty(rows=3, buckets=4)
        self.assertEqual(empty.estimate(7), 0.0)
        self.assertEqual(empty.estimate_f2(), 0.0)

    def test_accuracy(self):
        rng = np.random.default_rng(1)
        keys = [int(k) for k in rng.choice(10 ** 9, size=50, replace=False)]
        values = rng.uniform(100.0, 200.0, size=50)
        total = float(values.sum())
        relative_f2 = []
        for seed in range(50):
            sketch = sketch_stream(zip(keys, values), rows=5, buckets=64, seed=seed)
            errors = np.array([abs(sketch.estimate(k) - v) for k, v in zip(keys, values)])
            # collision noise scales with the stream, not with the individual key
            self.assertGreaterEqual(np.mean(errors <= 0.1 * total), 0.9)
            relative_f2.append(abs(sketch.estimate_f2() - exact_f2(values)) / exact_f2(values))
        self.assertLessEqual(float(np.median(relative_f2)), 0.15)

    def test_unbiased_rows(self):
        rng = np.random.default_rng(2)
        keys = [int(k) for k in rng.choice(10 ** 9, size=50, replace=False)]
        values = rng.uniform(100.0, 200.0, size=50)
        estimates, f2 = [], []
        for seed in range(200):
            sketch = sketch_stream(zip(keys, values), rows=1, buckets=64, seed=seed)
            estimates.append(sketch.estimate(keys[0]))
            f2.append(sketch.estimate_f2())
        for samples, truth in [(estimates, values[0]), (f2, exact_f2(values))]:
            samples = np.array(samples)
            standard_error = samples.std(ddof=1) / np.sqrt(samples.size)
            self.assertLessEqual(abs(samples.mean() - truth), 3 * standard_error)

    def test_combine(self):
        a = sketch_stream([(1, 5.0)], seed=3)
        b = sketch_stream([(1, 2.0), (2, 1.0)], seed=3)
        self.assertAlmostEqual((a - b).total(), 2.0)
        self.assertAlmostEqual((a + b).total(), 8.0)
        with self.assertRaises(ContractError):
            a - sketch_stream([(1, 1.0)], seed=4)


class TestForecast(unittest.TestCase):
    def test_hand_values(self):
        self.assertEqual(forecast_series(ForecastModel('MA', window=2), [2.0, 4.0]), 3.0)
        self.assertEqual(forecast_series(ForecastModel('EWMA', alpha=0.5), [4.0]), 4.0)
        self.assertEqual(forecast_series(ForecastModel('EWMA', alpha=0.5), [4.0, 0.0]), 2.0)
        self.assertEqual(forecast_series(ForecastModel('ARIMA0', ar=(1.0,)), [1.0, 5.0]), 5.0)
        self.assertEqual(forecast_series(ForecastModel('ARIMA1', ar=(1.0,)), [1.0, 3.0, 5.0]), 7.0)

    def test_nshw_tracks_ramp(self):
        ramp = np.arange(20, dtype=float)
        path = forecast_path(ForecastModel('NSHW', alpha=0.5, beta=0.5), ramp)
        np.testing.assert_allclose(path[1:], np.arange(1, 21))
        self.assertTrue(np.isnan(path[0]))

    def test_sma_weights(self):
        np.testing.assert_allclose(sma_weights(1), [1.0])
        weights = sma_weights(6)
        np.testing.assert_allclose(weights[:3], 1.0)
        self.assertAlmostEqual(weights[-1], 1 / 3)
        self.assertEqual(forecast_series(ForecastModel('SMA', window=3), [3.0, 3.0, 3.0]), 3.0)

    def test_warmup(self):
        with self.assertRaises(ContractError) as cm:
            forecast_series(ForecastModel('MA', window=3), [1.0, 2.0])
        self.assertIn('at least 3', str(cm.exception))
        with self.assertRaises(ContractError):
            ForecastModel('EWMA', alpha=1.5)

    def test_bucketwise(self):
        hashes = hash_family(2, 8, seed=0)
        history = [KarySketch(hashes), KarySketch(hashes)]
        history[0].update(3, 2.0)
        history[1].update(3, 4.0)
        predicted = forecast(ForecastModel('MA', window=2), history)
        self.assertAlmostEqual(predicted.estimate(3), 3.0)
        with self.assertRaises(ContractError):
            forecast(ForecastModel('MA', window=2), [history[0], KarySketch(hash_family(2, 8, seed=1))])


class TestChangeDetection(unittest.TestCase):
    def test_change_detect(self):
        hashes = hash_family(5, 256, seed=0)
        observed, forecasted = KarySketch(hashes), KarySketch(hashes)
        for key in range(100):
            observed.update(key, 10.0)
            forecasted.update(key, 10.0)
        observed.update(5, 1000.0)
        result = change_detect(observed, forecasted, 0.5, keys=range(100))
        self.assertEqual([key for key, _ in result.alarmed], [5])
        self.assertAlmostEqual(result.alarmed[0][1], 1000.0)
        with self.assertRaises(ContractError):
            change_detect(observed, forecasted, 0.0)

    def test_surge_in_trace(self):
        target = '10.3.0.7'
        records = [
            flow(300.0 * i + j, dip=f'10.1.0.{j + 1}', size=1000)
            for i in range(10) for j in range(20)
        ]
        records += [flow(300.0 * 8 + 100, dip=target, packets=50, size=1000)]
        records.sort(key=lambda r: r.t)
        alarms = sketch_change_detect(records, ForecastModel('EWMA', alpha=0.5), 0.1, format_key=int_to_ip)
        self.assertEqual(alarms[0].t_index, 8)
        self.assertEqual([a.keys for a in alarms if a.t_index == 8], [(target,)])
        self.assertEqual(alarms[0].detector, 'sketch-ewma')


class TestDefeat(unittest.TestCase):
    def test_hash_key(self):
        record = flow(0.0, sip='10.1.2.3', dip='192.168.7.1')
        self.assertEqual(format_hash_key(hash_key(record)), '10.1.0.0/21>192.168.0.0/21')

    def test_config(self):
        for kwargs in [dict(m=2, l=3), dict(s=1), dict(features=('bytes',))]:
            with self.subTest(**kwargs):
                with self.assertRaises(ConfigError):
                    DefeatConfig(**kwargs)

    def test_portscan_votes(self):
        config = SynthConfig(bins=48, nodes=4, hosts_per_node=20, flows_per_bin=300)
        records, truth = synth_flows(config, [AnomalySpec('portscan', start=30, duration=4)], seed=3)
        routers: dict[int, list] = {}
        for r in records:
            routers.setdefault(node_of(r.sip), []).append(r)
        result = defeat_pipeline(routers, DefeatConfig(training_bins=24, seed=1))
        alarmed = {a.t_index: a for a in result.alarms}
        self.assertIn(30, alarmed)
        scan = flow(0.0, sip=truth[0].keys['sip'], dip=truth[0].keys['dip'])
        self.assertIn(format_hash_key(hash_key(scan)), alarmed[30].keys)
        self.assertEqual(result.votes.shape, (48, 4))
        self.assertTrue(np.all(result.votes.sum(axis=1)[list(alarmed)] >= 3))
