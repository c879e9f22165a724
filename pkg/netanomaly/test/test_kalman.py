import io
import unittest

import numpy as np

from netanomaly.errors import ContractError
from netanomaly.kalman.detectors import METHODS, DetectorParams, cusum_statistic, detect, glr_statistic
from netanomaly.kalman.filter import StateSpaceModel, kalman_filter, simulate
from netanomaly.kalman.roc import benchmark_aucs, mean_shift_benchmark, roc_curve


class TestFilter(unittest.TestCase):
    def test_scalar_step(self):
        trace = kalman_filter(StateSpaceModel.scalar(), np.array([[1.0]]), x0=np.zeros(1), P0=np.eye(1))
        self.assertAlmostEqual(float(trace.P_pred[0, 0, 0]), 2.0)
        self.assertAlmostEqual(float(trace.K[0, 0, 0]), 2 / 3)
        self.assertAlmostEqual(float(trace.P_filt[0, 0, 0]), 2 / 3)
        self.assertAlmostEqual(float(trace.x_filt[0, 0]), 2 / 3)
        self.assertAlmostEqual(float(trace.tau_scale()[0, 0]), (2 / 3) ** 0.5)

    def test_noiseless_model(self):
        A = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
        C = np.array([[0.5, 0.1], [0.0, 0.9]])
        model = StateSpaceModel(A=A, C=C, Q=np.zeros((2, 2)), R=np.zeros((3, 3)))
        x = np.array([4.0, 2.0])
        states = []
        for _ in range(5):
            x = C @ x
            states.append(x)
        trace = kalman_filter(model, np.array(states) @ A.T, x0=np.array([4.0, 2.0]), P0=np.zeros((2, 2)))
        np.testing.assert_allclose(trace.innovation, 0.0, atol=1e-12)
        np.testing.assert_allclose(trace.x_filt, states, atol=1e-12)

    def test_innovations_are_white(self):
        model = StateSpaceModel.scalar(C=0.9, Q=1.0, R=1.0)
        _, observations = simulate(model, 10_000, x0=np.zeros(1), rng=np.random.default_rng(0))
        trace = kalman_filter(model, observations, x0=np.zeros(1), P0=np.eye(1))
        innovation = trace.innovation[100:, 0]
        rho = np.corrcoef(innovation[:-1], innovation[1:])[0, 1]
        self.assertLess(abs(rho), 0.1)

    def test_covariance_stays_psd(self):
        rng = np.random.default_rng(1)
        A = (rng.random((4, 3)) < 0.5).astype(float)
        A[0] = 1.0
        model = StateSpaceModel(A=A, C=np.eye(3), Q=0.1 * np.eye(3), R=np.eye(4))
        _, observations = simulate(model, 200, x0=np.ones(3), rng=rng)
        trace = kalman_filter(model, observations, x0=np.ones(3), P0=np.eye(3))
        for P in trace.P_filt:
            np.testing.assert_allclose(P, P.T, atol=1e-12)
            self.assertGreaterEqual(float(np.linalg.eigvalsh(P).min()), -1e-10)

    def test_contracts(self):
        with self.assertRaises(ContractError):
            StateSpaceModel(A=np.eye(2), C=np.eye(3), Q=np.eye(3), R=np.eye(2))
        with self.assertRaises(ContractError):
            StateSpaceModel.scalar(Q=-1.0)
        with self.assertRaises(ContractError):
            kalman_filter(StateSpaceModel.scalar(), np.zeros((5, 2)), x0=np.zeros(1), P0=np.eye(1))


class TestDetectors(unittest.TestCase):
    def test_zero_residuals(self):
        for method in METHODS:
            with self.subTest(method=method):
                self.assertEqual(detect(np.zeros(64), method).alarms, [])

    def test_cusum_example(self):
        params = DetectorParams(threshold=4.0, sigma=1.0, mu0=0.0, mu1=1.0)
        detection = detect(np.array([0.0, 0.0, 5.0, 5.0]), 'cusum', params)
        first = detection.alarms[0]
        self.assertEqual(first.t_index, 3)
        self.assertAlmostEqual(first.score, 4.5)
        self.assertEqual(first.keys, ('change=1',))
        self.assertEqual(detection.change_times[3], 1)

    def test_cusum_statistic(self):
        statistic, argmins = cusum_statistic(np.array([-1.0, -1.0, 3.0, -0.5]))
        np.testing.assert_allclose(statistic, [0.0, 0.0, 0.0, 3.0, 2.5])
        self.assertEqual(argmins.tolist(), [0, 1, 2, 2, 2])
        shifted, _ = cusum_statistic(np.array([-1.0, -1.0, 3.0, -0.5]) - 10.0)
        self.assertFalse(shifted.any())

    def test_glr_statistic(self):
        np.testing.assert_allclose(glr_statistic(np.array([1.0, 1.0]), window=2, sigma=1.0), [0.5, 1.0])

    def test_variance_is_scale_equivariant(self):
        rng = np.random.default_rng(2)
        tau, scale = rng.normal(size=200), rng.uniform(0.5, 1.5, size=200)
        a = detect(tau, 'variance', DetectorParams(threshold=1.5), scale=scale).alarmed
        b = detect(7.0 * tau, 'variance', DetectorParams(threshold=1.5), scale=7.0 * scale).alarmed
        np.testing.assert_array_equal(a, b)

    def test_multiscale_spike(self):
        tau = np.random.default_rng(3).normal(size=256)
        tau[100] += 20.0
        detection = detect(tau, 'multiscale', DetectorParams(scales=4))
        self.assertIn(100, [a.t_index for a in detection.alarms])
        self.assertEqual(detection.alarms[0].threshold, 2.0)

    def test_variance_shift(self):
        tau = np.random.default_rng(4).normal(size=256)
        tau[200:230] *= 5.0
        detection = detect(tau, 'var_shift', DetectorParams(window=10))
        self.assertTrue(any(200 <= a.t_index < 240 for a in detection.alarms))

    def test_errors(self):
        with self.assertRaises(ContractError):
            detect(np.zeros(8), 'median')
        with self.assertRaises(ContractError):
            DetectorParams(window=1)


class TestRoc(unittest.TestCase):
    def test_hand_values(self):
        scores, labels = [0.9, 0.8, 0.7, 0.6], [True, False, True, False]
        self.assertAlmostEqual(roc_curve(scores, labels).auc, 0.75)
        self.assertAlmostEqual(roc_curve([-s for s in scores], labels).auc, 0.25)
        self.assertAlmostEqual(roc_curve([0.9, 0.8, 0.1], [True, True, False]).auc, 1.0)
        self.assertAlmostEqual(roc_curve([1.0] * 4, labels).auc, 0.5)

    def test_random_labels(self):
        rng = np.random.default_rng(5)
        curve = roc_curve(rng.random(10_000), rng.random(10_000) < 0.3)
        self.assertAlmostEqual(curve.auc, 0.5, delta=0.02)
        self.assertTrue(np.all(np.diff(curve.fpr) >= 0))

    def test_csv(self):
        out = io.StringIO()
        roc_curve([0.9, 0.1], [True, False]).write_csv(out)
        self.assertEqual(out.getvalue(), 'fpr,tpr\n0.000000,0.000000\n0.000000,1.000000\n1.000000,1.000000\nauc=1.000000\n')

    def test_threshold_for_fpr(self):
        curve = roc_curve([0.9, 0.8, 0.7, 0.6], [True, False, True, False])
        self.assertEqual(curve.threshold_for_fpr(0.0), 0.9)
        self.assertEqual(curve.threshold_for_fpr(0.5), 0.7)
        self.assertEqual(curve.threshold_for_fpr(1.0), 0.6)
        with self.assertRaises(ContractError):
            curve.threshold_for_fpr(1.5)

    def test_degenerate_labels(self):
        with self.assertRaises(ContractError):
            roc_curve([0.1, 0.2], [True, True])

    def test_glr_beats_pointwise_test(self):
        aucs = [benchmark_aucs(mean_shift_benchmark(seed=seed)) for seed in range(5)]
        glr = np.mean([a['glr'] for a in aucs])
        variance = np.mean([a['variance'] for a in aucs])
        self.assertGreaterEqual(glr, variance)
        self.assertGreater(variance, 0.9)
