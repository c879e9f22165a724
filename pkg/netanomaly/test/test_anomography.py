import io
import unittest

import numpy as np

from netanomaly.anomography.inference import InferenceProblem, solve_omp, solve_pseudoinverse
from netanomaly.anomography.pipeline import anomography_pipeline, mad_outliers
from netanomaly.anomography.transforms import Transform, apply_transform, fourier_highpass, spatial_operator
from netanomaly.errors import ConfigError, ContractError
from netanomaly.synth import od_pairs, ring_with_chords, routing_matrix


def ring_network(nodes: int = 10, flows: int = 50) -> tuple[np.ndarray, list[tuple[int, int]]]:
    pairs = od_pairs(nodes)[:flows]
    return routing_matrix(ring_with_chords(nodes), pairs), pairs


class TestTransforms(unittest.TestCase):
    def test_fourier_against_fft(self):
        Y = np.zeros((64, 2))
        Y[10, 0] = 1.0
        Y[:, 1] = np.random.default_rng(0).normal(size=64)
        spectrum = np.fft.fft(Y, axis=0)
        spectrum[[0, 1, 2, 62, 63]] = 0.0
        np.testing.assert_allclose(fourier_highpass(Y, 2), np.real(np.fft.ifft(spectrum, axis=0)), atol=1e-8)
        np.testing.assert_allclose(fourier_highpass(Y, None), Y, atol=1e-8)

    def test_fourier_constant(self):
        result = apply_transform(np.full((32, 3), 7.0), Transform('fourier', cutoff=1))
        np.testing.assert_allclose(result, 0.0, atol=1e-9)
        with self.assertRaises(ConfigError):
            fourier_highpass(np.zeros((8, 1)), 4)

    def test_spatial(self):
        Y = np.random.default_rng(1).normal(size=(40, 5))
        np.testing.assert_allclose(apply_transform(Y, Transform('spatial_pca', k=5)), 0.0, atol=1e-9)
        once = apply_transform(Y, Transform('spatial_pca', k=2))
        T = spatial_operator(Y, 2)
        np.testing.assert_allclose(T @ T, T, atol=1e-10)
        self.assertEqual(once.shape, Y.shape)
        np.testing.assert_allclose(once.sum(axis=0), 0.0, atol=1e-9)
        self.assertLess(float(np.sum(once ** 2)), float(np.sum((Y - Y.mean(axis=0)) ** 2)))

    def test_temporal_and_wavelet(self):
        rng = np.random.default_rng(2)
        Y = np.outer(np.sin(np.arange(64) / 10.0), rng.uniform(1, 2, size=4)) + 0.01 * rng.normal(size=(64, 4))
        self.assertLess(float(np.abs(apply_transform(Y, Transform('temporal_pca', k=1))).max()), 0.1)
        wavelet = apply_transform(Y, Transform('wavelet', cutoff=2))
        self.assertEqual(wavelet.shape, Y.shape)
        with self.assertRaises(ConfigError):
            apply_transform(Y, Transform('wavelet', cutoff=9))

    def test_arima(self):
        Y = np.outer(np.arange(10.0), [1.0, 2.0])
        errors = apply_transform(Y, Transform('arima', ar=(1.0,), d=1))
        np.testing.assert_allclose(errors[3:], 0.0, atol=1e-12)
        self.assertFalse(errors[:2].any())

    def test_config(self):
        for kwargs in [dict(kind='laplace'), dict(kind='fourier', cutoff=-1), dict(kind='arima', d=2)]:
            with self.subTest(**kwargs):
                with self.assertRaises(ConfigError):
                    Transform(**kwargs)


class TestInference(unittest.TestCase):
    def test_pseudoinverse(self):
        np.testing.assert_allclose(solve_pseudoinverse(InferenceProblem(np.eye(3), np.array([1.0, 2.0, 3.0]))),
                                   [1.0, 2.0, 3.0])
        np.testing.assert_allclose(solve_pseudoinverse(InferenceProblem(np.ones((1, 2)), np.array([2.0]))), [1.0, 1.0])

    def test_minimum_norm(self):
        rng = np.random.default_rng(3)
        A = rng.random((6, 10))
        y = rng.normal(size=6)
        x = solve_pseudoinverse(InferenceProblem(A, y))
        np.testing.assert_allclose(x, A.T @ np.linalg.solve(A @ A.T, y), atol=1e-8)
        np.testing.assert_allclose(A.T @ (A @ x - y), 0.0, atol=1e-8)

    def test_least_squares_when_inconsistent(self):
        A = np.array([[1.0], [1.0]])
        np.testing.assert_allclose(solve_pseudoinverse(InferenceProblem(A, np.array([1.0, 3.0]))), [2.0])

    def test_problem_contract(self):
        with self.assertRaises(ContractError):
            InferenceProblem(np.array([[2.0]]), np.array([1.0]))
        with self.assertRaises(ContractError):
            InferenceProblem(np.eye(2), np.ones(3))
        with self.assertRaises(ContractError):
            solve_pseudoinverse(InferenceProblem(np.zeros((2, 2)), np.ones(2)))
        InferenceProblem(np.array([[2.0]]), np.array([1.0]), routing=False)

    def test_omp_identity(self):
        y = np.array([0.0, 3.0, 0.0, -2.0])
        result = solve_omp(InferenceProblem(np.eye(4), y), k=2)
        np.testing.assert_allclose(result.x, y)
        self.assertEqual(sorted(result.support), [1, 3])
        empty = solve_omp(InferenceProblem(np.eye(4), y), k=0)
        self.assertFalse(empty.x.any())
        self.assertEqual(empty.residual_norms, [float(np.linalg.norm(y))])

    def test_omp_recovery(self):
        rng = np.random.default_rng(4)
        recovered = 0
        for _ in range(200):
            A = rng.normal(size=(30, 100))
            support = rng.choice(100, size=3, replace=False)
            x = np.zeros(100)
            x[support] = rng.uniform(1.0, 2.0, size=3) * rng.choice([-1.0, 1.0], size=3)
            result = solve_omp(InferenceProblem(A, A @ x, routing=False), k=3)
            self.assertTrue(np.all(np.diff(result.residual_norms) <= 1e-12))
            recovered += set(result.support) == set(support)
        self.assertGreaterEqual(recovered, 190)

    def test_omp_contract(self):
        with self.assertRaises(ContractError):
            solve_omp(InferenceProblem(np.eye(2), np.ones((2, 3))))
        with self.assertRaises(ContractError):
            solve_omp(InferenceProblem(np.eye(2), np.ones(2)), k=3)
        with self.assertRaises(ContractError):
            solve_omp(InferenceProblem(np.zeros((2, 2)), np.ones(2)))


class TestPipeline(unittest.TestCase):
    def spiked_links(self, flow: int, pairs_routing: np.ndarray) -> np.ndarray:
        t = np.arange(64)
        rng = np.random.default_rng(5)
        X = rng.uniform(50.0, 100.0, size=pairs_routing.shape[1]) * (1.0 + 0.3 * np.sin(2 * np.pi * t / 64))[:, None]
        X[40, flow] += 1000.0
        return X @ pairs_routing.T

    def test_spike_is_top_flow(self):
        A, pairs = ring_network()
        self.assertEqual(A.shape, (20, 50))
        flow = pairs.index((0, 5))
        Y = self.spiked_links(flow, A)
        for solver, top in [('omp', 1), ('pinv', 3)]:
            with self.subTest(solver=solver):
                result = anomography_pipeline(Y, A, Transform('fourier', cutoff=1), solver=solver)
                ranked = np.argsort(-np.abs(result.x_tilde[40]))
                self.assertIn(flow, ranked[:top].tolist())
                if solver == 'omp':
                    self.assertEqual([a.keys[0] for a in result.alarms if a.t_index == 40], [f'flow={flow}'])

    def test_clean_traffic(self):
        A, _ = ring_network()
        rng = np.random.default_rng(6)
        t = np.arange(64)
        X = rng.uniform(50.0, 100.0, size=A.shape[1]) * (1.0 + 0.3 * np.sin(2 * np.pi * t / 64))[:, None]
        X *= 1.0 + 1e-4 * rng.normal(size=X.shape)
        for solver in ('omp', 'pinv'):
            with self.subTest(solver=solver):
                result = anomography_pipeline(X @ A.T, A, Transform('fourier', cutoff=1), solver=solver)
                self.assertTrue(result.x_tilde.any())
                self.assertEqual(result.alarms, [])

    def test_quiet_network(self):
        A, _ = ring_network()
        result = anomography_pipeline(np.zeros((16, 20)), A, Transform('fourier', cutoff=1))
        self.assertEqual(result.alarms, [])
        self.assertFalse(result.x_tilde.any())

    def test_csv_and_contract(self):
        result = anomography_pipeline(np.zeros((4, 2)), np.eye(2), Transform('arima', ar=(1.0,)), flow_ids=['a', 'b'])
        out = io.StringIO()
        result.write_csv(out)
        lines = out.getvalue().splitlines()
        self.assertEqual(lines[0], 'time,flow,value')
        self.assertEqual(lines[1], '0,a,0.0')
        self.assertEqual(len(lines), 1 + 4 * 2)
        with self.assertRaises(ContractError):
            anomography_pipeline(np.zeros((4, 3)), np.eye(2), Transform('fourier'))
        with self.assertRaises(ContractError):
            anomography_pipeline(np.zeros((4, 2)), np.eye(2), Transform('fourier'), solver='lasso')

    def test_mad_outliers(self):
        indices, median, threshold = mad_outliers(np.array([1.0, 2.0, 3.0, 100.0, 2.0]), 5.0)
        self.assertEqual(indices.tolist(), [3])
        self.assertEqual((median, threshold), (2.0, 5.0))
        indices, _, threshold = mad_outliers(np.array([0.0, 0.0, 0.0, 3.0]), 5.0, floor=4.0)
        self.assertEqual((indices.tolist(), threshold), ([], 4.0))
