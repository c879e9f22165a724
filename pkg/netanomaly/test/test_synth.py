import unittest

import numpy as np

from netanomaly.core.records import int_to_ip, ip_to_int
from netanomaly.errors import ConfigError, ContractError
from netanomaly.synth import (
    ANOMALY_KINDS, AnomalySpec, SynthConfig, host_address, node_of, od_pairs, ring_with_chords, routing_matrix,
    shortest_path, synth_flows, synth_links,
)

SMALL = SynthConfig(bins=24, nodes=4, hosts_per_node=10, flows_per_bin=50)


class TestFlows(unittest.TestCase):
    def test_deterministic(self):
        a, _ = synth_flows(SMALL, [AnomalySpec('dos', start=5, duration=2)], seed=1)
        b, _ = synth_flows(SMALL, [AnomalySpec('dos', start=5, duration=2)], seed=1)
        c, _ = synth_flows(SMALL, [AnomalySpec('dos', start=5, duration=2)], seed=2)
        self.assertEqual(a, b)
        self.assertNotEqual(a, c)

    def test_background(self):
        records, truth = synth_flows(SMALL, seed=0)
        self.assertEqual(truth, [])
        self.assertEqual([r.t for r in records], sorted(r.t for r in records))
        self.assertTrue(all(0.0 <= r.t < SMALL.bins * SMALL.bin_width for r in records))
        self.assertTrue(all(node_of(r.sip) < SMALL.nodes and node_of(r.dip) < SMALL.nodes for r in records))
        self.assertAlmostEqual(len(records) / SMALL.bins, SMALL.flows_per_bin, delta=0.25 * SMALL.flows_per_bin)

    def test_addresses(self):
        self.assertEqual(int_to_ip(host_address(3, 0)), '10.3.0.1')
        self.assertEqual(node_of(ip_to_int('10.7.0.12')), 7)

    def test_every_kind(self):
        for kind in ANOMALY_KINDS:
            with self.subTest(kind=kind):
                records, (truth,) = synth_flows(SMALL, [AnomalySpec(kind, start=10, duration=2)], seed=3)
                self.assertEqual((truth.kind, truth.start, truth.duration), (kind, 10, 2))
                self.assertGreater(truth.flows, 0)
                self.assertTrue(truth.keys)

    def test_portscan_template(self):
        background, _ = synth_flows(SMALL, seed=4)
        records, (truth,) = synth_flows(SMALL, [AnomalySpec('portscan', start=10, duration=2)], seed=4)
        sip, dip = ip_to_int(truth.keys['sip']), ip_to_int(truth.keys['dip'])
        scan = [r for r in records if r.sip == sip and r.dip == dip and r.packets == 1 and r.bytes == 40]
        self.assertEqual(len(scan), truth.flows)
        self.assertEqual(truth.flows, 2000)
        self.assertEqual(len(records), len(background) + truth.flows)
        self.assertTrue(all(3000.0 <= r.t < 3600.0 for r in scan))
        self.assertEqual(len({r.sp for r in scan}), 1)
        self.assertEqual(len({r.dp for r in scan if r.t < 3300.0}), 1000)

    def test_outage(self):
        records, (truth,) = synth_flows(SMALL, [AnomalySpec('outage', start=10, duration=4)], seed=5)
        node = int(truth.keys['dip'].split('.')[1])
        during = [r for r in records if 3000.0 <= r.t < 4200.0 and node_of(r.dip) == node]
        self.assertEqual(during, [])
        background, _ = synth_flows(SMALL, seed=5)
        self.assertEqual(len(background) - len(records), truth.flows)

    def test_intensity(self):
        _, (weak,) = synth_flows(SMALL, [AnomalySpec('ddos', start=0, duration=1, intensity=0.5)])
        _, (strong,) = synth_flows(SMALL, [AnomalySpec('ddos', start=0, duration=1, intensity=2.0)])
        self.assertEqual((weak.flows, strong.flows), (500, 2000))

    def test_errors(self):
        for kwargs in [dict(bins=0), dict(nodes=1), dict(hosts_per_node=255), dict(diurnal=1.0)]:
            with self.subTest(**kwargs):
                with self.assertRaises(ConfigError):
                    SynthConfig(**kwargs)
        with self.assertRaises(ConfigError):
            AnomalySpec('smurf', start=0)
        with self.assertRaises(ConfigError):
            AnomalySpec('dos', start=0, duration=0)
        with self.assertRaises(ConfigError):
            synth_flows(SMALL, [AnomalySpec('dos', start=24)])


class TestTopology(unittest.TestCase):
    def test_ring(self):
        links = ring_with_chords(4)
        self.assertEqual(len(links), 8)
        self.assertEqual(links[:2], [(0, 1), (1, 0)])
        self.assertEqual(len(ring_with_chords(10, chords=2)), 24)
        with self.assertRaises(ContractError):
            ring_with_chords(2)
        with self.assertRaises(ContractError):
            ring_with_chords(10, chords=6)

    def test_shortest_path(self):
        links = ring_with_chords(6)
        path = shortest_path(links, 0, 2)
        self.assertEqual([links[i] for i in path], [(0, 1), (1, 2)])
        self.assertEqual([links[i] for i in shortest_path(links, 0, 5)], [(0, 5)])
        self.assertEqual(shortest_path(links, 3, 3), [])
        with self.assertRaises(ContractError):
            shortest_path([(0, 1)], 1, 0)

    def test_routing_matrix(self):
        links = ring_with_chords(5)
        pairs = od_pairs(5)
        self.assertEqual(len(pairs), 20)
        A = routing_matrix(links, pairs)
        self.assertEqual(A.shape, (10, 20))
        self.assertTrue(set(np.unique(A)) <= {0.0, 1.0})
        for f, (a, b) in enumerate(pairs):
            with self.subTest(pair=(a, b)):
                hops = min((b - a) % 5, (a - b) % 5)
                self.assertEqual(int(A[:, f].sum()), hops)

    def test_links_are_routed_flows(self):
        records, _ = synth_flows(SMALL, seed=6)
        Y, A, X = synth_links(records, SMALL, chords=1)
        self.assertEqual(Y.values.shape, (SMALL.bins, len(ring_with_chords(4, 1))))
        self.assertEqual(X.values.shape, (SMALL.bins, 12))
        np.testing.assert_allclose(Y.values, X.values @ A.T)
        local = sum(r.bytes for r in records if node_of(r.sip) != node_of(r.dip))
        self.assertAlmostEqual(float(X.values.sum()), float(local))
        self.assertEqual(Y.series_ids[0], '0')
