import io
import unittest

import numpy as np

from netanomaly.core.alarm import Alarm, read_alarms, write_alarms
from netanomaly.core.numeric import normal_quantile, sym_eigen
from netanomaly.core.records import FlowRecord, int_to_ip, ip_to_int, parse_flow_records, write_flow_records
from netanomaly.core.traffic import (
    KEY_SELECTORS, TrafficMatrix, bin_traffic, feature_histogram, read_link_csv, read_routing_matrix, write_link_csv,
    write_routing_matrix,
)
from netanomaly.errors import ContractError, ParseError


FLOW_CSV = '''t,sip,dip,sp,dp,proto,packets,bytes
0.5,10.0.0.1,10.1.0.1,1234,80,6,10,5000
10,10.0.0.2,10.1.0.1,1235,80,6,2,100
301,10.0.0.1,10.1.0.1,1236,443,6,1,40
'''


def flow(t: float, sip: str = '10.0.0.1', dip: str = '10.1.0.1', sp: int = 1000, dp: int = 80,
         proto: int = 6, packets: int = 1, size: int = 100) -> FlowRecord:
    return FlowRecord(t=t, sip=ip_to_int(sip), dip=ip_to_int(dip), sp=sp, dp=dp, proto=proto, packets=packets,
                      bytes=packets * size)


class TestRecords(unittest.TestCase):
    def test_parse_and_write(self):
        records = parse_flow_records(io.StringIO(FLOW_CSV))
        self.assertEqual(len(records), 3)
        self.assertEqual(int_to_ip(records[0].sip), '10.0.0.1')
        self.assertEqual(records[2].dp, 443)
        out = io.StringIO()
        write_flow_records(records, out)
        self.assertEqual(parse_flow_records(io.StringIO(out.getvalue())), records)

    def test_parse_errors(self):
        for text, line_number in [
            ('t,sip\n', 1),
            ('t,sip,dip,sp,dp,proto,packets,bytes\n0,10.0.0.1,10.0.0.2,1,2,6,1\n', 2),
            ('t,sip,dip,sp,dp,proto,packets,bytes\n0,10.0.0.1,10.0.0.300,1,2,6,1,40\n', 2),
            ('t,sip,dip,sp,dp,proto,packets,bytes\n0,10.0.0.1,10.0.0.2,1,70000,6,1,40\n', 2),
            ('t,sip,dip,sp,dp,proto,packets,bytes\n0,10.0.0.1,10.0.0.2,1,2,6,0,40\n', 2),
            ('t,sip,dip,sp,dp,proto,packets,bytes\n0,10.0.0.1,10.0.0.2,1,2,6,1,40\n0,' + 'x' * 200_000 + '\n', 3),
        ]:
            with self.subTest(text=text):
                with self.assertRaises(ParseError) as cm:
                    parse_flow_records(io.StringIO(text))
                self.assertEqual(cm.exception.line_number, line_number)


class TestTraffic(unittest.TestCase):
    def test_bin_traffic(self):
        records = parse_flow_records(io.StringIO(FLOW_CSV))
        matrix = bin_traffic(records, 300.0, KEY_SELECTORS['sip'])
        self.assertEqual((matrix.m, matrix.n), (2, 2))
        np.testing.assert_array_equal(matrix.values, [[5000, 100], [40, 0]])
        packets = bin_traffic(records, 300.0, KEY_SELECTORS['dip'], measure='packets')
        np.testing.assert_array_equal(packets.values, [[12], [1]])

    def test_bin_traffic_order_independent(self):
        records = parse_flow_records(io.StringIO(FLOW_CSV))
        a = bin_traffic(records, 300.0, KEY_SELECTORS['flow'])
        b = bin_traffic(list(reversed(records)), 300.0, KEY_SELECTORS['flow'])
        self.assertEqual(a.series_ids, b.series_ids)
        np.testing.assert_array_equal(a.values, b.values)

    def test_traffic_matrix_contract(self):
        for values, ids in [
            (np.zeros((0, 2)), ('a', 'b')),
            (np.array([[1.0, np.nan]]), ('a', 'b')),
            (np.ones((2, 2)), ('a',)),
        ]:
            with self.subTest(shape=values.shape):
                with self.assertRaises(ContractError):
                    TrafficMatrix(values=values, bin_width=300.0, series_ids=ids)

    def test_feature_histogram(self):
        records = parse_flow_records(io.StringIO(FLOW_CSV))
        histogram = feature_histogram(records, 'dp', bin_index=0, bin_width=300.0)
        self.assertEqual(histogram.counts, {80: 12})
        self.assertEqual(feature_histogram(records, 'dp', weight='flows').counts, {80: 2, 443: 1})

    def test_link_csv(self):
        text = 't,link_id,bytes\n0,10,1.5\n0,2,2\n300,2,3\n'
        matrix = read_link_csv(io.StringIO(text))
        self.assertEqual(matrix.series_ids, ('2', '10'))
        np.testing.assert_array_equal(matrix.values, [[2.0, 1.5], [3.0, 0.0]])
        out = io.StringIO()
        write_link_csv(matrix, out)
        np.testing.assert_array_equal(read_link_csv(io.StringIO(out.getvalue())).values, matrix.values)
        with self.assertRaises(ParseError):
            read_link_csv(io.StringIO('t,link_id,bytes\n0,1,inf\n'))
        with self.assertRaises(ContractError):
            read_link_csv(io.StringIO(text), bin_width=0.0)

    def test_routing_matrix(self):
        A = np.array([[1.0, 0.0, 1.0], [0.0, 1.0, 1.0]])
        out = io.StringIO()
        write_routing_matrix(A, out)
        np.testing.assert_array_equal(read_routing_matrix(io.StringIO(out.getvalue())), A)
        for text in ['2\n1 0\n', '2 2\n1 0\n', '1 2\n1\n']:
            with self.subTest(text=text):
                with self.assertRaises(ParseError):
                    read_routing_matrix(io.StringIO(text))


class TestNumeric(unittest.TestCase):
    def test_sym_eigen(self):
        matrix = np.array([[2.0, 1.0], [1.0, 2.0]])
        values, vectors = sym_eigen(matrix)
        np.testing.assert_allclose(values, [3.0, 1.0])
        np.testing.assert_allclose(matrix @ vectors, vectors * values, atol=1e-12)
        with self.assertRaises(ContractError):
            sym_eigen(np.array([[1.0, 2.0], [0.0, 1.0]]))

    def test_normal_quantile(self):
        self.assertAlmostEqual(normal_quantile(0.975), 1.959964, places=5)
        self.assertAlmostEqual(normal_quantile(0.5), 0.0)
        for p in (0.0, 1.0):
            with self.subTest(p=p):
                with self.assertRaises(ContractError):
                    normal_quantile(p)


class TestAlarm(unittest.TestCase):
    def test_write_and_read(self):
        alarms = [Alarm(3, 'pca', 12.5, 7.775, ('flow=2',)), Alarm(np.int64(4), 'kl-dip', np.float64(4.0), 3.0)]
        out = io.BytesIO()
        self.assertEqual(write_alarms(alarms, out), 2)
        lines = out.getvalue().splitlines()
        self.assertEqual(lines[0], b'{"t_index":3,"detector":"pca","score":12.5,"threshold":7.775,"keys":["flow=2"]}')
        self.assertEqual(read_alarms(out.getvalue()), alarms)

    def test_score_below_threshold(self):
        with self.assertRaises(ContractError):
            Alarm(0, 'pca', 1.0, 2.0)
