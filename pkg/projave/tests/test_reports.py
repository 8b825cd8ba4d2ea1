import math
import tempfile
from pathlib import Path

from django.test import SimpleTestCase

from projave.exceptions import ConfigurationError
from projave.reports import COLUMNS, HEADER_PREFIX, Report, make_row, read_report, row_drift


def sample_report():
    report = Report(command='chain')
    report.add(make_row('chain', 'E_1', {'n': 3, 'p': 2.0}, estimate=1.0 / 3.0, std_error=1e-4,
                        reference=0.3, margin=0.1 / 7.0))
    report.add(make_row('chain', 'E_2', {'n': 3, 'p': 2.0}, estimate=math.pi, std_error=0.0,
                        reference=3.0, margin=-2.0 ** -40))
    report.add(make_row('chain', 'malformed', {'profile': 'spline'}, error='unknown profile kind'))
    return report.finalize({'library_version': '0.1.0', 'command': 'chain', 'seed': 4,
                            'config': {'command': 'chain', 'seed': 4}, 'extra': 'dropped'})


class RowTests(SimpleTestCase):
    def test_margin_decides(self):
        self.assertTrue(make_row('bv', 'ok', {}, margin=0.0)['passed'])
        self.assertFalse(make_row('bv', 'short', {}, margin=-1e-300)['passed'])
        self.assertFalse(make_row('bv', 'missing', {})['passed'])

    def test_errors_fail_the_row(self):
        row = make_row('bv', 'broken', {}, margin=1.0, error=ValueError('bad facet'))
        self.assertFalse(row['passed'])
        self.assertEqual(row['error'], 'bad facet')

    def test_inputs_are_canonical_json(self):
        row = make_row('bv', 'case', {'b': 1, 'a': [1.5, 2]})
        self.assertEqual(row['inputs'], '{"a": [1.5, 2], "b": 1}')


class ReportTests(SimpleTestCase):
    def test_rows_are_indexed_and_counted(self):
        report = sample_report()
        self.assertEqual([row['index'] for row in report.rows], [0, 1, 2])
        self.assertEqual(report.failed, 2)
        self.assertFalse(report.passed)
        self.assertEqual(report.header['rows'], 3)
        self.assertEqual(report.header['failed'], 2)
        self.assertNotIn('extra', report.header)
        self.assertEqual(list(report.frame().columns), COLUMNS)

    def test_csv_and_json_keep_every_bit(self):
        report = sample_report()
        with tempfile.TemporaryDirectory() as tmp:
            for fmt in ('csv', 'json'):
                path = Path(tmp) / 'nested' / f'report.{fmt}'
                report.write(path)
                loaded = read_report(path)
                self.assertEqual(row_drift(report.rows, loaded.rows), [], fmt)
                self.assertEqual(loaded.header, report.header, fmt)
                self.assertEqual(loaded.command, 'chain')
                self.assertTrue(math.isnan(loaded.rows[2]['estimate']))
                self.assertEqual(loaded.rows[2]['error'], 'unknown profile kind')

    def test_csv_starts_with_the_header_comment(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'out.dat'
            sample_report().write(path, fmt='csv')
            first = path.read_text(encoding='utf-8').splitlines()[0]
            self.assertTrue(first.startswith(HEADER_PREFIX))

    def test_unknown_format(self):
        with tempfile.TemporaryDirectory() as tmp:
            with self.assertRaises(ConfigurationError):
                sample_report().write(Path(tmp) / 'report.xlsx')

    def test_unreadable_reports(self):
        with tempfile.TemporaryDirectory() as tmp:
            garbage = Path(tmp) / 'garbage.txt'
            garbage.write_text('index,estimate\n0,1.0\n')
            with self.assertRaises(ConfigurationError):
                read_report(garbage)
            with self.assertRaises(ConfigurationError):
                read_report(Path(tmp) / 'missing.json')


class DriftTests(SimpleTestCase):
    def test_one_ulp_is_drift(self):
        expected = sample_report().rows
        actual = sample_report().rows
        actual[0]['estimate'] = math.nextafter(actual[0]['estimate'], 1.0)
        drift = row_drift(expected, actual)
        self.assertEqual(len(drift), 1)
        self.assertEqual(drift[0]['index'], 0)
        self.assertEqual(drift[0]['column'], 'estimate')

    def test_nan_matches_nan(self):
        self.assertEqual(row_drift(sample_report().rows, sample_report().rows), [])

    def test_row_count_changes(self):
        rows = sample_report().rows
        drift = row_drift(rows, rows[:2])
        self.assertEqual(drift[0]['column'], 'rows')
