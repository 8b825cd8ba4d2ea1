"""
Verification reports: rows plus a header that replays them.

CSV column order and JSON keys are frozen:
    index, command, case, inputs, estimate, std_error, reference, margin, passed, error
A row passes iff its margin is non-negative. CSV files carry the header as a
single comment line `# projave-header: {...}` before the table.
"""
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from .exceptions import ConfigurationError

logger = logging.getLogger(__name__)

COLUMNS = ['index', 'command', 'case', 'inputs', 'estimate', 'std_error',
           'reference', 'margin', 'passed', 'error']
HEADER_KEYS = ['library_version', 'command', 'seed', 'config', 'quadrature',
               'wall_clock_seconds', 'created_at', 'rows', 'failed']
HEADER_PREFIX = '# projave-header: '
FORMATS = ('csv', 'json')


def _json_default(value):
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    raise TypeError(f"not JSON serializable: {type(value).__name__}")


def canonical_json(value):
    return json.dumps(value, sort_keys=True, default=_json_default)


def make_row(command, case, inputs, estimate=math.nan, std_error=math.nan,
             reference=math.nan, margin=math.nan, error=''):
    """A report row; `index` is assigned when the row is added to a report."""
    margin = float(margin)
    return {
        'index': None,
        'command': command,
        'case': case,
        'inputs': canonical_json(inputs),
        'estimate': float(estimate),
        'std_error': float(std_error),
        'reference': float(reference),
        'margin': margin,
        'passed': bool(not error and margin >= 0),
        'error': str(error or ''),
    }


@dataclass
class Report:
    command: str
    rows: list = field(default_factory=list)
    header: dict = field(default_factory=dict)

    def add(self, row):
        row['index'] = len(self.rows)
        self.rows.append(row)
        return row

    @property
    def failed(self):
        return sum(1 for row in self.rows if not row['passed'])

    @property
    def passed(self):
        return self.failed == 0

    def frame(self):
        return pd.DataFrame(self.rows, columns=COLUMNS)

    def finalize(self, header):
        self.header = {key: header.get(key) for key in HEADER_KEYS}
        self.header['rows'] = len(self.rows)
        self.header['failed'] = self.failed
        return self

    # ------------------------------------------------------------
    # Writers
    # ------------------------------------------------------------

    def to_json(self, path):
        payload = {'header': self.header, 'rows': [_json_row(row) for row in self.rows]}
        Path(path).write_text(json.dumps(payload, indent=2, default=_json_default), encoding='utf-8')

    def to_csv(self, path):
        with Path(path).open('w', encoding='utf-8', newline='') as f:
            f.write(HEADER_PREFIX + canonical_json(self.header) + '\n')
            self.frame().to_csv(f, index=False, float_format='%.17g')

    def write(self, path, fmt=None):
        fmt = fmt or Path(path).suffix.lstrip('.') or 'json'
        if fmt not in FORMATS:
            raise ConfigurationError(f"unknown report format {fmt!r}; expected csv or json")
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        if fmt == 'csv':
            self.to_csv(path)
        else:
            self.to_json(path)
        logger.info(f"[Reports] wrote {len(self.rows)} rows to {path} ({fmt})")


def _json_row(row):
    # NaN is not valid JSON; missing numbers are written as null.
    return {key: (None if isinstance(row[key], float) and math.isnan(row[key]) else row[key])
            for key in COLUMNS}


def _from_json_row(row):
    out = dict(row)
    for key in ('estimate', 'std_error', 'reference', 'margin'):
        out[key] = math.nan if out.get(key) is None else float(out[key])
    out['passed'] = bool(out['passed'])
    out['error'] = out.get('error') or ''
    return out


def read_report(path):
    """Load a CSV or JSON report written by Report.write."""
    path = Path(path)
    try:
        text = path.read_text(encoding='utf-8')
    except OSError as e:
        raise ConfigurationError(f"cannot read report {path}: {e}") from e
    if text.startswith(HEADER_PREFIX):
        first, _, _ = text.partition('\n')
        header = json.loads(first[len(HEADER_PREFIX):])
        frame = pd.read_csv(path, skiprows=1, float_precision='round_trip',
                            keep_default_na=False, na_values=['', 'nan', 'NaN'],
                            dtype={'inputs': str, 'error': str, 'case': str, 'command': str})
        rows = []
        for record in frame.to_dict(orient='records'):
            record['index'] = int(record['index'])
            record['passed'] = str(record['passed']) == 'True'
            record['error'] = '' if pd.isna(record['error']) else str(record['error'])
            for key in ('estimate', 'std_error', 'reference', 'margin'):
                record[key] = float(record[key])
            rows.append(record)
    else:
        try:
            payload = json.loads(text)
        except json.JSONDecodeError as e:
            raise ConfigurationError(f"report {path} is neither CSV nor JSON: {e}") from e
        header = payload.get('header', {})
        rows = [_from_json_row(row) for row in payload.get('rows', [])]
    report = Report(command=header.get('command'), rows=rows, header=header)
    return report


def _bits(value):
    if isinstance(value, float):
        return 'nan' if math.isnan(value) else value.hex()
    return value


def row_drift(expected, actual):
    """Rows that differ bit for bit (every column compared); empty when identical."""
    drift = []
    if len(expected) != len(actual):
        drift.append({'index': None, 'column': 'rows', 'expected': len(expected), 'actual': len(actual)})
    for old, new in zip(expected, actual):
        for key in COLUMNS:
            if _bits(old[key]) != _bits(new[key]):
                drift.append({'index': old['index'], 'column': key,
                              'expected': old[key], 'actual': new[key]})
    return drift
