import csv
import io
import json
import math
import os
import sys
from enum import Enum

import numpy as np

FORMATS = ('csv', 'json', 'table')


def _clean(value):
    """JSON-safe copy: numpy scalars/arrays to Python, Enums to values, non-finite floats to None."""
    if isinstance(value, dict):
        return {str(k): _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, np.ndarray)):
        return [_clean(v) for v in value]
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    return value


def _cell(value):
    value = _clean(value)
    if value is None:
        return ''
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _columns(rows):
    columns = []
    for row in rows:
        for key in row:
            if key not in columns:
                columns.append(key)
    return columns


def render_json(command, run_config, rows, summary):
    document = {
        'command': command,
        'config': _clean(run_config),
        'rows': _clean(rows),
        'summary': _clean(summary),
    }
    return json.dumps(document, indent=2) + '\n'


def render_csv(rows):
    buffer = io.StringIO()
    columns = _columns(rows)
    writer = csv.writer(buffer, lineterminator='\n')
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_cell(row.get(c)) for c in columns])
    return buffer.getvalue()


def render_table(command, rows, summary):
    columns = _columns(rows)

    def fmt(value):
        value = _clean(value)
        if value is None:
            return '-'
        if isinstance(value, float):
            return f"{value:.10g}"
        return str(value)

    cells = [[fmt(row.get(c)) for c in columns] for row in rows]
    widths = [max([len(c)] + [len(line[i]) for line in cells]) for i, c in enumerate(columns)]
    lines = [f"== {command} =="]
    lines.append('  '.join(c.ljust(w) for c, w in zip(columns, widths)))
    lines.append('  '.join('-' * w for w in widths))
    for line in cells:
        lines.append('  '.join(v.ljust(w) for v, w in zip(line, widths)))
    lines.append('summary: ' + ', '.join(f"{k}={fmt(v)}" for k, v in summary.items()))
    return '\n'.join(lines) + '\n'


def write_report(command, run_config, rows, summary, fmt='table', out=None):
    """
    Renders one command's rows and summary as csv, json or table text.
    Writes to `out` (parent directories created) or to stdout; returns the text.
    """
    if fmt == 'json':
        text = render_json(command, run_config, rows, summary)
    elif fmt == 'csv':
        text = render_csv(rows)
    elif fmt == 'table':
        text = render_table(command, rows, summary)
    else:
        raise ValueError(f"unknown output format '{fmt}' (expected one of {', '.join(FORMATS)})")

    if out:
        directory = os.path.dirname(out)
        if directory and not os.path.exists(directory):
            os.makedirs(directory)
        with open(out, 'w', encoding='utf-8', newline='') as f:
            f.write(text)
    else:
        sys.stdout.write(text)
    return text
