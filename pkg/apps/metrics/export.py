"""
Trace CSV export and reload.

Floats are written with repr so a reloaded trace reproduces the in-memory
arrays exactly, and regret recomputed from the file matches bit for bit.
"""
import csv
import hashlib
import logging

import numpy as np

from apps.core.exceptions import ConfigurationError

logger = logging.getLogger(__name__)

VECTOR_COLUMNS = ('w', 'g', 'g_hat')


def _fmt(value):
    return repr(float(value))


def trace_columns(dim, comparators):
    columns = ['t', 'active_node', 'v_t', 'h_t', 'h_hat_t']
    for prefix in VECTOR_COLUMNS:
        columns += [f'{prefix}_{i}' for i in range(dim)]
    columns += [f'regret_{c.name}' for c in comparators]
    columns += ['lambda_cum', 'bits_cum', 'available', 'missing', 'staleness', 'payload']
    return columns


def write_trace_csv(path, ledger, trace, comparators, lag_cum, payloads):
    """
    One row per round. `trace` holds the transport's `TraceRow`s, `lag_cum`
    the running true lag and `payloads` the hex payload of each round.
    """
    if not (len(ledger) == len(trace) == len(lag_cum) == len(payloads)):
        raise ConfigurationError('ledger, transport trace, lag and payload columns differ in length')
    curves = [ledger.regret_curve(c.vector) for c in comparators]
    bits_cum = np.cumsum([row.bits for row in trace], dtype=np.int64)
    columns = trace_columns(ledger.dim, comparators)

    with open(path, 'w', encoding='utf-8', newline='') as handle:
        writer = csv.writer(handle, lineterminator='\n')
        writer.writerow(columns)
        for k, row in enumerate(trace):
            values = [int(ledger.t[k]), int(ledger.nodes[k]), _fmt(ledger.v[k]), _fmt(ledger.h[k]),
                      _fmt(ledger.h_hat[k])]
            for array in (ledger.w, ledger.g, ledger.g_hat):
                values += [_fmt(x) for x in array[k]]
            values += [_fmt(curve[k]) for curve in curves]
            values += [_fmt(lag_cum[k]), int(bits_cum[k]), row.available, row.missing,
                       '' if row.staleness is None else row.staleness, payloads[k]]
            writer.writerow(values)
    logger.debug('wrote %d trace rows to %s', len(trace), path)


def load_trace_csv(path):
    """Columns of a trace file as arrays; vector columns are stacked into (T, d) arrays"""
    with open(path, encoding='utf-8', newline='') as handle:
        reader = csv.DictReader(handle)
        fields = reader.fieldnames or []
        rows = list(reader)

    data = {}
    for prefix in VECTOR_COLUMNS:
        names = sorted((f for f in fields if f.rsplit('_', 1)[0] == prefix and f.rsplit('_', 1)[1].isdigit()),
                       key=lambda f: int(f.rsplit('_', 1)[1]))
        data[prefix] = np.array([[float(r[n]) for n in names] for r in rows], dtype=np.float64).reshape(
            len(rows), len(names))
    for name in ('t', 'active_node', 'bits_cum', 'available', 'missing'):
        data[name] = np.array([int(r[name]) for r in rows], dtype=np.int64)
    for name in fields:
        if name in ('v_t', 'h_t', 'h_hat_t', 'lambda_cum') or name.startswith('regret_'):
            data[name] = np.array([float(r[name]) for r in rows], dtype=np.float64)
    data['staleness'] = [int(r['staleness']) if r['staleness'] else None for r in rows]
    data['payload'] = [r['payload'] for r in rows]
    return data


def file_sha256(path):
    digest = hashlib.sha256()
    with open(path, 'rb') as handle:
        for chunk in iter(lambda: handle.read(1 << 16), b''):
            digest.update(chunk)
    return digest.hexdigest()


def staleness_profile(trace, warmup=0):
    """Largest staleness of the active node over rounds after `warmup`; None if never defined"""
    values = [row.staleness for row in trace if row.t > warmup and row.staleness is not None]
    return max(values) if values else None
