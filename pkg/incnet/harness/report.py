"""Versioned CSV reports with an HDF5 sidecar of result arrays, and the
``verify`` ledger."""

import os
import h5py
import numpy
import pandas
from incnet.utils.misc import print_section_header

SCHEMA_VERSION = 1
KEY = ['scenario', 'policy', 'seed']
RTOL = 1e-12


def sidecar(filename):
    root, _ = os.path.splitext(filename)
    return root + '.h5'


class Report(object):
    """Rows of metrics plus result arrays of one or more runs.

    Parameters
    ----------
    rows : list of dict
        One dict per (scenario, policy, seed).
    arrays : dict
        (scenario, policy, seed) -> {name: array}.
    """

    def __init__(self, rows=None, arrays=None):
        self.rows = list(rows) if rows is not None else []
        self.arrays = dict(arrays) if arrays is not None else {}

    def extend(self, other):
        self.rows += other.rows
        self.arrays.update(other.arrays)
        return self

    @property
    def frame(self):
        frame = pandas.DataFrame(self.rows)
        if len(frame):
            frame.insert(0, 'schema_version', SCHEMA_VERSION)
        return frame

    def write(self, filename):
        """Write the CSV and its ``.h5`` sidecar."""
        self.frame.to_csv(filename, index=False)
        with h5py.File(sidecar(filename), 'w') as fh5:
            for (scenario, policy, seed), arrays in self.arrays.items():
                grp = fh5.require_group('{}/{}/{}'.format(scenario, policy,
                                                          seed))
                for name, value in arrays.items():
                    grp[name] = numpy.asarray(value)

    def print_summary(self, columns=('goodput', 'p50', 'p99', 'chr',
                                     'livelock')):
        print_section_header('Report')
        frame = self.frame
        cols = [c for c in KEY + list(columns) if c in frame.columns]
        print(frame[cols].to_string(index=False))


def read_report(filename):
    frame = pandas.read_csv(filename)
    if 'schema_version' not in frame.columns:
        raise ValueError('{} is not an incnet report.'.format(filename))
    version = int(frame['schema_version'].iloc[0]) if len(frame) else 0
    if len(frame) and version != SCHEMA_VERSION:
        raise ValueError('Report schema version {} unsupported.'.format(
            version))
    arrays = {}
    h5 = sidecar(filename)
    if os.path.exists(h5):
        with h5py.File(h5, 'r') as fh5:
            for scenario in fh5:
                for policy in fh5[scenario]:
                    for seed in fh5[scenario][policy]:
                        grp = fh5[scenario][policy][seed]
                        arrays[(scenario, policy, int(seed))] = dict(
                            (k, grp[k][()]) for k in grp)
    rows = frame.drop(columns=['schema_version']).to_dict('records')
    return Report(rows, arrays)


def _compare(name, got, want, atol):
    got = numpy.asarray(got)
    want = numpy.asarray(want)
    if got.shape != want.shape:
        return False, 'shape {} != {}'.format(got.shape, want.shape)
    if want.dtype.kind in 'SUO':
        ok = numpy.array_equal(got, want)
        return ok, '' if ok else '{} differ'.format(name)
    diff = numpy.abs(got.astype(numpy.float64) - want.astype(numpy.float64))
    bound = atol + RTOL*numpy.abs(want.astype(numpy.float64))
    ok = bool(numpy.all(diff <= bound))
    worst = float(diff.max()) if diff.size else 0.0
    return ok, 'max |diff| {:.3e}'.format(worst)


def verify(report, reference, verbose=False):
    """Compare a run report with the reference report of the same
    workloads.

    Each (scenario, policy, seed) row must exist in the reference, must not
    be livelocked, must have no invariant violations and must carry result
    arrays equal to the reference's within the row's tolerance.

    Parameters
    ----------
    report, reference : :class:`Report`
        Simulated and software runs.

    Returns
    -------
    ledger : :class:`pandas.DataFrame`
        One row per check with columns scenario, policy, seed, check,
        passed, detail.
    """
    ledger = []
    want_rows = dict((tuple(r[k] for k in KEY), r) for r in reference.rows)

    def add(key, check, passed, detail=''):
        ledger.append(dict(zip(KEY, key), check=check, passed=bool(passed),
                           detail=detail))

    for row in report.rows:
        key = (row['scenario'], str(row['policy']), int(row['seed']))
        if key not in want_rows:
            add(key, 'reference', False, 'no reference row')
            continue
        add(key, 'livelock', not row.get('livelock', 0),
            'completed {} of {}'.format(row.get('completed'),
                                        row.get('calls')))
        violations = row.get('violations', 0)
        if violations == violations and violations:
            add(key, 'invariants', False, '{} violations'.format(violations))
        tol = row.get('tolerance', 0.0)
        tol = 0.0 if tol != tol else float(tol)
        got = report.arrays.get(key, {})
        for name, want in sorted(reference.arrays.get(key, {}).items()):
            if name not in got:
                add(key, name, False, 'missing')
                continue
            ok, detail = _compare(name, got[name], want, tol)
            add(key, name, ok, detail)
    ledger = pandas.DataFrame(ledger, columns=KEY + ['check', 'passed',
                                                     'detail'])
    if verbose:
        print_section_header('Verify')
        print(ledger.to_string(index=False))
    return ledger
