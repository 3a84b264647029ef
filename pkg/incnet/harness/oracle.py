"""Exactly-once software references of the harness workloads.

Nothing here touches the switch, the agents or the network.
"""

import numpy


def sum_tensors(tensors):
    """Element-wise sum over clients (rows)."""
    return numpy.asarray(tensors, dtype=numpy.float64).sum(axis=0)


def quantization_bound(n_summands, precision):
    """Largest admissible |delivered - exact| per element."""
    return n_summands * 0.5 / 10**precision


def reduce_counts(batches):
    """Totals of per client lists of {key: count} batches."""
    totals = {}
    for client in batches:
        for batch in client:
            for k, v in batch.items():
                totals[k] = totals.get(k, 0) + int(v)
    return totals


def tally(ballots):
    """Votes per (round, candidate) and the winning candidate per round."""
    b = numpy.asarray(ballots, dtype=numpy.int64)
    counts = b.sum(axis=1)
    return counts, numpy.argmax(counts, axis=1)


def lock_grants(schedule):
    """Grants per client: every attempt is eventually granted."""
    return numpy.array([len(s) for s in schedule], dtype=numpy.int64)


def dict_arrays(d):
    """Sorted keys and values of a {key: number} dict, zeros dropped."""
    items = sorted((str(k), v) for k, v in d.items() if v != 0)
    keys = numpy.array([k for k, _ in items], dtype='S')
    values = numpy.array([v for _, v in items], dtype=numpy.float64)
    return keys, values


def array_dict(keys, values):
    out = {}
    for k, v in zip(keys, values):
        if isinstance(k, bytes):
            k = k.decode('utf-8')
        out[k] = v
    return out
