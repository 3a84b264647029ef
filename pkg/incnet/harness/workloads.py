"""Seeded synthetic workloads.

Every generator draws from its own ``numpy.random.Generator``; use
:func:`streams` to derive independent generators from one run seed.
"""

import numpy


def streams(seed, n):
    """n independent generators spawned from seed."""
    return [numpy.random.default_rng(s)
            for s in numpy.random.SeedSequence(seed).spawn(n)]


def zipf_weights(n_keys, a=1.0):
    """Normalised Zipf(a) weights of ranks 1..n_keys."""
    w = 1.0 / numpy.arange(1, n_keys+1, dtype=numpy.float64)**a
    return w / w.sum()


def key_name(rank):
    return 'k{:06d}'.format(rank)


def zipf_keys(rng, n_keys, n_samples, a=1.0):
    """Key names drawn from a finite Zipf(a) universe.

    Parameters
    ----------
    rng : :class:`numpy.random.Generator`
        Random stream.
    n_keys : int
        Size of the key universe.
    n_samples : int
        Number of draws.
    a : float
        Zipf exponent, 0 gives uniform keys.

    Returns
    -------
    keys : list of strings
    """
    ranks = rng.choice(n_keys, size=n_samples, p=zipf_weights(n_keys, a))
    return [key_name(r) for r in ranks]


def word_batches(rng, n_clients, n_keys, n_words, batch=32, a=1.0):
    """Word count input: per client, a list of {word: count} batches.

    Each client draws n_words words and groups them into batches of at
    most ``batch`` distinct words.
    """
    out = []
    for c in range(n_clients):
        words = zipf_keys(rng, n_keys, n_words, a)
        counts = {}
        for w in words:
            counts[w] = counts.get(w, 0) + 1
        items = sorted(counts.items())
        out.append([dict(items[i:i+batch])
                    for i in range(0, len(items), batch)])
    return out


def word_stream(rng, n_clients, n_keys, n_words, batch=32, a=1.0):
    """Word count input in arrival order: per client, {word: count} batches
    of ``batch`` consecutive draws.

    Unlike :func:`word_batches` counts are only merged inside a batch, so
    popular words come back batch after batch.
    """
    out = []
    for c in range(n_clients):
        words = zipf_keys(rng, n_keys, n_words, a)
        client = []
        for i in range(0, len(words), batch):
            counts = {}
            for w in words[i:i+batch]:
                counts[w] = counts.get(w, 0) + 1
            client.append(counts)
        out.append(client)
    return out


def tensors(rng, n_clients, n_elements, scale=1.0):
    """Dense gradient like tensors, one row per client."""
    return scale * rng.standard_normal((n_clients, n_elements))


def force_overflow(rng, t, ratio, big=1e9):
    """Copy of t with a fraction ratio of the elements set beyond the int32
    range of the quantized representation."""
    t = numpy.array(t, dtype=numpy.float64)
    n = int(round(ratio * t.size))
    if n == 0:
        return t
    idx = rng.choice(t.size, size=n, replace=False)
    sign = numpy.where(rng.random(n) < 0.5, -1.0, 1.0)
    t.flat[idx] = sign * big
    return t


def ballots(rng, n_voters, n_candidates, n_rounds=1, bias=0.6):
    """One-hot ballots, shape (n_rounds, n_voters, n_candidates).

    With probability ``bias`` a voter picks the round's favourite.
    """
    out = numpy.zeros((n_rounds, n_voters, n_candidates), dtype=numpy.int64)
    for r in range(n_rounds):
        fav = rng.integers(n_candidates)
        for v in range(n_voters):
            pick = fav if rng.random() < bias else rng.integers(n_candidates)
            out[r, v, pick] = 1
    return out


def lock_schedule(rng, n_clients, n_locks, n_attempts, hold=10000):
    """Per client, a list of (start_ns, lock name, hold_ns) attempts."""
    out = []
    for c in range(n_clients):
        starts = numpy.sort(rng.integers(0, 4*hold, size=n_attempts))
        locks = rng.integers(n_locks, size=n_attempts)
        out.append([(int(s), 'lock{}'.format(l), int(hold))
                    for s, l in zip(starts, locks)])
    return out


def monitor_reports(rng, n_clients, n_keys, n_reports, batch=16, a=1.0):
    """Per client, a list of {flow key: packets} reports."""
    return word_batches(rng, n_clients, n_keys, n_reports*batch,
                        batch=batch, a=a)
