"""Report metrics."""

import numpy
import scipy.stats
from incnet.utils.misc import jain_index

NS = 1e9


def percentiles(latencies, qs=(50, 99)):
    """{'p50': .., 'p99': ..} of latencies in ns, nan when empty."""
    lat = numpy.asarray(latencies, dtype=numpy.float64)
    out = {}
    for q in qs:
        out['p{}'.format(q)] = (float(numpy.percentile(lat, q)) if lat.size
                                else float('nan'))
    return out


def goodput(app_bytes, elapsed_ns):
    """Application bytes per simulated second."""
    if elapsed_ns <= 0:
        return 0.0
    return app_bytes * NS / elapsed_ns


def loss_ratio(link_stats):
    """Frames lost or tail dropped over frames sent, from
    :meth:`incnet.netsim.network.Network.link_stats`."""
    sent = link_stats['sent'].sum()
    if sent == 0:
        return 0.0
    return float((link_stats['lost'].sum() + link_stats['dropped'].sum()) /
                 sent)


def cache_hit_ratio(slots_switch, slots_fallback):
    total = slots_switch + slots_fallback
    if total == 0:
        return 0.0
    return slots_switch / total


def fairness(rates):
    return jain_index(rates)


def spearman(x, y):
    """Spearman rank correlation, nan for constant inputs."""
    x = numpy.asarray(x, dtype=numpy.float64)
    y = numpy.asarray(y, dtype=numpy.float64)
    if x.size < 2 or numpy.all(x == x[0]) or numpy.all(y == y[0]):
        return float('nan')
    rho, _ = scipy.stats.spearmanr(x, y)
    return float(rho)


def windowed_rates(times, sizes, window, t_end):
    """Bytes per second in consecutive windows of ``window`` ns."""
    nbins = max(1, int(numpy.ceil(t_end / window)))
    hist, _ = numpy.histogram(times, bins=nbins, range=(0, nbins*window),
                              weights=sizes)
    return hist * NS / window
