"""Fixed point conversion of INC values."""

import numpy
from incnet.wire.packet import MAX_INT, MIN_INT


class Quantizer(object):
    """Scale reals by 10**precision and round half away from zero.

    Parameters
    ----------
    precision : int
        Decimal digits kept after the point.
    """

    def __init__(self, precision=0):
        self.precision = int(precision)
        self.scale = 10**self.precision

    def exact(self, x):
        """Unbounded integer image of x."""
        if isinstance(x, (int, numpy.integer)) and self.precision == 0:
            return int(x)
        y = abs(float(x)) * self.scale
        q = int(numpy.floor(y + 0.5))
        return -q if x < 0 else q

    def quantize_array(self, x):
        """Vectorised quantize.

        Returns
        -------
        values : :class:`numpy.ndarray`
            int64 fixed point values, clipped to the int32 range.
        overflow : :class:`numpy.ndarray`
            Boolean mask of elements outside the int32 range.
        """
        x = numpy.asarray(x)
        if x.dtype.kind in 'iu' and self.precision == 0:
            q = x.astype(numpy.int64)
        else:
            y = numpy.floor(numpy.abs(x.astype(numpy.float64)) * self.scale
                            + 0.5)
            q = numpy.where(x < 0, -y, y)
        overflow = (q > MAX_INT) | (q < MIN_INT)
        return numpy.clip(q, MIN_INT, MAX_INT).astype(numpy.int64), overflow

    def dequantize(self, q, real=True):
        if not real:
            return q
        return numpy.asarray(q, dtype=numpy.float64) / self.scale


def quantize(x, q):
    """Fixed point image of x, or None when it does not fit in int32."""
    v = q.exact(x)
    if v > MAX_INT or v < MIN_INT:
        return None
    return v


def dequantize(v, q):
    return v / q.scale
