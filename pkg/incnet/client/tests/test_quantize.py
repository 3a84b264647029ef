import numpy
import pytest
from hypothesis import given, settings, strategies as st
from incnet.client.quantize import Quantizer, quantize, dequantize
from incnet.wire.packet import MAX_INT, MIN_INT


@pytest.mark.unit
def test_round_half_away_from_zero():
    q = Quantizer(0)
    assert q.exact(0.5) == 1
    assert q.exact(-0.5) == -1
    assert q.exact(2.4) == 2
    assert Quantizer(2).exact(1.25) == 125
    assert Quantizer(2).exact(-1.25) == -125
    assert q.exact(7) == 7


@pytest.mark.unit
def test_quantize_array_overflow():
    q = Quantizer(0)
    values, overflow = q.quantize_array([1.0, -2.5, 3e10, -3e10])
    assert values.tolist() == [1, -3, MAX_INT, MIN_INT]
    assert overflow.tolist() == [False, False, True, True]
    ints, of = q.quantize_array(numpy.array([3, -4], dtype=numpy.int64))
    assert ints.tolist() == [3, -4]
    assert not of.any()


@pytest.mark.unit
def test_scalar_helpers():
    q = Quantizer(8)
    assert quantize(1.0, q) == 10**8
    assert quantize(100.0, q) is None
    assert dequantize(quantize(1.5, q), q) == pytest.approx(1.5)


@pytest.mark.unit
@settings(max_examples=200, deadline=None)
@given(st.floats(min_value=-1000, max_value=1000, allow_nan=False),
       st.integers(min_value=0, max_value=6))
def test_quantization_error_bound(x, precision):
    q = Quantizer(precision)
    values, overflow = q.quantize_array([x])
    assert not overflow[0]
    err = abs(q.dequantize(values)[0] - x)
    assert err <= 0.5 / 10**precision + 1e-9
