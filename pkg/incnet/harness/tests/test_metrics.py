import math
import numpy
import pandas
import pytest
from incnet.harness import metrics


@pytest.mark.unit
def test_percentiles():
    lat = metrics.percentiles(numpy.arange(1, 101))
    assert lat['p50'] == pytest.approx(50.5)
    assert lat['p99'] == pytest.approx(99.01)
    empty = metrics.percentiles([])
    assert math.isnan(empty['p50']) and math.isnan(empty['p99'])


@pytest.mark.unit
def test_goodput_and_hits():
    assert metrics.goodput(1000, 1e9) == pytest.approx(1000.0)
    assert metrics.goodput(1000, 0) == 0.0
    assert metrics.cache_hit_ratio(3, 1) == 0.75
    assert metrics.cache_hit_ratio(0, 0) == 0.0


@pytest.mark.unit
def test_loss_ratio():
    stats = pandas.DataFrame({'sent': [100, 100], 'lost': [1, 0],
                              'dropped': [0, 3]})
    assert metrics.loss_ratio(stats) == pytest.approx(0.02)
    idle = pandas.DataFrame({'sent': [0], 'lost': [0], 'dropped': [0]})
    assert metrics.loss_ratio(idle) == 0.0


@pytest.mark.unit
def test_fairness():
    assert metrics.fairness([5, 5, 5]) == pytest.approx(1.0)
    assert metrics.fairness([1, 0]) == pytest.approx(0.5)


@pytest.mark.unit
def test_spearman():
    assert metrics.spearman([1, 2, 3], [10, 20, 30]) == pytest.approx(1.0)
    assert metrics.spearman([1, 2, 3], [3, 2, 1]) == pytest.approx(-1.0)
    assert math.isnan(metrics.spearman([1, 1, 1], [1, 2, 3]))
    assert math.isnan(metrics.spearman([1], [2]))


@pytest.mark.unit
def test_windowed_rates():
    rates = metrics.windowed_rates([0, 10, 150], [100, 100, 50], 100, 200)
    numpy.testing.assert_allclose(rates, [200*1e7, 50*1e7])
