import numpy
import pytest
from incnet.harness import oracle, workloads


@pytest.mark.unit
def test_streams_are_reproducible():
    a = [g.random(3) for g in workloads.streams(11, 2)]
    b = [g.random(3) for g in workloads.streams(11, 2)]
    numpy.testing.assert_array_equal(a, b)
    assert not numpy.array_equal(a[0], a[1])


@pytest.mark.unit
def test_zipf_weights():
    w = workloads.zipf_weights(4, a=1.0)
    assert w.sum() == pytest.approx(1.0)
    assert w[0] == pytest.approx(2*w[1])
    numpy.testing.assert_allclose(workloads.zipf_weights(5, a=0), 0.2)


@pytest.mark.unit
def test_word_batches():
    rng = workloads.streams(3, 1)[0]
    batches = workloads.word_batches(rng, 2, 50, 400, batch=8)
    assert len(batches) == 2
    for client in batches:
        assert all(0 < len(b) <= 8 for b in client)
        assert sum(sum(b.values()) for b in client) == 400
    totals = oracle.reduce_counts(batches)
    assert sum(totals.values()) == 800
    assert all(k.startswith('k') for k in totals)


@pytest.mark.unit
def test_word_stream_repeats_keys():
    rng = workloads.streams(3, 1)[0]
    stream = workloads.word_stream(rng, 2, 50, 400, batch=8)
    assert [len(s) for s in stream] == [50, 50]
    for client in stream:
        assert all(sum(b.values()) == 8 for b in client)
        seen = [k for b in client for k in b]
        assert len(seen) > len(set(seen))
    assert sum(oracle.reduce_counts(stream).values()) == 800


@pytest.mark.unit
def test_force_overflow():
    rng = workloads.streams(5, 1)[0]
    t = numpy.zeros(1000)
    out = workloads.force_overflow(rng, t, 0.01)
    assert numpy.count_nonzero(numpy.abs(out) == 1e9) == 10
    assert not t.any()
    assert workloads.force_overflow(rng, t, 0.0) is not t


@pytest.mark.unit
def test_ballots_and_tally():
    rng = workloads.streams(9, 1)[0]
    b = workloads.ballots(rng, 3, 4, n_rounds=6, bias=1.0)
    assert b.shape == (6, 3, 4)
    assert (b.sum(axis=2) == 1).all()
    counts, decisions = oracle.tally(b)
    assert (counts.max(axis=1) == 3).all()
    numpy.testing.assert_array_equal(decisions, numpy.argmax(b[:, 0], axis=1))


@pytest.mark.unit
def test_lock_schedule():
    rng = workloads.streams(2, 1)[0]
    sched = workloads.lock_schedule(rng, 3, 2, 4, hold=100)
    assert [len(s) for s in sched] == [4, 4, 4]
    for client in sched:
        starts = [s for s, _, _ in client]
        assert starts == sorted(starts)
        assert set(n for _, n, _ in client) <= {'lock0', 'lock1'}
    numpy.testing.assert_array_equal(oracle.lock_grants(sched), [4, 4, 4])


@pytest.mark.unit
def test_oracle_helpers():
    numpy.testing.assert_array_equal(
            oracle.sum_tensors([[1.0, 2.0], [3.0, 4.0]]), [4.0, 6.0])
    assert oracle.quantization_bound(4, 8) == pytest.approx(2e-8)
    keys, values = oracle.dict_arrays({'b': 2, 'a': 1, 'z': 0})
    assert keys.tolist() == [b'a', b'b']
    assert values.tolist() == [1.0, 2.0]
    assert oracle.array_dict(keys, values) == {'a': 1.0, 'b': 2.0}
