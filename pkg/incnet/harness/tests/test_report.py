import numpy
import pytest
from incnet.harness.report import (
        Report, SCHEMA_VERSION, read_report, sidecar, verify
        )

KEY = ('syncagtr', 'default', 7)


def sample(result, livelock=0, violations=0):
    row = {'scenario': KEY[0], 'policy': KEY[1], 'seed': KEY[2],
           'tolerance': 1e-8, 'livelock': livelock, 'calls': 2,
           'completed': 2, 'violations': violations, 'goodput': 1.5}
    return Report([row], {KEY: {'result': numpy.asarray(result)}})


def reference():
    row = {'scenario': KEY[0], 'policy': KEY[1], 'seed': KEY[2],
           'tolerance': 1e-8}
    return Report([row], {KEY: {'result': numpy.array([4.0, 6.0])}})


@pytest.mark.unit
def test_write_and_read(tmp_path):
    filename = str(tmp_path / 'run.csv')
    sample([4.0, 6.0]).write(filename)
    assert sidecar(filename) == str(tmp_path / 'run.h5')
    back = read_report(filename)
    assert back.rows[0]['goodput'] == 1.5
    assert 'schema_version' not in back.rows[0]
    numpy.testing.assert_array_equal(back.arrays[KEY]['result'], [4.0, 6.0])
    assert sample([1.0]).frame['schema_version'][0] == SCHEMA_VERSION


@pytest.mark.unit
def test_read_rejects_foreign_csv(tmp_path):
    filename = tmp_path / 'other.csv'
    filename.write_text('a,b\n1,2\n')
    with pytest.raises(ValueError):
        read_report(str(filename))
    filename.write_text('schema_version,scenario\n99,x\n')
    with pytest.raises(ValueError):
        read_report(str(filename))


@pytest.mark.unit
def test_verify_within_tolerance():
    ledger = verify(sample([4.0 + 5e-9, 6.0]), reference())
    assert list(ledger['check']) == ['livelock', 'result']
    assert ledger['passed'].all()


@pytest.mark.unit
def test_verify_failures():
    ledger = verify(sample([4.0, 6.1], livelock=1, violations=2),
                    reference())
    failed = ledger[~ledger['passed']]
    assert set(failed['check']) == {'livelock', 'invariants', 'result'}
    ledger = verify(sample([4.0]), reference())
    assert 'shape' in ledger.set_index('check').loc['result', 'detail']
    missing = Report(sample([4.0, 6.0]).rows, {})
    ledger = verify(missing, reference())
    assert ledger.set_index('check').loc['result', 'detail'] == 'missing'
    ledger = verify(sample([4.0, 6.0]), Report())
    assert list(ledger['check']) == ['reference']
    assert not ledger['passed'].any()


@pytest.mark.unit
def test_verify_string_arrays():
    keys = numpy.array([b'a', b'b'])
    got = Report([{'scenario': 's', 'policy': 'p', 'seed': 1}],
                 {('s', 'p', 1): {'keys': keys}})
    want = Report([{'scenario': 's', 'policy': 'p', 'seed': 1}],
                  {('s', 'p', 1): {'keys': numpy.array([b'a', b'c'])}})
    assert verify(got, got)['passed'].all()
    assert not verify(got, want)['passed'].all()
