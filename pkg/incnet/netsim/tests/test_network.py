import numpy
import pytest
from incnet.netfilter.config import pipeline_config
from incnet.netfilter.netfilter import read_netfilter
from incnet.netsim.network import Network, LOG_COLUMNS
from incnet.netsim.topology import single_switch
from incnet.utils.io import data_path, read_dict_h5
from incnet.utils.testing import make_switch
from incnet.wire.packet import Packet, Flag, decode_packet, encode_packet


def collect(net, host):
    got = []
    net.attach(host, lambda frame: got.append((net.now, frame)))
    return got


@pytest.mark.unit
def test_delivery_time():
    net = Network(single_switch(1))
    got = collect(net, 's0')
    net.send('c0', 's0', bytes(100))
    net.run_until(10**6)
    # Two hops of 8 ns serialization and 1 us propagation.
    assert [t for t, _ in got] == [2016]
    assert net.stats['delivered'] == 1


@pytest.mark.unit
def test_fifo_tail_drop():
    net = Network(single_switch(1, options={'capacity': 2}))
    got = collect(net, 's0')
    fids = [net.send('c0', 's0', bytes([i])*64) for i in range(5)]
    log = net.run_until(10**6)
    assert [f.fid for _, f in got] == fids[:2]
    assert net.link('c0', 'sw0').dropped == 3
    assert (log.event == 'drop').sum() == 3
    assert list(log.columns) == LOG_COLUMNS


def lossy_run(rate, seed, n=200):
    net = Network(single_switch(1), seed=3)
    net.inject_loss('c0', 'sw0', rate, seed=seed)
    got = collect(net, 's0')

    def source(env):
        for i in range(n):
            net.send('c0', 's0', bytes(64))
            yield env.timeout(100)

    net.env.process(source(net.env))
    return net.run_until(10**7), got


@pytest.mark.unit
def test_loss():
    log, got = lossy_run(0.0, 42)
    assert len(got) == 200
    assert (log.event == 'loss').sum() == 0
    log, got = lossy_run(1.0, 42)
    assert len(got) == 0
    log1, got1 = lossy_run(0.3, 42)
    log2, got2 = lossy_run(0.3, 42)
    assert log1.equals(log2)
    assert 20 < (log1.event == 'loss').sum() < 110
    log3, _ = lossy_run(0.3, 43)
    assert not log1.equals(log3)
    net = Network(single_switch(1))
    with pytest.raises(ValueError):
        net.inject_loss('c0', 'sw0', 1.5)


@pytest.mark.unit
def test_reorder():
    net = Network(single_switch(1), options={'reorder': 5000}, seed=11)
    got = collect(net, 's0')
    fids = [net.send('c0', 's0', bytes(64)) for i in range(50)]
    net.run_until(10**7)
    order = [f.fid for _, f in got]
    assert sorted(order) == fids
    assert order != fids


@pytest.mark.unit
def test_inc_switch_turnaround():
    cfg = pipeline_config(read_netfilter(data_path('kvquery.nf')))
    st, entry = make_switch([cfg], clear_mode='nop')
    st.registers[0, 20] = 42
    net = Network(single_switch(2), switch=st)
    back = collect(net, 'c0')
    server = collect(net, 's0')
    keys = numpy.zeros(32, dtype=numpy.uint32)
    keys[0] = 20
    p = Packet(gaid=7, keys=keys, bitmap=1)
    net.send('c0', 's0', encode_packet(p))
    net.run_until(10**6)
    assert server == []
    assert len(back) == 1
    q = decode_packet(back[0][1].data)
    assert q.values[0] == 42
    assert q.has(Flag.IS_SA)
    assert back[0][1].src == 's0'
    net.send('c0', 's0', b'not a packet')
    net.run_until(2*10**6)
    assert st.stats['malformed'] == 1
    assert net.stats['absorbed'] == 1


@pytest.mark.unit
def test_export_log(tmp_path):
    net = Network(single_switch(1))
    net.send('c0', 's0', bytes(10))
    log = net.run_until(10**6)
    csv = str(tmp_path / 'log.csv')
    net.export_log(csv)
    with open(csv) as f:
        assert f.readline().strip() == ','.join(LOG_COLUMNS)
    h5 = str(tmp_path / 'log.h5')
    net.export_log(h5)
    data = read_dict_h5(h5, 'event_log')
    assert list(data['time_ns']) == list(log.time_ns)
    assert data['event'][0] == b'send'


@pytest.mark.unit
def test_event_log_limit():
    net = Network(single_switch(1), options={'log_limit': 4})
    for _ in range(5):
        net.send('c0', 's0', bytes(10))
    log = net.run_until(10**6)
    assert len(log) == 4
    assert log.event.iloc[-1] == 'deliver'
    quiet = Network(single_switch(1), options={'event_log': False})
    quiet.send('c0', 's0', bytes(10))
    assert len(quiet.run_until(10**6)) == 0
