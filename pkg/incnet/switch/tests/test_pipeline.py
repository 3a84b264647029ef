import numpy
import pytest
from hypothesis import given, settings, strategies as st_
from incnet.netfilter.config import SwitchProgramConfig, pipeline_config
from incnet.netfilter.netfilter import read_netfilter
from incnet.switch.pipeline import (
        admit, check_retransmission, process_packet, process_frame,
        INC_PROCESS, FORWARD_PLAIN, BYPASS, FORWARD, SOURCE
        )
from incnet.switch.primitives import (
        exec_stream_modify, exec_map_ops, exec_cntfwd, Trip, TO_SERVER,
        FROM_SERVER, CNT_PASS, CNT_DROP, CNT_FIRE, CNT_POLL
        )
from incnet.switch.state import RegisterAccessError
from incnet.utils.io import data_path, read_dict_h5
from incnet.utils.testing import window_trace, flip_of, make_switch
from incnet.wire.packet import (
        Packet, Flag, elided_keys, encode_packet, MAX_INT, MIN_INT, NSLOTS
        )

ADD = SwitchProgramConfig(add_to_enabled=True)


def slot_packet(keys, values, **kwargs):
    k = numpy.zeros(NSLOTS, dtype=numpy.uint32)
    v = numpy.zeros(NSLOTS, dtype=numpy.int32)
    k[:len(keys)] = keys
    v[:len(values)] = values
    bitmap = kwargs.pop('bitmap', (1 << len(keys)) - 1)
    return Packet(gaid=kwargs.pop('gaid', 7), keys=k, values=v,
                  bitmap=bitmap, **kwargs)


@pytest.mark.unit
def test_admit():
    st, entry = make_switch([ADD])
    p = slot_packet([10], [3], gaid=999)
    out = process_packet(p, st, now=3)
    assert out == [(FORWARD, p)]
    assert not st.registers.any()
    assert admit(Packet(gaid=999), st, 1) == FORWARD_PLAIN
    assert admit(Packet(gaid=7), st, 5) == INC_PROCESS
    assert entry.last_seen == 5
    assert admit(Packet(gaid=7, flags=Flag.IS_OF), st, 6) == BYPASS
    assert admit(Packet(gaid=7, flags=Flag.IS_OF), st, 6,
                 FROM_SERVER) == INC_PROCESS


@pytest.mark.unit
def test_check_retransmission():
    st, entry = make_switch([ADD], w_max=256)
    p = Packet(gaid=7, seq=0, flip=0)
    assert check_retransmission(p, st)
    assert st.flows[0].request[0] == 0
    assert not check_retransmission(p, st)
    q = Packet(gaid=7, seq=256, flip=1)
    assert check_retransmission(q, st)
    assert st.flows[0].request[0] == 1
    r = Packet(gaid=7, seq=0, srrt=0)
    assert check_retransmission(r, st, FROM_SERVER)
    assert not check_retransmission(r, st, FROM_SERVER)


@pytest.mark.unit
def test_unknown_srrt():
    st, entry = make_switch([ADD])
    p = slot_packet([10], [3], srrt=9)
    out = process_packet(p, st)
    assert len(out) == 1 and out[0][1] == p
    assert st.stats['unknown_srrt'] == 1
    assert not st.registers.any()


@pytest.mark.unit
def test_stream_modify():
    values = numpy.full(NSLOTS, 3)
    out, of = exec_stream_modify('MAX', 10, values, 1)
    assert out[0] == 10 and out[1] == 3 and not of
    out, of = exec_stream_modify('NOP', 10, values, 0xFFFFFFFF)
    assert numpy.array_equal(out, values)
    values[0] = MAX_INT
    out, of = exec_stream_modify('ADD', 1, values, 1)
    assert out[0] == MAX_INT and of
    out, of = exec_stream_modify('MIN', -4, [5]*NSLOTS, 0xFFFFFFFF)
    assert (out == -4).all()
    out, of = exec_stream_modify('SHIFTL', 4, [1]*NSLOTS, 1)
    assert out[0] == 16 and out[1] == 1
    out, of = exec_stream_modify('SHIFTR', 1, [-8]*NSLOTS, 1)
    assert out[0] == -4
    out, of = exec_stream_modify('BNOT', 0, [0]*NSLOTS, 1)
    assert out[0] == -1
    out, of = exec_stream_modify('BXOR', 6, [5]*NSLOTS, 1)
    assert out[0] == 3
    out, of = exec_stream_modify('ASSIGN', 9, [5]*NSLOTS, 2)
    assert out[0] == 5 and out[1] == 9
    out, of = exec_stream_modify('BAND', 6, [5]*NSLOTS, 1)
    assert out[0] == 4
    out, of = exec_stream_modify('BOR', 6, [5]*NSLOTS, 1)
    assert out[0] == 7


@pytest.mark.unit
def test_map_ops_round_trip():
    cfg = SwitchProgramConfig(add_to_enabled=True, get_enabled=True,
                              clear_mode='copy')
    st, entry = make_switch([cfg])
    st.registers[0, 10] = 5
    p = slot_packet([10], [3])
    q = exec_map_ops(p.copy(), st, TO_SERVER, cfg, fresh=True)
    assert st.registers[0, 10] == 8
    assert q.values[0] == 8
    q = exec_map_ops(p.copy(), st, TO_SERVER, cfg, fresh=False)
    assert st.registers[0, 10] == 8
    assert q.values[0] == 8
    r = slot_packet([10], [0], flags=Flag.IS_CLR)
    q = exec_map_ops(r, st, FROM_SERVER, cfg, fresh=True)
    assert q.values[0] == 8
    assert st.registers[0, 10] == 0


@pytest.mark.unit
def test_misaddressed():
    st, entry = make_switch([ADD])
    p = slot_packet([5000, 1, 10], [1, 2, 3])
    q = exec_map_ops(p, st, TO_SERVER, ADD)
    assert q.bitmap == 0b100
    assert st.stats['misaddressed'] == 2
    assert st.registers[2, 10] == 3
    assert numpy.count_nonzero(st.registers) == 1


@pytest.mark.unit
def test_saturation_forced_to_server():
    cfg = SwitchProgramConfig(add_to_enabled=True, cntfwd_threshold=2,
                              cntfwd_targets='SRC', cntfwd_key_mode='field')
    st, entry = make_switch([cfg])
    st.registers[0, 10] = MAX_INT - 1
    p = slot_packet([10, 11], [5, 1], flags=Flag.IS_CNF, counter_index=5,
                    counter_threshold=2)
    out = process_packet(p, st)
    assert len(out) == 1 and out[0][0] == FORWARD
    q = out[0][1]
    assert q.has(Flag.IS_OF)
    assert q.bitmap == 0b10
    assert q.values[0] == 5 and q.values[1] == 1
    assert st.registers[0, 10] == MAX_INT - 1
    assert st.registers[1, 11] == 1
    # The duplicate replays the saturation and still reaches the server.
    out = process_packet(p, st)
    q = out[0][1]
    assert q.has(Flag.IS_OF) and q.bitmap == 0b10 and q.values[0] == 5
    assert st.registers[1, 11] == 1
    assert st.counters[5] == 1


@pytest.mark.unit
def test_collective_saturation_sticks():
    cfg = SwitchProgramConfig(add_to_enabled=True, get_enabled=True,
                              clear_mode='copy', cntfwd_threshold=2,
                              cntfwd_targets='ALL', cntfwd_key_mode='ClientID')
    st, entry = make_switch([cfg])
    st.registers[0, 10] = MAX_INT - 1
    q = exec_map_ops(slot_packet([10], [5], seq=0), st, TO_SERVER, cfg)
    assert q.values[0] == MAX_INT
    q = exec_map_ops(slot_packet([10], [-10], seq=1), st, TO_SERVER, cfg)
    assert q.values[0] == MAX_INT
    st.registers[1, 11] = MIN_INT + 1
    q = exec_map_ops(slot_packet([0, 11], [0, -5], bitmap=2), st, TO_SERVER,
                     cfg)
    assert q.values[1] == MIN_INT


@pytest.mark.unit
def test_collective_sentinel_addend_poisons():
    cfg = SwitchProgramConfig(add_to_enabled=True, get_enabled=True,
                              clear_mode='copy', cntfwd_threshold=2,
                              cntfwd_targets='ALL', cntfwd_key_mode='ClientID')
    st, entry = make_switch([cfg])
    exec_map_ops(slot_packet([10, 11], [3, -4], seq=0), st, TO_SERVER, cfg)
    # Elements that overflowed at the client arrive as bare sentinels.
    q = exec_map_ops(slot_packet([10, 11], [MIN_INT, MAX_INT], seq=1), st,
                     TO_SERVER, cfg)
    assert list(q.values[:2]) == [MIN_INT, MAX_INT]
    assert st.registers[0, 10] == MIN_INT
    assert st.registers[1, 11] == MAX_INT
    q = exec_map_ops(slot_packet([10, 11], [7, 7], seq=2), st, TO_SERVER,
                     cfg)
    assert list(q.values[:2]) == [MIN_INT, MAX_INT]
    assert st.stats['saturated'] == 2


@pytest.mark.unit
def test_cntfwd():
    cfg = SwitchProgramConfig(add_to_enabled=True, cntfwd_threshold=2,
                              cntfwd_targets='ALL', cntfwd_key_mode='ClientID')
    st, entry = make_switch([cfg])
    a = Packet(gaid=7, flags=Flag.IS_CNF, counter_index=40,
               counter_threshold=2)
    assert exec_cntfwd(a, st, cfg, fresh=True) == CNT_DROP
    assert st.counters[40] == 1
    assert exec_cntfwd(a, st, cfg, fresh=False) == CNT_POLL
    assert exec_cntfwd(a, st, cfg, fresh=True) == CNT_FIRE
    assert exec_cntfwd(a, st, cfg, fresh=False) == CNT_FIRE
    assert st.counters[40] == 2
    off = Packet(gaid=7, flags=Flag.IS_CNF, counter_index=40)
    assert exec_cntfwd(off, st, cfg) == CNT_PASS
    far = Packet(gaid=7, flags=Flag.IS_CNF, counter_index=5000,
                 counter_threshold=2)
    assert exec_cntfwd(far, st, cfg) == CNT_POLL


@pytest.mark.unit
def test_test_and_set():
    cfg = pipeline_config(read_netfilter(data_path('lock.nf')))
    release = pipeline_config(read_netfilter(data_path('release.nf')))
    st, entry = make_switch([cfg, release], clear_mode='copy', w_max=16)
    req = dict(flags=Flag.IS_CNF, counter_index=50, counter_threshold=1)
    win = process_packet(Packet(gaid=7, srrt=0, seq=0, **req), st, src='c0')
    assert len(win) == 1 and win[0][0] == SOURCE
    assert win[0][1].has(Flag.IS_SA)
    # Duplicate of the winner replays the decision.
    again = process_packet(Packet(gaid=7, srrt=0, seq=0, **req), st, src='c0')
    assert again[0][0] == SOURCE
    lose = process_packet(Packet(gaid=7, srrt=1, seq=0, **req), st, src='c1')
    assert lose == []
    assert process_packet(Packet(gaid=7, srrt=1, seq=0, **req), st,
                          src='c1') == []
    reply = Packet(gaid=7, srrt=0, seq=1, op_type=1 << 4, counter_index=50,
                   flags=Flag.IS_CLR | Flag.IS_CNF)
    process_packet(reply, st, src='s0')
    assert st.counters[50] == 0
    win = process_packet(Packet(gaid=7, srrt=1, seq=1, **req), st, src='c1')
    assert win[0][0] == SOURCE


@pytest.mark.unit
def test_syncagtr_round_trip():
    cfg = pipeline_config(read_netfilter(data_path('agtr.nf')))
    st, entry = make_switch([cfg], clear_mode='copy')
    keys = elided_keys(10)
    common = dict(gaid=7, seq=0, flags=Flag.IS_CNF, bitmap=0xFFFFFFFF,
                  counter_index=10, counter_threshold=2, keys=keys)
    a = numpy.arange(NSLOTS)
    b = 100 * numpy.arange(NSLOTS)
    assert process_packet(Packet(srrt=0, values=a, **common), st,
                          src='c0') == []
    out = process_packet(Packet(srrt=1, values=b, **common), st, src='c1')
    assert len(out) == 1 and out[0][0] == FORWARD
    cross = out[0][1]
    assert cross.has(Flag.IS_SA)
    assert numpy.array_equal(cross.values, a + b)
    reply = cross.copy()
    reply.flags = Flag.IS_SA | Flag.IS_MCAST | Flag.IS_CLR | Flag.IS_CNF
    out = process_packet(reply, st, src='s0')
    assert sorted(h for h, _ in out) == ['c0', 'c1']
    for _, q in out:
        assert numpy.array_equal(q.values, a + b)
    assert not st.registers.any()
    assert st.counters[10] == 0
    # A duplicated reply under copy leaves memory alone.
    out = process_packet(reply, st, src='s0')
    assert len(out) == 2
    assert numpy.array_equal(out[0][1].values, a + b)


@pytest.mark.unit
def test_shadow_clears_partner():
    cfg = pipeline_config(read_netfilter(data_path('agtr.nf')))
    st, entry = make_switch([cfg], clear_mode='shadow')
    assert entry.half == 150
    seg = numpy.arange(NSLOTS)
    st.registers[seg, 10 + seg] = 4
    st.registers[seg, 160 + seg] = 7
    st.counters[160] = 2
    reply = Packet(gaid=7, srrt=0, seq=3, bitmap=0xFFFFFFFF, keys=elided_keys(10),
                   counter_index=10,
                   flags=Flag.IS_MCAST | Flag.IS_CLR | Flag.IS_CNF)
    out = process_packet(reply, st, src='s0')
    assert (out[0][1].values == 4).all()
    assert (st.registers[seg, 10 + seg] == 4).all()
    assert not st.registers[seg, 160 + seg].any()
    assert st.counters[160] == 0
    # Duplicates still read under shadow.
    st.registers[seg, 10 + seg] = 5
    out = process_packet(reply, st, src='s0')
    assert (out[0][1].values == 5).all()


@pytest.mark.unit
def test_lazy_clears_on_overflow_only():
    cfg = SwitchProgramConfig(add_to_enabled=True, get_enabled=True,
                              clear_mode='lazy')
    st, entry = make_switch([cfg], clear_mode='lazy')
    st.registers[0, 10] = 100
    r = slot_packet([10], [0], seq=0, flags=Flag.IS_CLR)
    out = process_packet(r, st, src='s0')
    assert out[0][1].values[0] == 100
    assert st.registers[0, 10] == 100
    r = slot_packet([10], [0], seq=1, flags=Flag.IS_CLR | Flag.IS_OF)
    process_packet(r, st, src='s0')
    assert st.registers[0, 10] == 0


@pytest.mark.unit
def test_serve_in_switch():
    cfg = pipeline_config(read_netfilter(data_path('kvquery.nf')))
    st, entry = make_switch([cfg], clear_mode='nop')
    st.registers[0, 20] = 42
    out = process_packet(slot_packet([20], [0]), st, src='c0')
    assert out[0][0] == SOURCE
    assert out[0][1].values[0] == 42
    assert out[0][1].has(Flag.IS_SA)


@pytest.mark.unit
def test_ecn():
    cfg = pipeline_config(read_netfilter(data_path('monitor.nf')))
    st, entry = make_switch([cfg], clear_mode='nop')
    out = process_packet(slot_packet([10], [1], seq=0), st, qlen=40)
    assert out[0][1].has(Flag.ECN)
    assert st.registers[0, entry.base] == 1
    out = process_packet(slot_packet([10], [1], seq=1), st, qlen=0)
    assert out[0][1].has(Flag.ECN)
    echo = slot_packet([10], [0], seq=1, flags=Flag.ECN, bitmap=0)
    process_packet(echo, st, src='s0')
    assert st.registers[0, entry.base] == 0
    out = process_packet(slot_packet([10], [1], seq=2), st, qlen=32)
    assert not out[0][1].has(Flag.ECN)
    assert st.registers[1, 10] == 0 and st.registers[0, 10] == 3


@pytest.mark.unit
def test_trip_once():
    trip = Trip()
    trip.touch('reg', [0, 1], [10, 10])
    with pytest.raises(RegisterAccessError):
        trip.touch('reg', 1, 10)
    trip.touch('cnt', 1, 10)


@pytest.mark.unit
def test_process_frame():
    st, entry = make_switch([ADD])
    assert process_frame(b'garbage', st) == []
    assert st.stats['malformed'] == 1
    p = Packet(gaid=7, counter_index=10, keys=elided_keys(10),
               values=numpy.ones(NSLOTS), bitmap=0xFFFFFFFF)
    out = process_frame(encode_packet(p, True), st)
    assert len(out) == 1
    assert len(out[0][1]) == 160
    assert st.registers[5, 15] == 1


@pytest.mark.unit
def test_snapshot_dump(tmp_path):
    st, entry = make_switch([ADD])
    process_packet(slot_packet([10], [3]), st)
    snap = st.snapshot()
    assert snap['nonzero_cells'] == 1
    assert snap['stats']['packets'] == 1
    filename = str(tmp_path / 'switch.h5')
    st.dump(filename)
    data = read_dict_h5(filename, 'switch')
    assert data['registers'][0, 10] == 3
    assert data['apps']['7']['name'] == 'app'


def run_trace(rng, w_max, n_packets, loss=0.3, dup=0.4):
    st, entry = make_switch([ADD], clear_mode='nop', w_max=w_max, nflows=1)
    packets = []
    oracle = numpy.zeros(st.registers.shape, dtype=numpy.int64)
    seg = numpy.arange(NSLOTS)
    for s in range(n_packets):
        p = Packet(gaid=7, seq=s, srrt=0, flip=flip_of(s, w_max),
                   keys=rng.integers(2, 302, size=NSLOTS),
                   values=rng.integers(-1000, 1000, size=NSLOTS),
                   bitmap=int(rng.integers(0, 2**32)))
        mask = p.enabled()
        numpy.add.at(oracle, (seg[mask], p.keys[mask].astype(numpy.int64)),
                     p.values[mask])
        packets.append(p)
    seen = set()
    bits = st.flows[0].request
    for s in window_trace(rng, n_packets, w_max, loss=loss, dup=dup):
        p = packets[s]
        if s in seen:
            assert bits[s % w_max] == p.flip
        else:
            assert bits[s % w_max] != p.flip
        process_packet(p, st)
        assert bits[s % w_max] == p.flip
        seen.add(s)
    return st, oracle, packets, seen


@pytest.mark.unit
@pytest.mark.parametrize('w_max,ntraces', [(4, 500), (16, 400), (256, 100)])
def test_idempotence(w_max, ntraces):
    rng = numpy.random.default_rng(7)
    for t in range(ntraces):
        st, oracle, packets, seen = run_trace(rng, w_max, 2*w_max + 3)
        assert len(seen) == len(packets)
        assert numpy.array_equal(st.registers.astype(numpy.int64), oracle)


@pytest.mark.unit
def test_conservation():
    rng = numpy.random.default_rng(11)
    st, oracle, packets, seen = run_trace(rng, 16, 200)
    total = sum(int(p.values[p.enabled()].astype(numpy.int64).sum())
                for p in packets)
    assert int(st.registers.astype(numpy.int64).sum()) == total


@pytest.mark.unit
@settings(max_examples=30, deadline=None)
@given(st_.integers(min_value=0, max_value=2**32 - 1),
       st_.sampled_from([4, 16]),
       st_.floats(min_value=0.0, max_value=0.5))
def test_idempotence_property(seed, w_max, loss):
    rng = numpy.random.default_rng(seed)
    st, oracle, packets, seen = run_trace(rng, w_max, 3*w_max, loss=loss)
    assert numpy.array_equal(st.registers.astype(numpy.int64), oracle)
