import numpy
import pytest
from incnet.client.stream import (
        ClientMap, UnboundField, build_stream, hash_key, ring_rows,
        RING_CHUNKS
        )
from incnet.netfilter.netfilter import NetFilter, CntFwd
from incnet.wire.packet import Flag, MAX_INT, NSLOTS, encode_packet
from incnet.wire.payload import decode_payload

COLLECTIVE = NetFilter('DT', precision=2, get='Reply.tensor',
                       add_to='Request.tensor', clear='copy',
                       cntfwd=CntFwd('ALL', 2, 'ClientID'))
REDUCE = NetFilter('MR', add_to='Request.kvs')
LOCK = NetFilter('LS', cntfwd=CntFwd('SRC', 1, 'Request.kvs'))


@pytest.mark.unit
def test_hash_key():
    a = hash_key('apple')
    assert a == hash_key('apple')
    assert 0 <= a < 0xFFFFFFFF
    assert hash_key('apple', seed=1) != a


@pytest.mark.unit
def test_ring_layout():
    assert ring_rows(0) == 0
    assert ring_rows(1) == 256
    amap = ClientMap(3, rings=(10, 2, 0))
    assert amap.collective_in_switch
    assert amap.chunk_counter(0) == 10
    assert amap.chunk_counter(1) == 11
    assert amap.chunk_counter(2) == 10 + NSLOTS
    assert amap.chunk_counter(2*RING_CHUNKS) == 10
    assert amap.release_distance() == 2*RING_CHUNKS
    shadow = ClientMap(3, rings=(10, 1, 500))
    assert shadow.chunk_counter(RING_CHUNKS) == 10 + 500
    assert shadow.chunk_counter(2*RING_CHUNKS) == 10


@pytest.mark.unit
def test_install_and_revoke():
    amap = ClientMap(3)
    laddr = hash_key('w')
    amap.install([[laddr, 'w', 4, 20, -1, 2]])
    assert amap.lookup('w')[1]['row'] == 20
    amap.revoke(laddr, 2)
    assert amap.lookup('w')[1] is None
    # Stale mapping from before the revocation is ignored.
    amap.install([[laddr, 'w', 4, 20, -1, 2]])
    assert amap.lookup('w')[1] is None
    amap.install([[laddr, 'w', 5, 21, -1, 3]])
    assert amap.lookup('w')[1]['seg'] == 5
    assert amap.drain_counts() == {laddr: 4}
    assert amap.drain_counts() == {}


@pytest.mark.unit
def test_collective_chunks():
    amap = ClientMap(3, rings=(1, 1, 0))
    values = numpy.linspace(-1, 1, 40)
    values[5] = 1e9
    packets = build_stream({'tensor': values}, COLLECTIVE, amap,
                           request='Request', first_chunk=4)
    assert len(packets) == 2
    first, second = packets
    assert first.has(Flag.IS_CNF)
    assert first.counter_threshold == 2
    assert first.counter_index == amap.chunk_counter(4)
    assert first.bitmap == 2**NSLOTS - 1
    assert second.bitmap == 2**8 - 1
    assert first.values[5] == MAX_INT
    assert first.meta['exact'][5] == 10**11
    assert decode_payload(second.payload)['tag'] == 5
    assert len(encode_packet(first, True)) < len(encode_packet(first, False))


@pytest.mark.unit
def test_collective_in_software():
    amap = ClientMap(3)
    p, = build_stream({'tensor': numpy.ones(4)}, COLLECTIVE, amap,
                      request='Request')
    assert p.has(Flag.IS_CROSS)
    assert decode_payload(p.payload)['exact'] == [100] * 4


@pytest.mark.unit
def test_map_stream_cached_and_crossing():
    amap = ClientMap(3)
    amap.install([[hash_key('a'), 'a', 7, 40, -1, 1]])
    packets = build_stream({'kvs': {'a': 2, 'b': 3, 'c': 2**40}}, REDUCE,
                           amap, request='Request')
    cached, cross = packets
    assert not cached.has(Flag.IS_CROSS)
    assert cached.bitmap == 1 << 7
    assert cached.keys[7] == 40 and cached.values[7] == 2
    assert cross.has(Flag.IS_CROSS) and cross.has(Flag.IS_OF)
    payload = decode_payload(cross.payload)
    assert payload['names'] == ['b']
    assert payload['extra'] == [['c', 2**40]]
    assert cross.keys[0] == hash_key('b')


@pytest.mark.unit
def test_counter_stream():
    amap = ClientMap(3)
    p, = build_stream({'kvs': {'lock0': 1}}, LOCK, amap, request='Request')
    assert p.has(Flag.IS_CNF) and p.has(Flag.IS_CROSS)
    assert p.counter_threshold == 1
    assert p.meta['lock'] == 'lock0'
    with pytest.raises(UnboundField):
        build_stream({}, LOCK, amap, request='Request')
