import numpy
import pytest
from hypothesis import given, settings, strategies as st
from incnet.wire.packet import (
        Packet, Flag, encode_packet, decode_packet, packet_size,
        MalformedPacket, ElideViolation, KV_SIZE, ELIDED_SIZE, NSLOTS,
        MAX_INT, MIN_INT
        )
from incnet.wire.payload import encode_payload, decode_payload
from incnet.utils.testing import random_packet


@pytest.mark.unit
def test_zero_packet():
    p = Packet()
    b = encode_packet(p, False)
    assert len(b) == KV_SIZE == 288
    assert decode_packet(b) == p
    assert 192 <= len(b) <= 320


@pytest.mark.unit
def test_elided_size():
    p = Packet(counter_index=100, keys=numpy.arange(100, 132))
    full = encode_packet(p, False)
    short = encode_packet(p, True)
    assert len(full) - len(short) == NSLOTS * 4
    assert len(short) == ELIDED_SIZE == 160
    assert decode_packet(short) == decode_packet(full) == p


@pytest.mark.unit
def test_elide_violation():
    p = Packet(counter_index=100, keys=numpy.arange(101, 133))
    with pytest.raises(ElideViolation):
        encode_packet(p, True)


@pytest.mark.unit
def test_elided_keys_wrap():
    p = Packet(counter_index=2**32 - 2)
    p.keys = (numpy.arange(NSLOTS, dtype=numpy.uint64) + 2**32 - 2) % 2**32
    p.keys = p.keys.astype(numpy.uint32)
    q = decode_packet(encode_packet(p, True))
    assert q.keys[1] == 2**32 - 1
    assert q.keys[2] == 0
    assert q == p


@pytest.mark.unit
def test_truncated():
    b = encode_packet(Packet(payload=b'abc'), False)
    with pytest.raises(MalformedPacket):
        decode_packet(b[:-1])
    with pytest.raises(MalformedPacket):
        decode_packet(b[:10])
    with pytest.raises(MalformedPacket):
        decode_packet(b'')


@pytest.mark.unit
def test_bad_magic():
    b = bytearray(encode_packet(Packet(), False))
    b[0] ^= 0xFF
    with pytest.raises(MalformedPacket):
        decode_packet(bytes(b))


@pytest.mark.unit
def test_random_round_trip():
    rng = numpy.random.default_rng(7)
    for i in range(2000):
        elided = i % 3 == 0
        p = random_packet(rng, elided=elided)
        b = encode_packet(p, elided)
        q = decode_packet(b)
        assert q == p
        assert encode_packet(q) == b


@pytest.mark.unit
def test_flags_independent():
    base = encode_packet(Packet(), False)
    for flag in Flag:
        if flag == Flag.NONE:
            continue
        b = encode_packet(Packet(flags=flag), False)
        diff = numpy.unpackbits(numpy.frombuffer(base, dtype=numpy.uint8) ^
                                numpy.frombuffer(b, dtype=numpy.uint8))
        assert diff.sum() == 1
    b = encode_packet(Packet(flip=1), False)
    diff = numpy.unpackbits(numpy.frombuffer(base, dtype=numpy.uint8) ^
                            numpy.frombuffer(b, dtype=numpy.uint8))
    assert diff.sum() == 1


@pytest.mark.unit
def test_extreme_values():
    values = numpy.full(NSLOTS, MIN_INT, dtype=numpy.int32)
    values[::2] = MAX_INT
    p = Packet(values=values, bitmap=2**32 - 1, seq=2**32 - 1)
    q = decode_packet(encode_packet(p, False))
    assert q.values[0] == MAX_INT
    assert q.values[1] == MIN_INT
    assert q.enabled().all()


@pytest.mark.unit
def test_enabled_mask():
    p = Packet()
    mask = numpy.zeros(NSLOTS, dtype=bool)
    mask[[0, 5, 31]] = True
    p.set_enabled(mask)
    assert p.bitmap == 1 | (1 << 5) | (1 << 31)
    assert numpy.array_equal(p.enabled(), mask)


@pytest.mark.unit
def test_set_flags():
    p = Packet()
    p.set(Flag.IS_CLR)
    p.set(Flag.ECN)
    assert p.has(Flag.IS_CLR) and p.has(Flag.ECN)
    p.set(Flag.IS_CLR, False)
    assert not p.has(Flag.IS_CLR)
    assert p.flags == Flag.ECN


@pytest.mark.unit
def test_payload_codec():
    assert encode_payload({}) == b''
    assert decode_payload(b'') == {}
    fields = {'kind': 'data', 'x': [['a', 3]], 'c': 7}
    b = encode_payload(fields)
    assert b == b'{"c":7,"kind":"data","x":[["a",3]]}'
    assert decode_payload(b) == fields
    with pytest.raises(MalformedPacket):
        decode_payload(b'[1,2]')


@pytest.mark.unit
def test_packet_size():
    assert packet_size(False, 10) == 298
    assert packet_size(True) == 160
    assert len(encode_packet(Packet(payload=b'x'*32), False)) == 320


@pytest.mark.unit
@settings(max_examples=200, deadline=None)
@given(st.integers(min_value=0, max_value=2**32 - 1),
       st.lists(st.integers(min_value=MIN_INT, max_value=MAX_INT),
                min_size=NSLOTS, max_size=NSLOTS),
       st.binary(max_size=64))
def test_elided_property(base, values, payload):
    keys = (numpy.arange(NSLOTS, dtype=numpy.uint64) + base) % 2**32
    p = Packet(counter_index=base, keys=keys.astype(numpy.uint32),
               values=values, payload=payload)
    assert decode_packet(encode_packet(p, True)) == \
            decode_packet(encode_packet(p, False))
