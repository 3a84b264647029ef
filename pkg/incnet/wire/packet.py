"""Bit exact packet codec.

Layout (big endian)::

    0   magic 0x4E52        u16
    2   version             u8
    3   mode                u8   0 = key/value slots, 1 = elided keys
    4   gaid                u32
    8   seq                 u32
    12  srrt                u16
    14  flags               u16  isOf, isCnf, isClr, isCross, ECN, isSA,
                                 isMcast in bits 0-6, flip in bit 7
    16  op_type             u8   low nibble Stream.modify operator, high
                                 nibble method filter index
    17  pad                 u8   always zero
    18  bitmap              u32
    22  counter_index       u32
    26  counter_threshold   u32
    30  payload length      u16
    32  32 x (key u32, value i32)   or   32 x value i32
        payload bytes

An empty payload gives 288 bytes in kv mode and 160 bytes with elided keys.
"""

import enum
import numpy
import struct
from incnet.utils.misc import IncnetError

MAGIC = 0x4E52
VERSION = 1
NSLOTS = 32
MAX_INT = 2**31 - 1
MIN_INT = -2**31
# Sequence numbers wrap modulo SEQ_SPACE.
SEQ_SPACE = 2**32
HEADER = struct.Struct('>HBBIIHHBBIIIH')
KV_SLOTS = numpy.dtype([('key', '>u4'), ('value', '>i4')])
ELIDED_SLOTS = numpy.dtype('>i4')
KV_SIZE = HEADER.size + NSLOTS * KV_SLOTS.itemsize
ELIDED_SIZE = HEADER.size + NSLOTS * ELIDED_SLOTS.itemsize
MAX_PAYLOAD = 2**16 - 1
FLIP_BIT = 0x80


class MalformedPacket(IncnetError):
    """Byte string is not a well formed packet."""
    pass


class ElideViolation(IncnetError):
    """Keys are not the contiguous run counter_index..counter_index+31."""
    pass


class Flag(enum.IntFlag):
    NONE = 0
    IS_OF = 1
    IS_CNF = 2
    IS_CLR = 4
    IS_CROSS = 8
    ECN = 16
    IS_SA = 32
    IS_MCAST = 64


ALL_FLAGS = 0x7F


def elided_keys(counter_index):
    """Keys implied by key elision: counter_index + i modulo 2**32."""
    keys = numpy.arange(NSLOTS, dtype=numpy.uint64) + int(counter_index)
    return (keys & 0xFFFFFFFF).astype(numpy.uint32)


class Packet(object):
    """The on-wire unit.

    Parameters
    ----------
    gaid : int
        Global application id.
    seq : int
        Per connection sequence number.
    srrt : int
        Switch bitmap slot of the sending flow.
    flip : int
        Reliability bit, (seq div w_max) mod 2.
    flags : :class:`Flag`
        Flag set.
    op_type : int
        Operator selector.
    bitmap : int
        Bit i enables slot i.
    counter_index : int
        CntFwd counter address (and base key when keys are elided).
    counter_threshold : int
        CntFwd threshold, 0 disables CntFwd.
    keys : array_like
        32 unsigned keys.
    values : array_like
        32 signed values.
    payload : bytes
        Opaque data.
    """

    def __init__(self, gaid=0, seq=0, srrt=0, flip=0, flags=Flag.NONE,
                 op_type=0, bitmap=0, counter_index=0, counter_threshold=0,
                 keys=None, values=None, payload=b''):
        self.gaid = gaid
        self.seq = seq
        self.srrt = srrt
        self.flip = flip
        self.flags = Flag(flags)
        self.op_type = op_type
        self.bitmap = bitmap
        self.counter_index = counter_index
        self.counter_threshold = counter_threshold
        if keys is None:
            self.keys = numpy.zeros(NSLOTS, dtype=numpy.uint32)
        else:
            self.keys = numpy.array(keys, dtype=numpy.uint32)
        if values is None:
            self.values = numpy.zeros(NSLOTS, dtype=numpy.int32)
        else:
            self.values = numpy.array(values, dtype=numpy.int32)
        if self.keys.shape != (NSLOTS,) or self.values.shape != (NSLOTS,):
            raise ValueError('A packet carries exactly {} slots.'.format(NSLOTS))
        self.payload = bytes(payload)
        # Encoding mode the packet arrived in and host side annotations;
        # neither is part of equality.
        self.elided = False
        self.meta = {}

    def has(self, flag):
        return bool(self.flags & flag)

    def set(self, flag, on=True):
        if on:
            self.flags = Flag(int(self.flags) | int(flag))
        else:
            self.flags = Flag(int(self.flags) & ~int(flag) & ALL_FLAGS)

    def enabled(self):
        """Boolean mask of bitmap enabled slots."""
        bits = numpy.arange(NSLOTS, dtype=numpy.uint64)
        return ((numpy.uint64(self.bitmap) >> bits) & numpy.uint64(1)).astype(bool)

    def set_enabled(self, mask):
        mask = numpy.asarray(mask, dtype=bool)
        self.bitmap = int(numpy.sum(1 << numpy.nonzero(mask)[0].astype(numpy.int64)))

    @property
    def filter_index(self):
        return self.op_type >> 4

    @property
    def modify_op(self):
        return self.op_type & 0x0F

    def is_elidable(self):
        return numpy.array_equal(self.keys, elided_keys(self.counter_index))

    def copy(self):
        p = Packet(self.gaid, self.seq, self.srrt, self.flip, self.flags,
                   self.op_type, self.bitmap, self.counter_index,
                   self.counter_threshold, self.keys.copy(),
                   self.values.copy(), self.payload)
        p.elided = self.elided
        p.meta = dict(self.meta)
        return p

    def header_tuple(self):
        return (self.gaid, self.seq, self.srrt, self.flip, int(self.flags),
                self.op_type, self.bitmap, self.counter_index,
                self.counter_threshold)

    def __eq__(self, other):
        if not isinstance(other, Packet):
            return NotImplemented
        return (self.header_tuple() == other.header_tuple() and
                numpy.array_equal(self.keys, other.keys) and
                numpy.array_equal(self.values, other.values) and
                self.payload == other.payload)

    def __ne__(self, other):
        eq = self.__eq__(other)
        return eq if eq is NotImplemented else not eq

    def __repr__(self):
        return ('Packet(gaid={}, seq={}, srrt={}, flip={}, flags={!r}, '
                'bitmap={:#010x}, counter={}/{}, payload={}B)'.format(
                    self.gaid, self.seq, self.srrt, self.flip, self.flags,
                    self.bitmap, self.counter_index, self.counter_threshold,
                    len(self.payload)))


def packet_size(elide_keys=False, payload_len=0):
    return (ELIDED_SIZE if elide_keys else KV_SIZE) + payload_len


def encode_packet(p, elide_keys=None):
    """Encode a packet.

    Parameters
    ----------
    p : :class:`Packet`
        Packet to encode.
    elide_keys : bool
        Drop the key fields. Defaults to the mode the packet was decoded
        from.

    Returns
    -------
    data : bytes
        Wire bytes.
    """
    if elide_keys is None:
        elide_keys = p.elided
    if len(p.payload) > MAX_PAYLOAD:
        raise MalformedPacket('Payload of {} bytes does not fit the length '
                              'field.'.format(len(p.payload)))
    if elide_keys and not p.is_elidable():
        raise ElideViolation('Keys must be counter_index..counter_index+31 '
                             'to elide them.')
    flags = int(p.flags) | (FLIP_BIT if p.flip else 0)
    header = HEADER.pack(MAGIC, VERSION, 1 if elide_keys else 0, p.gaid,
                         p.seq, p.srrt, flags, p.op_type, 0, p.bitmap,
                         p.counter_index, p.counter_threshold,
                         len(p.payload))
    if elide_keys:
        slots = p.values.astype(ELIDED_SLOTS)
    else:
        slots = numpy.empty(NSLOTS, dtype=KV_SLOTS)
        slots['key'] = p.keys
        slots['value'] = p.values
    return header + slots.tobytes() + p.payload


def decode_packet(b):
    """Decode wire bytes, raising MalformedPacket on any layout error."""
    b = bytes(b)
    if len(b) < HEADER.size:
        raise MalformedPacket('Truncated header ({} bytes).'.format(len(b)))
    (magic, version, mode, gaid, seq, srrt, flags, op_type, pad, bitmap,
     counter_index, threshold, plen) = HEADER.unpack_from(b)
    if magic != MAGIC or version != VERSION:
        raise MalformedPacket('Bad magic/version {:#06x}/{}.'.format(magic,
                                                                   version))
    if mode not in (0, 1) or pad != 0 or flags & ~(ALL_FLAGS | FLIP_BIT):
        raise MalformedPacket('Reserved header bits set.')
    fixed = ELIDED_SIZE if mode else KV_SIZE
    if len(b) != fixed + plen:
        raise MalformedPacket('Length {} does not match mode {} with a {} '
                              'byte payload.'.format(len(b), mode, plen))
    if mode:
        values = numpy.frombuffer(b, dtype=ELIDED_SLOTS, count=NSLOTS,
                                  offset=HEADER.size)
        keys = elided_keys(counter_index)
    else:
        slots = numpy.frombuffer(b, dtype=KV_SLOTS, count=NSLOTS,
                                 offset=HEADER.size)
        keys = slots['key']
        values = slots['value']
    p = Packet(gaid, seq, srrt, (flags & FLIP_BIT) >> 7,
               Flag(flags & ALL_FLAGS), op_type, bitmap, counter_index,
               threshold, keys, values, b[fixed:])
    p.elided = bool(mode)
    return p
