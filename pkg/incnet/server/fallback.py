"""Software execution of the INC primitives and clear policy handling."""

import numpy
from incnet.client.stream import DEFAULT_SEED, hash_key
from incnet.netfilter.netfilter import NOP, OPCODES
from incnet.wire.packet import Flag, NSLOTS, MAX_INT, MIN_INT
from incnet.wire.payload import decode_payload

# Lazily cleared cells are reset once a register passes half the range.
LAZY_LIMIT = MAX_INT // 2


def software_modify(op, para, v):
    """Stream.modify on an unbounded integer."""
    if isinstance(op, str):
        op = OPCODES[op.upper()]
    if op == OPCODES['MAX']:
        return max(v, para)
    if op == OPCODES['MIN']:
        return min(v, para)
    if op == OPCODES['ADD']:
        return v + para
    if op == OPCODES['ASSIGN']:
        return para
    if op == OPCODES['SHIFTL']:
        return v << max(para, 0)
    if op == OPCODES['SHIFTR']:
        return v >> max(para, 0)
    if op == OPCODES['BAND']:
        return v & para
    if op == OPCODES['BOR']:
        return v | para
    if op == OPCODES['BNOT']:
        return ~v
    if op == OPCODES['BXOR']:
        return v ^ para
    return v


def saturated_slots(p, payload):
    """Slots the client enabled but the switch handed back with isOf."""
    if not p.has(Flag.IS_OF) or 'bm' not in payload:
        return []
    lost = int(payload['bm']) & ~p.bitmap
    return [i for i in range(NSLOTS) if lost >> i & 1]


def packet_entries(p, amap=None):
    """(key name, value, modified) triples a packet asks the server to
    execute.

    Crossing slots are named by the payload; saturated in-switch slots are
    named through the cell's mapping; payload entries come last.
    """
    payload = decode_payload(p.payload)
    entries = []
    if p.has(Flag.IS_CROSS):
        mask = p.enabled()
        for i, name in enumerate(payload.get('names', [])):
            if mask[i]:
                entries.append((name, int(p.values[i]), False))
    elif amap is not None:
        for i in saturated_slots(p, payload):
            m = amap.at_cell(i, int(p.keys[i]))
            if m is not None:
                entries.append((m.name, int(p.values[i]), True))
    for name, v in payload.get('extra', []):
        entries.append((name, int(v), False))
    return entries


def fallback_exec(p, nf, store, amap=None, memory=None, seed=DEFAULT_SEED):
    """Run a packet's primitives in software over the ShadowStore.

    Parameters
    ----------
    p : :class:`incnet.wire.packet.Packet`
        Packet with isCross or isOf, or a saturated in-switch packet.
    nf : :class:`incnet.netfilter.netfilter.NetFilter`
        Method filter.
    store : :class:`incnet.server.shadow.ShadowStore`
        Backing store.
    amap : :class:`incnet.server.address_map.AddressMap`, optional
        Mapping table, used to name saturated slots and to write cached
        keys through to their register.
    memory : object, optional
        Register accessor with ``read(seg, row)`` and ``add(seg, row, v)``
        (False when the register would saturate).
    seed : int
        Key hash seed of the application.

    Returns
    -------
    totals : dict
        Key name -> accumulator after the packet, in 64-bit arithmetic.
    """
    gaid = p.gaid
    op, para = nf.modify
    totals = {}
    for name, v, modified in packet_entries(p, amap):
        m = None
        if amap is not None:
            m = amap.lookup(hash_key(name, seed))
            if m is not None and (m.name != name or m.seg < 0):
                m = None
        if nf.add_to != NOP:
            if not modified:
                v = software_modify(op, para, v)
            if (m is None or memory is None or modified or
                    not memory.add(m.seg, m.row, v)):
                store.add(gaid, name, v)
        total = store.get(gaid, name)
        if m is not None and memory is not None:
            total += memory.read(m.seg, m.row)
        totals[name] = total
    return totals


class ClearAction(object):
    """Reply shape decided by the clear policy for one collective chunk.

    Attributes
    ----------
    flags : :class:`incnet.wire.packet.Flag`
        Flags to set on the reply.
    bitmap : int
        Slots the switch should get/clear.
    values : list of int
        Logical chunk result.
    reset : bool
        Lazy accumulators were reset.
    """

    def __init__(self, flags, bitmap, values, reset=False):
        self.flags = flags
        self.bitmap = bitmap
        self.values = values
        self.reset = reset


def is_sentinel(v):
    return v == MAX_INT or v == MIN_INT


def handle_clear(policy, gaid, keys, store, values=None, tag=None,
                 force_reset=False):
    """Reply actions for a collective chunk crossing the threshold.

    Parameters
    ----------
    policy : string
        copy, shadow, lazy or nop.
    gaid : int
        Application id.
    keys : tuple of arrays
        (segments, rows) of the chunk's cells.
    store : :class:`incnet.server.shadow.ShadowStore`
        Backing store holding backups and lazy snapshots.
    values : array_like
        Register values carried by the crossing packet.
    tag : int
        Chunk tag, the backup key under the copy policy.
    force_reset : bool
        Reset lazy accumulators regardless of their value.

    Returns
    -------
    action : :class:`ClearAction`
    """
    segs, rows = keys
    values = numpy.asarray(values, dtype=numpy.int64)
    n = len(values)
    bits = (1 << n) - 1
    sentinel = (values == MAX_INT) | (values == MIN_INT)
    if policy == 'lazy':
        snap = store.snapshot(gaid, segs, rows)
        logical = numpy.where(sentinel, values, values - snap)
        if (force_reset or numpy.any(sentinel) or
                numpy.any(numpy.abs(values) > LAZY_LIMIT)):
            store.set_snapshot(gaid, segs, rows, 0)
            return ClearAction(Flag.IS_CNF | Flag.IS_CLR | Flag.IS_OF, bits,
                               logical.tolist(), reset=True)
        store.set_snapshot(gaid, segs, rows, values)
        return ClearAction(Flag.IS_CNF, 0, logical.tolist())
    if policy == 'copy':
        if tag is not None:
            store.backup(gaid, tag, values.tolist())
        return ClearAction(Flag.IS_CNF | Flag.IS_CLR, bits, values.tolist())
    if policy == 'shadow':
        return ClearAction(Flag.IS_CNF | Flag.IS_CLR, bits, values.tolist())
    return ClearAction(Flag.IS_CNF, bits, values.tolist())
