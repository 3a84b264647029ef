"""The reliable INC primitives as executed by the switch.

All arithmetic on register cells is signed 32-bit with saturation.  Each
function touches a register cell at most once per packet traversal, which
:class:`Trip` checks.
"""

import numpy
from incnet.netfilter.netfilter import CLIENT_ID, OPCODES
from incnet.switch.state import RegisterAccessError
from incnet.wire.packet import Flag, NSLOTS, MAX_INT, MIN_INT

TO_SERVER = 'to-server'
FROM_SERVER = 'from-server'

# CntFwd decisions.
CNT_PASS = 'pass'
CNT_DROP = 'drop'
CNT_FIRE = 'fire'
CNT_POLL = 'poll'

_SEGMENTS = numpy.arange(NSLOTS)


class Trip(object):
    """Register cells accessed by one packet in one direction."""

    def __init__(self):
        self.cells = set()

    def touch(self, bank, segments, offsets):
        for cell in zip(numpy.atleast_1d(segments).tolist(),
                        numpy.atleast_1d(offsets).tolist()):
            key = (bank,) + tuple(cell)
            if key in self.cells:
                raise RegisterAccessError('Cell {} accessed twice in one '
                                          'trip.'.format(key))
            self.cells.add(key)


def saturate(x):
    return numpy.clip(x, MIN_INT, MAX_INT)


def exec_stream_modify(op, para, values, bitmap):
    """Apply a Stream.modify operator to the enabled slots.

    Parameters
    ----------
    op : int or string
        Operator code or name.
    para : int
        Signed 32-bit operand.
    values : array_like
        32 slot values.
    bitmap : int
        Enabled slot mask.

    Returns
    -------
    values : :class:`numpy.ndarray`
        Transformed int32 values.
    overflow : bool
        True if ADD saturated any slot.
    """
    if isinstance(op, str):
        op = OPCODES[op.upper()]
    v = numpy.array(values, dtype=numpy.int64)
    mask = ((numpy.uint64(bitmap) >> _SEGMENTS.astype(numpy.uint64)) &
            numpy.uint64(1)).astype(bool)
    para = int(para)
    shift = min(max(para, 0), 31)
    overflow = False
    if op == OPCODES['MAX']:
        out = numpy.maximum(v, para)
    elif op == OPCODES['MIN']:
        out = numpy.minimum(v, para)
    elif op == OPCODES['ADD']:
        out = v + para
        overflow = bool(numpy.any(mask & ((out > MAX_INT) | (out < MIN_INT))))
        out = saturate(out)
    elif op == OPCODES['ASSIGN']:
        out = numpy.full_like(v, para)
    elif op == OPCODES['SHIFTL']:
        out = (v << shift) & 0xFFFFFFFF
        out = numpy.where(out > MAX_INT, out - 2**32, out)
    elif op == OPCODES['SHIFTR']:
        out = v >> shift
    elif op == OPCODES['BAND']:
        out = v & para
    elif op == OPCODES['BOR']:
        out = v | para
    elif op == OPCODES['BNOT']:
        out = ~v
    elif op == OPCODES['BXOR']:
        out = v ^ para
    else:
        out = v
    return numpy.where(mask, out, v).astype(numpy.int32), overflow


def _valid_slots(p, entry, st):
    """Enabled slots addressing the application's rows; the rest of the
    enabled slots are mis-addressed and lose their bit."""
    mask = p.enabled()
    keys = p.keys.astype(numpy.int64)
    valid = mask & entry.owns(keys) & (keys < st.ncells)
    bad = int(numpy.count_nonzero(mask & ~valid))
    if bad:
        st.stats['misaddressed'] += bad
        p.set_enabled(valid)
    return valid, keys


def _mask_bits(mask):
    return int(numpy.sum(1 << numpy.nonzero(mask)[0].astype(numpy.int64)))


def _bits_mask(bits):
    return ((numpy.uint64(bits) >> _SEGMENTS.astype(numpy.uint64)) &
            numpy.uint64(1)).astype(bool)


def _add_to(p, st, entry, cfg, flow, fresh, trip):
    valid, keys = _valid_slots(p, entry, st)
    index = p.seq % flow.w_max if flow is not None else None
    if not fresh:
        if flow is not None and flow.overflow[index]:
            sat = _bits_mask(flow.overflow[index]) & valid
            valid = valid & ~sat
            p.set_enabled(valid)
            p.set(Flag.IS_OF)
        seg, off = _SEGMENTS[valid], keys[valid]
        trip.touch('reg', seg, off)
        p.values[valid] = st.registers[seg, off]
        return
    seg, off = _SEGMENTS[valid], keys[valid]
    trip.touch('reg', seg, off)
    reg = st.registers[seg, off].astype(numpy.int64)
    new = reg + p.values[valid].astype(numpy.int64)
    sat = (new > MAX_INT) | (new < MIN_INT)
    if cfg.cntfwd_key_mode == CLIENT_ID:
        # Collective cells saturate to a sticky MAX_INT/MIN_INT that marks
        # the chunk result as overflowed.  A sentinel addend is an element
        # that overflowed at the client.
        add = p.values[valid].astype(numpy.int64)
        incoming = (add == MAX_INT) | (add == MIN_INT)
        poisoned = (reg == MAX_INT) | (reg == MIN_INT)
        result = numpy.where(poisoned, reg,
                             numpy.where(incoming, add, saturate(new)))
        st.registers[seg, off] = result
        p.values[valid] = result
        st.stats['saturated'] += int(numpy.count_nonzero(
            (sat | incoming) & ~poisoned))
        return
    result = numpy.where(sat, reg, new)
    st.registers[seg, off] = result
    values = p.values.copy()
    values[valid] = numpy.where(sat, values[valid], result)
    p.values = values
    if numpy.any(sat):
        hit = numpy.zeros(NSLOTS, dtype=bool)
        hit[numpy.nonzero(valid)[0][sat]] = True
        p.set_enabled(valid & ~hit)
        p.set(Flag.IS_OF)
        st.stats['saturated'] += int(numpy.count_nonzero(hit))
        if flow is not None:
            flow.overflow[index] = _mask_bits(hit)
    elif flow is not None:
        flow.overflow[index] = 0


def _get(p, st, entry, trip):
    valid, keys = _valid_slots(p, entry, st)
    seg, off = _SEGMENTS[valid], keys[valid]
    trip.touch('reg', seg, off)
    p.values[valid] = st.registers[seg, off]
    return valid, keys


def exec_map_ops(p, st, direction, cfg, fresh=True, flow=None, trip=None):
    """Run Map.addTo/Map.get/Map.clear on a packet in place.

    Parameters
    ----------
    p : :class:`incnet.wire.packet.Packet`
        Admitted packet, modified in place and returned.
    st : :class:`incnet.switch.state.SwitchState`
        Switch state.
    direction : string
        ``TO_SERVER`` or ``FROM_SERVER``.
    cfg : :class:`incnet.netfilter.config.SwitchProgramConfig`
        Method filter operands.
    fresh : bool
        Result of the retransmission check. Duplicates only read.
    flow : :class:`incnet.switch.state.FlowBits`
        Flow of the packet, records and replays addTo saturations.
    trip : :class:`Trip`
        Access tracker, a new one if None.

    Returns
    -------
    p : :class:`incnet.wire.packet.Packet`
        The processed packet.
    """
    entry = st.apps[p.gaid]
    if trip is None:
        trip = Trip()
    if direction == TO_SERVER:
        if cfg.add_to_enabled:
            _add_to(p, st, entry, cfg, flow, fresh, trip)
        elif cfg.serve_in_switch:
            _get(p, st, entry, trip)
        return p
    mode = entry.clear_mode
    clearing = fresh and p.has(Flag.IS_CLR)
    if mode == 'lazy':
        clearing = clearing and p.has(Flag.IS_OF)
    if not fresh and mode == 'copy':
        return p
    if cfg.get_enabled or (clearing and mode == 'copy'):
        if cfg.get_enabled:
            valid, keys = _get(p, st, entry, trip)
        else:
            valid, keys = _valid_slots(p, entry, st)
            trip.touch('reg', _SEGMENTS[valid], keys[valid])
        if clearing and mode in ('copy', 'lazy'):
            st.registers[_SEGMENTS[valid], keys[valid]] = 0
    elif clearing and mode == 'lazy':
        valid, keys = _valid_slots(p, entry, st)
        trip.touch('reg', _SEGMENTS[valid], keys[valid])
        st.registers[_SEGMENTS[valid], keys[valid]] = 0
    if clearing and mode == 'shadow':
        valid, keys = _valid_slots(p, entry, st)
        partner = entry.partner(keys[valid])
        trip.touch('reg', _SEGMENTS[valid], partner)
        st.registers[_SEGMENTS[valid], partner] = 0
    if fresh and p.has(Flag.IS_CNF) and entry.owns_counter(p.counter_index):
        index = p.counter_index
        if mode == 'shadow':
            index = int(entry.partner([index])[0])
        trip.touch('cnt', 0, index)
        st.counters[index] = 0
    return p


def exec_cntfwd(p, st, cfg, fresh=True, trip=None):
    """Count-then-forward decision for a client to server packet.

    Returns
    -------
    decision : string
        ``CNT_PASS`` when CntFwd is off for the packet, ``CNT_FIRE`` when the
        counter equals the threshold, ``CNT_DROP`` below it and ``CNT_POLL``
        for duplicates of collective chunks below it (and for counters outside
        the switch reservation) which the server resolves.
    """
    if not p.has(Flag.IS_CNF) or p.counter_threshold == 0:
        return CNT_PASS
    entry = st.apps[p.gaid]
    index = p.counter_index
    if not entry.owns_counter(index):
        st.stats['misaddressed'] += 1
        return CNT_POLL
    if trip is not None:
        trip.touch('cnt', 0, index)
    if fresh:
        st.counters[index] += 1
    if st.counters[index] == p.counter_threshold:
        return CNT_FIRE
    if not fresh and cfg.cntfwd_key_mode == CLIENT_ID:
        return CNT_POLL
    return CNT_DROP
