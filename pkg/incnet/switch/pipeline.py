"""Per-packet switch program: admission, retransmission filtering, primitive
execution, ECN marking and the forwarding decision."""

from incnet.netfilter.netfilter import CLIENT_ID
from incnet.switch.primitives import (
        Trip, exec_stream_modify, exec_map_ops, exec_cntfwd, TO_SERVER,
        FROM_SERVER, CNT_PASS, CNT_DROP, CNT_FIRE, CNT_POLL
        )
from incnet.switch.state import UnknownSrrt
from incnet.wire.packet import (
        Flag, MalformedPacket, decode_packet, encode_packet
        )

# Admission results.
INC_PROCESS = 'inc-process'
FORWARD_PLAIN = 'forward-plain'
BYPASS = 'bypass'

# Egress of an emitted packet: towards the frame destination, back to the
# sender, or (for multicast replicas) a host name.
FORWARD = 'forward'
SOURCE = 'source'


def admit(p, st, now, direction=TO_SERVER):
    """Admission rule on the gaid.

    Unregistered applications are forwarded as normal packets.  Overflow and
    crossing packets of registered applications travelling to the server are
    forwarded plain as well (``BYPASS``) after their timestamp is refreshed.
    """
    entry = st.apps.get(p.gaid)
    if entry is None:
        return FORWARD_PLAIN
    entry.last_seen = now
    if direction == TO_SERVER and (p.has(Flag.IS_OF) or
                                   p.has(Flag.IS_CROSS)):
        return BYPASS
    return INC_PROCESS


def check_retransmission(p, st, direction=TO_SERVER):
    """Classify a packet as fresh or duplicate.

    Client to server packets use the flip bit discipline: with i = seq mod
    w_max the packet is a duplicate iff bitmap[i] == flip, otherwise fresh and
    bitmap[i] := flip.  Replies are fresh the first time a given seq is seen
    at their window index.

    Raises
    ------
    UnknownSrrt
        The srrt slot is not allocated to the packet's application.
    """
    flow = st.flow(p.srrt, p.gaid)
    i = p.seq % flow.w_max
    if direction == TO_SERVER:
        if flow.request[i] == p.flip:
            return False
        flow.request[i] = p.flip
        return True
    if flow.reply_seq[i] == p.seq:
        return False
    flow.reply_seq[i] = p.seq
    return True


def _direction(entry, src):
    if src is not None and src == entry.server:
        return FROM_SERVER
    return TO_SERVER


def _ecn_cell(st, entry):
    if entry.rows == 0:
        return None
    return (0, entry.base)


def _to_server(q, st, entry, cfg, fresh, flow, trip):
    if cfg.modify_op:
        q.values, of = exec_stream_modify(cfg.modify_op, cfg.modify_para,
                                          q.values, q.bitmap)
        if of:
            q.set(Flag.IS_OF)
    decision = exec_cntfwd(q, st, cfg, fresh=fresh, trip=trip)
    exec_map_ops(q, st, TO_SERVER, cfg, fresh=fresh, flow=flow, trip=trip)
    if q.has(Flag.IS_OF) and cfg.cntfwd_key_mode != CLIENT_ID:
        # Saturated slots need the server even below the threshold.
        return [(FORWARD, q)]
    if decision == CNT_FIRE:
        q.set(Flag.IS_SA)
        if cfg.cntfwd_targets == 'SRC':
            st.stats['turnaround'] += 1
            return [(SOURCE, q)]
        return [(FORWARD, q)]
    if decision == CNT_DROP:
        st.stats['dropped'] += 1
        return []
    if decision == CNT_PASS and cfg.serve_in_switch:
        q.set(Flag.IS_SA)
        st.stats['turnaround'] += 1
        return [(SOURCE, q)]
    return [(FORWARD, q)]


def _from_server(q, st, entry, cfg, fresh, trip):
    exec_map_ops(q, st, FROM_SERVER, cfg, fresh=fresh, trip=trip)
    if not q.has(Flag.IS_MCAST):
        return [(FORWARD, q)]
    if isinstance(cfg.cntfwd_targets, tuple):
        hosts = list(cfg.cntfwd_targets)
    else:
        hosts = entry.members
    st.stats['multicast'] += 1
    return [(h, q.copy()) for h in hosts]


def process_packet(p, st, cfg=None, now=0, qlen=0, src=None):
    """Run the switch program on one packet.

    Parameters
    ----------
    p : :class:`incnet.wire.packet.Packet`
        Ingress packet, left unmodified.
    st : :class:`incnet.switch.state.SwitchState`
        Switch state.
    cfg : :class:`incnet.netfilter.config.SwitchProgramConfig`
        Filter to apply. Defaults to the filter selected by the op_type high
        nibble among the application's programs.
    now : int
        Current time in ns.
    qlen : int
        Queue length in packets seen by the packet.
    src : string
        Sending host. Packets from the application's server travel the
        server to client direction.

    Returns
    -------
    out : list of (egress, :class:`incnet.wire.packet.Packet`)
        Emitted packets; empty when the packet is dropped.
    """
    st.stats['packets'] += 1
    entry = st.apps.get(p.gaid)
    direction = _direction(entry, src) if entry is not None else TO_SERVER
    verdict = admit(p, st, now, direction)
    if verdict == FORWARD_PLAIN:
        st.stats['plain'] += 1
        return [(FORWARD, p.copy())]
    if cfg is None:
        cfg = entry.program(p.filter_index)
    q = p.copy()
    try:
        flow = st.flow(p.srrt, p.gaid)
        fresh = check_retransmission(p, st, direction)
    except UnknownSrrt:
        st.stats['unknown_srrt'] += 1
        return [(FORWARD, q)]
    if not fresh:
        st.stats['duplicates'] += 1
    cell = _ecn_cell(st, entry)
    if verdict == BYPASS or cfg is None:
        st.stats['bypass'] += 1
        out = [(FORWARD, q)]
    elif direction == TO_SERVER:
        if cell is not None and st.registers[cell] != 0:
            q.set(Flag.ECN)
        out = _to_server(q, st, entry, cfg, fresh, flow, Trip())
        if cell is not None and any(e == SOURCE and pkt.has(Flag.ECN)
                                    for e, pkt in out):
            # A turned around packet carries the echo itself.
            st.registers[cell] = 0
    else:
        if cell is not None and q.has(Flag.ECN):
            st.registers[cell] = 0
        out = _from_server(q, st, entry, cfg, fresh, Trip())
    if qlen > st.ecn_threshold:
        if cell is not None:
            st.registers[cell] = 1
        for _, pkt in out:
            pkt.set(Flag.ECN)
        st.stats['ecn_marked'] += len(out)
    return out


def process_frame(data, st, now=0, qlen=0, src=None):
    """Decode, process and re-encode one frame. Malformed frames are
    counted and dropped."""
    try:
        p = decode_packet(data)
    except MalformedPacket:
        st.stats['malformed'] += 1
        return []
    return [(egress, encode_packet(q, q.elided and q.is_elidable()))
            for egress, q in process_packet(p, st, now=now, qlen=qlen,
                                            src=src)]
