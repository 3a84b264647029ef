"""Server side INC agent.

A :class:`ServerAgent` runs next to the service handlers of one host.  It
answers the packets the switch forwards: plain calls and pulls, collective
chunks that crossed their CntFwd threshold, first-use and overflowed map
packets, test&set and release packets, and the clients' use counts.  It owns
the address maps and shadow stores of every application it serves and moves
values between switch registers and software at cache sweeps and timeouts.
"""

import numpy
import simpy
from incnet.client.stream import DEFAULT_SEED, hash_key
from incnet.netfilter.netfilter import NOP, CLIENT_ID, NULL_KEY
from incnet.server.address_map import AddressMap
from incnet.server.fallback import (
        fallback_exec, handle_clear, is_sentinel, software_modify
        )
from incnet.server.shadow import ShadowStore
from incnet.switch.state import PSEUDO_SRRT, UnknownSrrt
from incnet.utils.io import get_input_value
from incnet.utils.misc import print_section_header
from incnet.wire.packet import (
        Packet, Flag, MalformedPacket, NSLOTS, MAX_INT, MIN_INT, SEQ_SPACE,
        decode_packet, elided_keys, encode_packet
        )
from incnet.wire.payload import (
        ACK, CALL, COUNTS, PROBE, PULL, decode_payload, encode_payload
        )

MS = 1000000


def is_collective(nf):
    return nf.cntfwd.key == CLIENT_ID and nf.add_to != NOP


def is_counter_key(nf):
    return nf.cntfwd.key not in (CLIENT_ID, NULL_KEY)


def aligned_get(nf, schema, method):
    """True if the get bound reply field of method comes back on the
    request's own INC replies.

    The request must carry a field of the same name, and the filter must
    either be a collective or a pure lookup.
    """
    if nf is None or nf.get == NOP:
        return False
    name = nf.get.split('.', 1)[1]
    if name not in schema.request(method).fields:
        return False
    return is_collective(nf) or nf.add_to == NOP


class RegisterView(object):
    """Register access of one application through the controller."""

    def __init__(self, controller, gaid):
        self.controller = controller
        self.gaid = gaid

    def read(self, seg, row):
        return self.controller.read(self.gaid, seg, row)

    def add(self, seg, row, v):
        new = self.read(seg, row) + int(v)
        if new > MAX_INT or new < MIN_INT:
            return False
        self.controller.write(self.gaid, seg, row, new)
        return True


class ChunkState(object):
    """Server side progress of one collective chunk.

    Attributes
    ----------
    mcast : tuple
        (destination, bytes) of the multicast reply, resent unchanged to
        answer crossing duplicates.
    final : list of int
        Exact chunk result once known.
    poisoned : bool
        The in-switch result saturated; members resend exact values.
    parts : dict
        Client host -> exact contribution (software path).
    senders : dict
        Client host -> packet whose reply is still owed.
    """

    def __init__(self, tag):
        self.tag = tag
        self.mcast = None
        self.final = None
        self.poisoned = False
        self.poisoned_values = None
        self.parts = {}
        self.senders = {}


class ReplyCache(object):
    """Replies already sent on each (client, gaid, srrt) flow.

    A client only sends ``seq`` once ``seq - w_max`` is acknowledged, so
    entries a full window behind the newest request are dropped.  Entries of
    an application go when its srrt slots are reclaimed or reallocated.
    """

    def __init__(self):
        self.flows = {}

    def advance(self, key, seq, w_max):
        entries = self.flows.get(key)
        if not entries:
            return
        for s in [s for s in entries
                  if w_max <= (seq - s) % SEQ_SPACE < SEQ_SPACE // 2]:
            del entries[s]

    def lookup(self, key, seq):
        """(found, data); data is None for requests left unanswered."""
        entries = self.flows.get(key, {})
        return seq in entries, entries.get(seq)

    def store(self, key, seq, data):
        self.flows.setdefault(key, {})[seq] = data

    def drop_gaid(self, gaid):
        for key in [k for k in self.flows if k[1] == gaid]:
            del self.flows[key]

    def __len__(self):
        return sum(len(e) for e in self.flows.values())


class Served(object):
    """One application served by the agent."""

    def __init__(self, gaid, service, handler, amap, members, on_expire=None):
        self.gaid = gaid
        self.service = service
        self.handler = handler
        self.amap = amap
        self.members = list(members)
        self.on_expire = on_expire
        self.suspended = False
        self.suspended_at = None
        self.expired = False
        self.chunks = {}

    @property
    def collective(self):
        return any(is_collective(nf) for nf in self.service.filters)


class ServerAgent(object):
    """INC server of one host.

    Parameters
    ----------
    host : string
        Host name in the network.
    net : :class:`incnet.netsim.network.Network`
        Network the agent sends through.
    controller : :class:`incnet.controller.controller.Controller`
        Reached over the in-process control channel.
    store : :class:`incnet.server.shadow.ShadowStore`, optional
        Backing store, a fresh one by default.
    options : dict
        ``cache_window`` (100 ms), ``level2_timeout`` (60 s), ``cores`` (1),
        ``cpu_packet`` (1000 ns), ``cpu_slot`` (100 ns per slot executed in
        software), ``cpu_backup`` (50 ns per slot backed up under the copy
        policy), ``rings``, ``hash_seed``, ``w_max`` (256, window of the
        clients' host-local flows) and the address map options
        (``cache_policy``, ``pon_threshold``, ``cache_cells``).
    verbose : bool
        Print set up information.
    """

    def __init__(self, host, net, controller, store=None, options=None,
                 verbose=False):
        if options is None:
            options = {}
        self.host = host
        self.net = net
        self.env = net.env
        self.controller = controller
        self.store = ShadowStore() if store is None else store
        self.options = options
        self.verbose = verbose
        self.cache_window = get_input_value(options, 'cache_window',
                                            default=100*MS, verbose=verbose)
        self.level2 = get_input_value(options, 'level2_timeout',
                                      default=60000*MS, verbose=verbose)
        cores = get_input_value(options, 'cores', default=1, verbose=verbose)
        self.cpu_packet = get_input_value(options, 'cpu_packet', default=1000,
                                          verbose=verbose)
        self.cpu_slot = get_input_value(options, 'cpu_slot', default=100,
                                        verbose=verbose)
        self.cpu_backup = get_input_value(options, 'cpu_backup', default=50,
                                          verbose=verbose)
        self.seed = get_input_value(options, 'hash_seed',
                                    default=DEFAULT_SEED, verbose=verbose)
        self.w_max = get_input_value(options, 'w_max', default=256,
                                     verbose=verbose)
        self.cpu = simpy.Resource(self.env, capacity=cores)
        self.apps = {}
        self.peers = {}
        self.replies = ReplyCache()
        self.inprogress = set()
        self.pulls = {}
        self.locks = {}
        self.alive = True
        self.metrics = dict((k, 0) for k in ('packets', 'replies', 'resent',
                                             'fallback_packets',
                                             'fallback_slots', 'backups',
                                             'evictions', 'installs',
                                             'malformed'))
        net.attach(host, self.receive)
        self.env.process(self._sweep_loop())

    # Set up.
    def serve(self, gaid, service, handler=None, members=(), on_expire=None,
              n_rings=None):
        """Start serving a registered application.

        Parameters
        ----------
        gaid : int
            Application id returned by the controller.
        service : :class:`incnet.netfilter.config.ServiceFilters`
            Schema and filters of the application.
        handler : callable
            ``handler(method, fields)`` returning the reply fields of a call.
        members : list
            Client hosts of the application.
        on_expire : callable
            Receives the saved {key: value} map when the level-2 timeout
            expires while a stub is alive.
        n_rings : int
            Collective rings, by default one for applications with
            collective methods.

        Returns
        -------
        rings : tuple or None
            Ring layout to hand to the clients.
        """
        served = Served(gaid, service, handler, None, members,
                        on_expire=on_expire)
        if n_rings is None:
            n_rings = get_input_value(self.options, 'rings',
                                      default=int(served.collective))
        served.n_rings = n_rings if served.collective else 0
        self.apps[gaid] = served
        self._build_map(served)
        self.controller.subscribe(gaid, self.on_level1)
        if self.verbose:
            print("# {} serving {} (gaid {}) with {} map cells and {} "
                  "rings.".format(self.host, service.app_name, gaid,
                                  served.amap.capacity, served.amap.n_rings))
        return served.amap.rings

    def _build_map(self, served):
        entry = self.controller.entry(served.gaid)
        served.amap = AddressMap(served.gaid, entry.first_row,
                                 entry.data_rows, self.options,
                                 n_rings=served.n_rings, half=entry.half)
        if entry.clear_mode == 'lazy' and entry.rows:
            self.store.init_snapshots(served.gaid, entry.base, entry.rows)

    def clients(self, served):
        return [self.peers[h] for h in served.members if h in self.peers]

    # Receiving.
    def receive(self, frame):
        if self.alive:
            self.env.process(self._handle(frame))

    def _send(self, dst, p, elide=None):
        if elide is None:
            elide = p.is_elidable()
        data = encode_packet(p, elide)
        self.metrics['replies'] += 1
        self.net.send(self.host, dst, data)
        return data

    def _handle(self, frame):
        try:
            p = decode_packet(frame.data)
            payload = decode_payload(p.payload)
        except MalformedPacket:
            self.metrics['malformed'] += 1
            return
        self.metrics['packets'] += 1
        src = frame.src
        served = self.apps.get(p.gaid)
        if p.gaid != 0 and 'tag' in payload and served is not None:
            with self.cpu.request() as req:
                yield req
                out, cost = self._chunk(served, src, p, payload)
                yield self.env.timeout(cost)
            for dst, data in out:
                self.metrics['replies'] += 1
                self.net.send(self.host, dst, data)
            return
        flow = (src, p.gaid, p.srrt)
        key = flow + (p.seq,)
        if key in self.inprogress:
            return
        self.replies.advance(flow, p.seq, self._window(p))
        sent, data = self.replies.lookup(flow, p.seq)
        if data is not None:
            self.metrics['resent'] += 1
            self.net.send(self.host, src, data)
            return
        if sent and payload.get('kind') != PROBE:
            # Losing test&set packets stay unanswered.
            return
        self.inprogress.add(key)
        with self.cpu.request() as req:
            yield req
            reply, cost = self._dispatch(served, src, p, payload)
            yield self.env.timeout(cost)
        self.inprogress.discard(key)
        data = None
        if reply is not None and self.alive:
            data = self._send(src, reply)
        self.replies.store(flow, p.seq, data)

    def _window(self, p):
        try:
            return self.controller.switch.flow(p.srrt, p.gaid).w_max
        except UnknownSrrt:
            return self.w_max

    def _reply(self, p, payload=None, flags=Flag.NONE):
        r = Packet(p.gaid, seq=p.seq, srrt=p.srrt, flip=p.flip, flags=flags,
                   op_type=p.op_type)
        if p.has(Flag.ECN):
            r.set(Flag.ECN)
        if payload is None:
            payload = {'kind': ACK}
        r.payload = encode_payload(payload)
        return r

    def _dispatch(self, served, src, p, payload):
        """Reply packet (or None) and CPU time of a non-chunk packet."""
        kind = payload.get('kind')
        if p.gaid == 0:
            if kind == CALL:
                return self._call(src, p, payload), self.cpu_packet
            if kind == COUNTS:
                target = self.apps.get(payload.get('gaid'))
                if target is not None:
                    target.amap.count(payload.get('counts', []))
            return self._reply(p), self.cpu_packet
        if served is None:
            return None, self.cpu_packet
        if served.suspended:
            self.resume(served.gaid)
        if kind == PROBE:
            return self._reply(p), self.cpu_packet
        nf = served.service.filters[p.filter_index] if (
                p.filter_index < len(served.service.filters)) else None
        if nf is None:
            return None, self.cpu_packet
        if kind == PULL:
            return self._pull(served, src, p, payload, nf)
        if is_counter_key(nf):
            return self._counter(served, p, payload, nf), self.cpu_packet
        return self._map(served, p, payload, nf)

    # Plain channel.
    def _call(self, src, p, payload):
        gaid = payload.get('gaid')
        method = payload.get('method')
        answer = {'kind': ACK, 'id': payload.get('id')}
        served = self.apps.get(gaid)
        if served is None or method not in served.service.schema.methods:
            answer['error'] = 'Unknown method {} of gaid {}.'.format(method,
                                                                     gaid)
            answer['error_kind'] = 'ServiceUnknown'
            return self._reply(p, answer)
        if served.suspended:
            self.resume(gaid)
        fields = {}
        if served.handler is not None:
            try:
                fields = served.handler(method, payload.get('fields', {}))
            except Exception as err:
                answer['error'] = '{}: {}'.format(type(err).__name__, err)
                answer['error_kind'] = 'HandlerPanic'
                return self._reply(p, answer)
            if fields is None:
                fields = {}
        _, nf = served.service.filter_for(method)
        schema = served.service.schema
        chunks = {}
        if (nf is not None and nf.get != NOP and
                not aligned_get(nf, schema, method)):
            message, name = nf.get.split('.', 1)
            if message == schema.reply(method).name:
                keys = fields.pop(name, None)
                if keys is None:
                    keys = self.map_keys(served.gaid)
                keys = sorted(keys, key=str)
                parts = [keys[i:i+NSLOTS] for i in range(0, len(keys),
                                                          NSLOTS)]
                self.pulls.setdefault((src, payload.get('id')), {})[name] = (
                        parts)
                chunks[name] = len(parts)
        answer['fields'] = dict((str(k), _plain_value(v))
                                for k, v in fields.items())
        answer['chunks'] = chunks
        return self._reply(p, answer)

    def _pull(self, served, src, p, payload, nf):
        parts = self.pulls.get((src, payload.get('id')), {}).get(
                payload.get('field'), [])
        c = payload.get('chunk', 0)
        names = parts[c] if 0 <= c < len(parts) else []
        r = self._reply(p)
        gaid = served.gaid
        in_band = p.srrt < PSEUDO_SRRT and not served.suspended
        slot_names = [None] * NSLOTS
        values = []
        keys = numpy.zeros(NSLOTS, dtype=numpy.uint32)
        slots = numpy.zeros(NSLOTS, dtype=numpy.int64)
        for name in names:
            m = self._cell(served, name)
            shadow = self.store.get(gaid, name)
            if m is not None and in_band and slot_names[m.seg] is None:
                slot_names[m.seg] = name
                keys[m.seg] = m.row
                slots[m.seg] = self.controller.read(gaid, m.seg, m.row)
                values.append([name, shadow])
            else:
                values.append([name, self.total(gaid, name)])
        r.keys = keys
        r.values = slots
        r.bitmap = sum(1 << i for i, n in enumerate(slot_names)
                       if n is not None)
        out = {'kind': ACK, 'values': values}
        if r.bitmap:
            out['names'] = slot_names
        r.payload = encode_payload(out)
        return r, self.cpu_packet + self.cpu_slot*len(names)

    # Maps.
    def _cell(self, served, name):
        m = served.amap.lookup(hash_key(name, self.seed))
        if m is None or m.name != name or m.seg < 0:
            return None
        return m

    def total(self, gaid, name):
        """True accumulator of a key: shadow value plus its register."""
        served = self.apps[gaid]
        v = self.store.get(gaid, name)
        m = self._cell(served, name)
        if m is not None and not served.suspended:
            v += self.controller.read(gaid, m.seg, m.row)
        return v

    def map_keys(self, gaid):
        served = self.apps[gaid]
        names = set(self.store.items(gaid))
        names.update(m.name for m in served.amap.table.values()
                     if m.seg >= 0)
        return names

    def map_view(self, gaid):
        """{key: total} of an application's INC map."""
        return dict((name, self.total(gaid, name))
                    for name in sorted(self.map_keys(gaid)))

    def _warm(self, gaid, m):
        """Move the shadow value of a newly cached key into its register."""
        v = self.store.get(gaid, m.name)
        if MIN_INT <= v <= MAX_INT:
            self.controller.write(gaid, m.seg, m.row, v)
            self.store.take(gaid, m.name)
        self.metrics['installs'] += 1

    def _map(self, served, p, payload, nf):
        gaid = served.gaid
        amap = served.amap
        cost = self.cpu_packet
        crossing = p.has(Flag.IS_CROSS) or p.has(Flag.IS_OF)
        if crossing:
            memory = None if served.suspended else RegisterView(
                    self.controller, gaid)
            totals = fallback_exec(p, nf, self.store, amap, memory,
                                   seed=self.seed)
            self.metrics['fallback_packets'] += 1
            self.metrics['fallback_slots'] += len(totals)
            cost += self.cpu_slot*len(totals)
        r = self._reply(p)
        out = {'kind': ACK}
        names = payload.get('names', []) if p.has(Flag.IS_CROSS) else []
        maps = []
        for name in names:
            laddr = hash_key(name, self.seed)
            known = amap.lookup(laddr)
            m = amap.allocate_mapping(laddr, name)
            if m is None:
                continue
            if known is None and m.seg >= 0:
                self._warm(gaid, m)
            maps.append(m.as_list())
        if maps:
            out['maps'] = maps
        if nf.add_to == NOP and nf.get != NOP:
            if p.has(Flag.IS_CROSS):
                asked = names + [n for n, _ in payload.get('extra', [])]
                out['values'] = [[n, self.total(gaid, n)] for n in asked]
            else:
                slot_names = [None] * NSLOTS
                values = []
                for i in numpy.flatnonzero(p.enabled()):
                    m = amap.at_cell(int(i), int(p.keys[i]))
                    if m is None:
                        continue
                    slot_names[i] = m.name
                    values.append([m.name, self.store.get(gaid, m.name)])
                r.keys = p.keys
                r.values = p.values
                r.bitmap = p.bitmap
                out['names'] = slot_names
                out['values'] = values
        r.payload = encode_payload(out)
        return r, cost

    # Test&set and release.
    def _counter(self, served, p, payload, nf):
        gaid = served.gaid
        name = payload.get('names', [None])[0]
        if name is None:
            return self._reply(p)
        lock = (gaid, name)
        m = None
        if lock not in self.locks and not served.suspended:
            laddr = hash_key(name, self.seed)
            m = served.amap.lookup(laddr)
            if m is None and p.has(Flag.IS_CROSS):
                m = served.amap.allocate_mapping(laddr, name, counter=True)
            if m is not None and (m.name != name or m.counter < 0):
                m = None
        out = {'kind': ACK}
        if m is not None:
            out['maps'] = [m.as_list()]
        threshold = nf.cntfwd.threshold
        if threshold > 0:
            if m is not None:
                count = self.controller.read_counter(gaid, m.counter) + 1
                self.controller.write_counter(gaid, m.counter, count)
            else:
                count = self.locks.get(lock, 0) + 1
                self.locks[lock] = count
            if count != threshold:
                return None
            out['grant'] = True
            return self._reply(p, out)
        if m is None:
            self.locks.pop(lock, None)
            return self._reply(p, out)
        if (p.srrt < PSEUDO_SRRT and not p.has(Flag.IS_CROSS) and
                p.counter_index == m.counter):
            # The switch clears the counter when the reply passes.
            r = self._reply(p, out, flags=Flag.IS_CLR | Flag.IS_CNF)
            r.counter_index = m.counter
            return r
        self.controller.write_counter(gaid, m.counter, 0)
        return self._reply(p, out)

    # Collectives.
    def _chunk(self, served, src, p, payload):
        """Frames to send and CPU time for a collective chunk packet."""
        tag = payload['tag']
        st = served.chunks.get(tag)
        if st is None:
            st = served.chunks[tag] = ChunkState(tag)
        if served.suspended:
            self.resume(served.gaid)
        nf = served.service.filters[p.filter_index]
        cost = self.cpu_packet
        if p.has(Flag.IS_CROSS):
            return self._software_chunk(served, st, src, p, payload, nf)
        if st.mcast is None and p.has(Flag.IS_SA):
            return self._crossing(served, st, src, p, payload, nf)
        if p.has(Flag.IS_SA):
            self.metrics['resent'] += 1
            return [st.mcast], cost
        if st.final is not None:
            return [self._unicast(st, src, p, final=True)], cost
        if st.poisoned:
            return [self._unicast(st, src, p, final=False)], cost
        return [], cost

    def _unicast(self, st, dst, p, final=True):
        r = self._reply(p)
        r.counter_index = p.counter_index
        r.keys = elided_keys(p.counter_index)
        values = st.final if final else st.poisoned_values
        r.values = _slots(values)
        r.payload = encode_payload({'kind': ACK, 'tag': st.tag,
                                    'final': bool(final), 'exact': values})
        return dst, encode_packet(r, True)

    def _crossing(self, served, st, src, p, payload, nf):
        """First packet of a chunk that crossed its threshold in the
        switch: apply the clear policy and multicast the result."""
        gaid = served.gaid
        entry = self.controller.entry(gaid)
        policy = entry.clear_mode
        n = max(bin(p.bitmap).count('1'), 1)
        rows = p.keys[:n].astype(numpy.int64)
        values = p.values[:n].astype(numpy.int64)
        action = handle_clear(policy, gaid, (numpy.arange(n), rows),
                              self.store, values=values, tag=st.tag)
        flags = Flag.IS_MCAST | Flag.IS_SA | action.flags
        r = Packet(gaid, seq=p.seq, srrt=p.srrt, flip=p.flip, flags=flags,
                   op_type=p.op_type, bitmap=action.bitmap,
                   counter_index=p.counter_index,
                   counter_threshold=p.counter_threshold,
                   keys=elided_keys(p.counter_index), values=_slots(
                       action.values))
        if p.has(Flag.ECN):
            r.set(Flag.ECN)
        final = not any(is_sentinel(v) for v in action.values)
        if final:
            st.final = list(action.values)
        else:
            st.poisoned = True
            st.poisoned_values = list(action.values)
        out = {'kind': ACK, 'tag': st.tag, 'final': final}
        if policy == 'lazy':
            out['exact'] = list(action.values)
        r.payload = encode_payload(out)
        first = encode_packet(r, True)
        out['exact'] = list(action.values)
        r.payload = encode_payload(out)
        st.mcast = (src, encode_packet(r, True))
        cost = self.cpu_packet
        if policy == 'copy':
            self.metrics['backups'] += n
            cost += self.cpu_backup*n
        return [(src, first)], cost

    def _software_chunk(self, served, st, src, p, payload, nf):
        """Exact contributions of clients without switch rings, or resent
        after the switch result saturated."""
        cost = self.cpu_packet
        st.senders[src] = p
        if st.final is not None:
            return [self._unicast(st, src, p, final=True)], cost
        exact = payload.get('exact', [])
        if src not in st.parts:
            op, para = nf.modify
            st.parts[src] = [software_modify(op, para, int(v))
                             for v in exact]
            self.metrics['fallback_packets'] += 1
            self.metrics['fallback_slots'] += len(exact)
            cost += self.cpu_slot*len(exact)
        threshold = max(nf.cntfwd.threshold, 1)
        if len(st.parts) < threshold:
            return [], cost
        n = max(len(v) for v in st.parts.values())
        total = [0] * n
        for part in st.parts.values():
            for i, v in enumerate(part):
                total[i] += v
        st.final = total
        entry = self.controller.entry(served.gaid)
        if entry.clear_mode == 'copy':
            self.store.backup(served.gaid, st.tag, total)
        out = [self._unicast(st, dst, q, final=True)
               for dst, q in sorted(st.senders.items())]
        return out, cost

    # Cache management.
    def _sweep_loop(self):
        while self.alive:
            yield self.env.timeout(self.cache_window)
            for gaid, served in sorted(self.apps.items()):
                if served.suspended or not served.amap.capacity:
                    continue
                plan = served.amap.cache_sweep()
                if plan['evict'] or plan['install']:
                    self.env.process(self.apply_plan(gaid, plan))
            self.second_level_sweep(self.env.now)

    def apply_plan(self, gaid, plan):
        """simpy process draining evicted cells and installing hot keys.

        Evicted mappings are revoked at every client first; their cells are
        read and cleared into the shadow store once no client holds a packet
        referencing them.
        """
        served = self.apps[gaid]
        amap = served.amap
        evict = [l for l in plan['evict'] if amap.lookup(l) is not None]
        if evict:
            version = max(amap.lookup(l).version for l in evict)
            events = [c.revoke(gaid, evict, version)
                      for c in self.clients(served)
                      if c.alive and gaid in c.conns]
            if events:
                yield self.env.all_of(events)
        if served.suspended or served.amap is not amap:
            return
        for laddr in evict:
            m = amap.lookup(laddr)
            if m is None or m.seg < 0:
                continue
            v = self.controller.read_and_clear(gaid, m.seg, m.row)
            self.store.add(gaid, m.name, v)
            amap.evict(laddr)
            self.metrics['evictions'] += 1
        for laddr in plan['install']:
            if amap.lookup(laddr) is not None:
                continue
            m = amap.install(laddr)
            if m is None:
                break
            self._warm(gaid, m)

    # Timeouts.
    def on_level1(self, gaid):
        """Level-1 timeout: bring the application's INC map to the server
        and give its switch memory back."""
        served = self.apps[gaid]
        amap = served.amap
        for m in list(amap.table.values()):
            if m.seg >= 0:
                v = self.controller.read_and_clear(gaid, m.seg, m.row)
                self.store.add(gaid, m.name, v)
            if m.counter >= 0:
                count = self.controller.read_counter(gaid, m.counter)
                if count:
                    self.locks[(gaid, m.name)] = count
        saved = self.store.drain(gaid)
        self.controller.suspend(gaid)
        self.replies.drop_gaid(gaid)
        served.suspended = True
        served.suspended_at = self.env.now
        served.expired = False
        served.amap = AddressMap(gaid, 0, 0, self.options)
        for client in self.clients(served):
            client.suspend(gaid)
        if self.verbose:
            print("# {} saved {} keys of gaid {} at {} ns.".format(
                self.host, len(saved), gaid, self.env.now))

    def resume(self, gaid):
        """Traffic is back: reserve switch memory and restore the map."""
        served = self.apps[gaid]
        if not served.suspended:
            return
        self.controller.resume(gaid, now=self.env.now)
        self.replies.drop_gaid(gaid)
        served.suspended = False
        self._build_map(served)
        self.store.restore(gaid)
        for client in self.clients(served):
            client.resume(gaid, served.amap.rings)
        if self.verbose:
            print("# {} resumed gaid {} at {} ns.".format(self.host, gaid,
                                                          self.env.now))

    def second_level_sweep(self, now):
        """Deliver or delete the maps saved at level-1 that outlived the
        level-2 timeout.

        Returns
        -------
        delivered, dropped : dict
            gaid -> saved {key: value} map.
        """
        delivered = {}
        dropped = {}
        for gaid, served in sorted(self.apps.items()):
            if (not served.suspended or served.expired or
                    now - served.suspended_at <= self.level2):
                continue
            served.expired = True
            saved = self.store.drop(gaid)
            alive = any(c.alive for c in self.clients(served))
            if served.on_expire is not None and alive:
                served.on_expire(saved)
                delivered[gaid] = saved
            else:
                dropped[gaid] = saved
            if self.verbose:
                print("# {} level-2 timeout of gaid {}: {} keys {}.".format(
                    self.host, gaid, len(saved),
                    'delivered' if gaid in delivered else 'deleted'))
        return delivered, dropped

    def shutdown(self):
        self.alive = False

    # Reports.
    def cache_stats(self):
        return dict((gaid, s.amap.snapshot()) for gaid, s in self.apps.items())

    def print_metrics(self):
        print_section_header('Server agent {}'.format(self.host))
        for k, v in sorted(self.metrics.items()):
            print("# {:<18s} {}".format(k, v))


def _slots(values):
    """Slot vector of a chunk result, clipped to int32."""
    out = numpy.zeros(NSLOTS, dtype=numpy.int64)
    values = numpy.clip(numpy.asarray(values, dtype=numpy.float64),
                        MIN_INT, MAX_INT).astype(numpy.int64)
    out[:len(values)] = values
    return out


def _plain_value(v):
    if isinstance(v, dict):
        return dict((str(k), _plain_value(x)) for k, x in v.items())
    if hasattr(v, 'tolist'):
        return v.tolist()
    if isinstance(v, bytes):
        return v.decode('latin-1')
    return v
