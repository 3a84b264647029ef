"""Host side INC agent.

A :class:`ClientAgent` owns one :class:`Conn` per application it talks to
and one plain connection per server.  Each connection runs a simpy worker
per flow which drains a FCFS queue of :class:`Job` objects under the flow's
window and congestion limits; every sent packet is guarded by a
retransmission timer.
"""

import collections
import numpy
from incnet.client.flow import FlowState, MS
from incnet.client.quantize import Quantizer
from incnet.client.stream import ClientMap, DEFAULT_SEED, build_stream
from incnet.controller.controller import NoSwitchCapacity
from incnet.netfilter.config import pipeline_config
from incnet.netfilter.netfilter import NOP
from incnet.utils.io import get_input_value
from incnet.utils.misc import IncnetError
from incnet.wire.packet import (
        Packet, Flag, MalformedPacket, MAX_INT, MIN_INT, decode_packet,
        encode_packet
        )
from incnet.wire.payload import (
        CALL, COUNTS, DATA, PROBE, PULL, decode_payload, encode_payload
        )

# Job kinds.
MAP = 'map'
GET = 'get'
LOCK = 'lock'
RELEASE = 'release'
CHUNK = 'chunk'
CONTROL = 'control'


class ServiceUnknown(IncnetError):
    """Method or application unknown to the agent or its server."""
    pass


class Cancelled(IncnetError):
    """The calling process died before the call completed."""
    pass


class HandlerPanic(IncnetError):
    """The server handler raised an exception."""
    pass


def is_sentinel(v):
    return v == MAX_INT or v == MIN_INT


def _jsonable(v):
    if isinstance(v, dict):
        return dict((str(k), _jsonable(x)) for k, x in v.items())
    if hasattr(v, 'tolist'):
        return v.tolist()
    if isinstance(v, bytes):
        return v.decode('latin-1')
    return v


class Job(object):
    """One packet to deliver reliably.

    Parameters
    ----------
    packet : :class:`incnet.wire.packet.Packet`
        Packet to send, stamped with seq/srrt/flip when sent.
    kind : string
        How its reply completes it.
    done : :class:`simpy.events.Event`
        Fired with the job result.
    """

    def __init__(self, packet, kind, done):
        self.packet = packet
        self.kind = kind
        self.done = done
        self.flow = None
        self.seq = None
        self.rearming = False
        self.result = None

    @property
    def cells(self):
        """Logical addresses the packet touches in the switch."""
        if self.packet.has(Flag.IS_CROSS):
            return ()
        return self.packet.meta.get('cells', ())


class TagState(object):
    """Client side progress of one collective chunk."""

    def __init__(self, tag, n, exact, done):
        self.tag = tag
        self.n = n
        self.exact = exact
        self.done = done
        self.jobs = []
        self.retrying = False
        self.result = None


class Conn(object):
    """Connections of one host to one application (or to a server's plain
    channel when gaid is 0)."""

    def __init__(self, env, gaid, server, flows, amap=None, service=None):
        self.env = env
        self.gaid = gaid
        self.server = server
        self.flows = list(flows)
        self.amap = amap
        self.service = service
        self.queues = [collections.deque() for _ in self.flows]
        self.wakeups = [None for _ in self.flows]
        self.inflight = {}
        self.tags = {}
        self.completed = set()
        self.next_chunk = 0
        self.next_queue = 0
        self.revokes = []
        self.reconnect = [None for _ in self.flows]
        self.suspended = False

    def wait(self, i):
        self.wakeups[i] = self.env.event()
        return self.wakeups[i]

    def wake(self, i=None):
        for j in (range(len(self.flows)) if i is None else [i]):
            ev = self.wakeups[j]
            if ev is not None and not ev.triggered:
                ev.succeed()

    def enqueue(self, job):
        """Round-robin assignment to the worker queues."""
        i = self.next_queue % len(self.queues)
        self.next_queue += 1
        self.queues[i].append(job)
        self.wake(i)

    def queued(self):
        for q in self.queues:
            for job in q:
                yield job

    @property
    def no_inc(self):
        return self.amap is not None and self.amap.no_inc


class ClientAgent(object):
    """INC client of one host.

    Parameters
    ----------
    host : string
        Host name in the network.
    net : :class:`incnet.netsim.network.Network`
        Network the agent sends through.
    controller : :class:`incnet.controller.controller.Controller`
        Reached over the in-process control channel.
    options : dict
        ``connections`` (2 flows per application), ``w_max`` (256),
        ``initial_cw`` (8), ``rto_floor`` (4 ms), ``congestion_control``
        (True), ``cache_window`` (100 ms), ``rearm_after`` (identical
        resends of a test&set packet before it is re-armed, 0) and
        ``hash_seed``.
    verbose : bool
        Print set up information.
    """

    def __init__(self, host, net, controller, options=None, verbose=False):
        if options is None:
            options = {}
        self.host = host
        self.net = net
        self.env = net.env
        self.controller = controller
        self.verbose = verbose
        self.connections = get_input_value(options, 'connections', default=2,
                                           alias=['flows'], verbose=verbose)
        self.flow_options = {
            'w_max': get_input_value(options, 'w_max', default=256,
                                     verbose=verbose),
            'initial_cw': get_input_value(options, 'initial_cw', default=8,
                                          verbose=verbose),
            'rto_floor': get_input_value(options, 'rto_floor', default=4*MS,
                                         verbose=verbose),
            'congestion_control': get_input_value(options,
                                                  'congestion_control',
                                                  default=True, alias=['cc'],
                                                  verbose=verbose),
        }
        self.cache_window = get_input_value(options, 'cache_window',
                                            default=100*MS, verbose=verbose)
        self.rearm_after = get_input_value(options, 'rearm_after', default=0,
                                           verbose=verbose)
        self.seed = get_input_value(options, 'hash_seed',
                                    default=DEFAULT_SEED, verbose=verbose)
        self.conns = {}
        self.plain = {}
        self.next_call = 0
        self.alive = True
        self.metrics = {'calls': 0, 'latencies': [], 'slots_switch': 0,
                        'slots_fallback': 0, 'packets': 0, 'rearms': 0,
                        'overflow_retries': 0, 'ecn_acks': 0}
        self.retired_flows = []
        net.attach(host, self.receive)
        self.env.process(self._counts_loop())

    # Connections.
    def establish_connections(self, gaid, n=None):
        """Allocate n switch flows of an application.

        Returns
        -------
        flows : list of :class:`incnet.client.flow.FlowState`
            Flows on switch srrt slots, or on host-local pseudo slots when the
            switch has no capacity left (no-INC mode).
        no_inc : bool
            True when the pseudo slots are used.
        """
        if n is None:
            n = self.connections
        srrts = []
        try:
            for _ in range(n):
                srrts.append(self.controller.allocate_srrt(
                    gaid, self.flow_options['w_max']))
        except NoSwitchCapacity:
            for srrt in srrts:
                self.controller.release_srrt(gaid, srrt)
            if self.verbose:
                print("# {}: no switch capacity for gaid {}, running without "
                      "INC.".format(self.host, gaid))
            return [FlowState(self.controller.allocate_pseudo(), gaid,
                              self.flow_options) for _ in range(n)], True
        return [FlowState(s, gaid, self.flow_options) for s in srrts], False

    def connect(self, gaid, server, service, rings=None):
        """Open the connections of an application served by server.

        Parameters
        ----------
        gaid : int
            Application id.
        server : string
            Host of the application's server agent.
        service : :class:`incnet.netfilter.config.ServiceFilters`
            Schema and filters of the application.
        rings : tuple
            Collective ring layout handed out by the server.
        """
        flows, no_inc = self.establish_connections(gaid)
        amap = ClientMap(gaid, None if no_inc else rings, seed=self.seed)
        amap.no_inc = no_inc
        conn = Conn(self.env, gaid, server, flows, amap, service)
        self.conns[gaid] = conn
        self._plain(server)
        for i in range(len(flows)):
            self.env.process(self._worker(conn, i))
        return conn

    def _plain(self, server):
        conn = self.plain.get(server)
        if conn is None:
            opts = dict(self.flow_options, congestion_control=False)
            flow = FlowState(self.controller.allocate_pseudo(), 0, opts)
            conn = Conn(self.env, 0, server, [flow])
            self.plain[server] = conn
            self.env.process(self._worker(conn, 0))
        return conn

    # Sending.
    def submit(self, conn, packet, kind):
        job = Job(packet, kind, self.env.event())
        conn.enqueue(job)
        return job

    def _stale(self, conn, job):
        """Queued chunk packets of a completed chunk are not sent."""
        tag = job.packet.meta.get('tag')
        return tag is not None and tag in conn.completed

    def _released(self, conn, job):
        tag = job.packet.meta.get('tag')
        if tag is None or job.packet.has(Flag.IS_CROSS):
            return True
        prev = tag - conn.amap.release_distance()
        return prev < 0 or prev in conn.completed

    def _worker(self, conn, i):
        while self.alive:
            flow = conn.flows[i]
            if conn.reconnect[i] is not None and not flow.unacked:
                self.retired_flows.append(flow)
                conn.flows[i] = conn.reconnect[i]
                conn.reconnect[i] = None
                continue
            queue = conn.queues[i]
            if queue and self._stale(conn, queue[0]):
                queue.popleft()
                continue
            if queue and flow.can_send() and self._released(conn, queue[0]):
                self._transmit(conn, flow, queue.popleft())
                continue
            yield conn.wait(i)

    def _transmit(self, conn, flow, job):
        p = job.packet
        rec = flow.send(p, self.env.now, elide_keys=p.elided)
        job.flow = flow
        job.seq = rec.seq
        conn.inflight[(flow.srrt, rec.seq)] = job
        self.metrics['packets'] += 1
        self.net.send(self.host, conn.server, rec.data)
        self.env.process(self._timer(conn, flow, job, rec.seq))

    def _timer(self, conn, flow, job, seq):
        while True:
            yield self.env.timeout(flow.rto)
            if not self.alive or job.seq != seq or seq not in flow.unacked:
                return
            rec = flow.unacked[seq]
            if (job.kind == LOCK and not job.rearming and
                    rec.tries > self.rearm_after):
                self._rearm(conn, flow, job, rec)
                continue
            data = flow.on_timeout(seq)
            if data is not None:
                self.net.send(self.host, conn.server, data)

    def _rearm(self, conn, flow, job, rec):
        """Retire a test&set sequence number with an effect-free probe."""
        probe = job.packet.copy()
        probe.set(Flag.IS_CNF, False)
        probe.bitmap = 0
        probe.payload = encode_payload({'kind': PROBE})
        rec.data = encode_packet(probe, probe.elided)
        rec.retransmitted = True
        rec.tries += 1
        job.rearming = True
        self.metrics['rearms'] += 1
        self.net.send(self.host, conn.server, rec.data)

    # Receiving.
    def receive(self, frame):
        if not self.alive:
            return
        try:
            p = decode_packet(frame.data)
            payload = decode_payload(p.payload)
        except MalformedPacket:
            return
        if p.gaid == 0:
            conn = self.plain.get(frame.src)
        else:
            conn = self.conns.get(p.gaid)
        if conn is None:
            return
        if p.gaid != 0 and 'tag' in payload:
            self._chunk_reply(conn, p, payload)
            return
        job = conn.inflight.get((p.srrt, p.seq))
        if job is None:
            return
        if job.kind == LOCK and job.rearming and not (
                p.has(Flag.IS_SA) or payload.get('grant')):
            # Probe acknowledged: try again under a fresh sequence number.
            self._retire(conn, job, p)
            job.rearming = False
            job.packet = job.packet.copy()
            job.seq = None
            conn.enqueue(job)
            return
        self._finish(conn, job, p, payload)

    def _retire(self, conn, job, p=None):
        ecn = p is not None and p.has(Flag.ECN)
        if ecn:
            self.metrics['ecn_acks'] += 1
        conn.inflight.pop((job.flow.srrt, job.seq), None)
        job.flow.on_ack(job.seq, self.env.now, ecn=ecn)
        conn.wake()

    def _finish(self, conn, job, p, payload):
        self._retire(conn, job, p)
        if conn.amap is not None and 'maps' in payload:
            conn.amap.install(payload['maps'])
        if job.kind == GET:
            job.result = self._get_values(job, p, payload)
        else:
            job.result = payload
        self._count_slots(job)
        job.done.succeed(job.result)
        self._check_revokes(conn)

    def _count_slots(self, job):
        p = job.packet
        n = bin(p.bitmap).count('1')
        if p.has(Flag.IS_CROSS):
            self.metrics['slots_fallback'] += n
        else:
            self.metrics['slots_switch'] += n
        self.metrics['slots_fallback'] += len(p.meta.get('extra', ()))

    def _get_values(self, job, p, payload):
        """Key totals of an aligned get: register values from the slots plus
        the server's shadow parts."""
        totals = {}
        names = payload.get('names')
        if names is None and p.has(Flag.IS_SA):
            names = job.packet.meta.get('names', [])
        for i, name in enumerate(names or []):
            if name is not None and p.bitmap >> i & 1:
                totals[name] = totals.get(name, 0) + int(p.values[i])
        for name, v in payload.get('values', []):
            totals[name] = totals.get(name, 0) + int(v)
        return totals

    def _chunk_reply(self, conn, p, payload):
        tag = payload['tag']
        st = conn.tags.get(tag)
        if st is None:
            return
        if 'exact' in payload:
            values = [int(v) for v in payload['exact']]
        else:
            values = [int(v) for v in p.values[:st.n]]
        complete = (st.done.triggered or payload.get('final') or
                    not any(is_sentinel(v) for v in values))
        for job in st.jobs:
            if not complete and job.packet.has(Flag.IS_OF):
                # The exact retry waits for the final result.
                continue
            if (job.flow is not None and job.seq is not None and
                    (job.flow.srrt, job.seq) in conn.inflight):
                # A marked chunk result slows every member down.
                self._retire(conn, job, p)
        if st.done.triggered:
            return
        if complete:
            st.result = values
            conn.completed.add(tag)
            for job in st.jobs:
                self._count_slots(job)
            st.done.succeed(values)
            conn.wake()
            self._check_revokes(conn)
            return
        if not st.retrying:
            # Saturated chunk: resend the exact contribution to the server.
            st.retrying = True
            self.metrics['overflow_retries'] += 1
            first = st.jobs[0].packet
            retry = Packet(conn.gaid, flags=Flag.IS_OF | Flag.IS_CROSS,
                           op_type=first.op_type, bitmap=(1 << st.n) - 1,
                           counter_threshold=first.counter_threshold,
                           values=first.values)
            retry.payload = encode_payload({'kind': DATA, 'tag': tag,
                                            'exact': st.exact})
            retry.meta = {'tag': tag, 'n': st.n, 'exact': st.exact}
            st.jobs.append(self.submit(conn, retry, CHUNK))

    # Revocation, suspension and resumption (control channel).
    def revoke(self, gaid, laddrs, version):
        """Forget mappings; the returned event fires once no queued or
        unacked packet of this host references the cells."""
        conn = self.conns[gaid]
        for laddr in laddrs:
            conn.amap.revoke(laddr, version)
        ev = self.env.event()
        conn.revokes.append((set(laddrs), ev))
        self._check_revokes(conn)
        return ev

    def _check_revokes(self, conn):
        if not conn.revokes:
            return
        busy = set()
        for job in list(conn.queued()) + list(conn.inflight.values()):
            busy.update(job.cells)
        keep = []
        for laddrs, ev in conn.revokes:
            if laddrs & busy:
                keep.append((laddrs, ev))
            elif not ev.triggered:
                ev.succeed()
        conn.revokes = keep

    def suspend(self, gaid):
        """The application lost its switch memory: run everything in
        software until it is resumed."""
        conn = self.conns.get(gaid)
        if conn is None:
            return
        conn.suspended = True
        amap = ClientMap(gaid, None, seed=self.seed)
        amap.no_inc = True
        conn.amap = amap

    def resume(self, gaid, rings=None):
        """Switch memory is back: new flows replace the old ones as soon as
        these have drained."""
        conn = self.conns.get(gaid)
        if conn is None or not conn.suspended:
            return
        conn.suspended = False
        flows, no_inc = self.establish_connections(gaid, len(conn.flows))
        amap = ClientMap(gaid, None if no_inc else rings, seed=self.seed)
        amap.no_inc = no_inc
        amap.counts = conn.amap.counts
        conn.amap = amap
        conn.reconnect = flows
        conn.wake()

    def shutdown(self):
        """Process death: outstanding calls fail with Cancelled."""
        self.alive = False
        for conn in list(self.conns.values()) + list(self.plain.values()):
            jobs = list(conn.queued()) + list(conn.inflight.values())
            events = [j.done for j in jobs] + [t.done for t in
                                               conn.tags.values()]
            for ev in events:
                if not ev.triggered:
                    ev.defused = True
                    ev.fail(Cancelled('{} shut down.'.format(self.host)))
            conn.wake()

    def _counts_loop(self):
        while self.alive:
            yield self.env.timeout(self.cache_window)
            for gaid, conn in sorted(self.conns.items()):
                counts = conn.amap.drain_counts()
                if not counts:
                    continue
                p = Packet(0, payload=encode_payload({
                    'kind': COUNTS, 'gaid': gaid,
                    'counts': sorted([l, n] for l, n in counts.items())}))
                self.submit(self.plain[conn.server], p, CONTROL)

    # Calls.
    def call(self, gaid, method, request):
        """simpy process performing one RPC.

        IEDT fields bound by the method's filter travel the INC channel
        first; the remaining fields then travel the plain channel and
        invoke the handler.  Get-bound reply fields are filled from the INC
        replies (aligned fields) or pulled from the server.

        Returns
        -------
        reply : dict
            Reply message.
        """
        conn = self.conns.get(gaid)
        if conn is None:
            raise ServiceUnknown('{} is not connected to gaid {}.'.format(
                self.host, gaid))
        service = conn.service
        schema = service.schema
        if method not in schema.methods:
            raise ServiceUnknown('{} has no method {}.'.format(schema.name,
                                                               method))
        start = self.env.now
        self.metrics['calls'] += 1
        call_id = '{}:{}'.format(self.host, self.next_call)
        self.next_call += 1
        index, nf = service.filter_for(method)
        req = schema.request(method)
        rep = schema.reply(method)
        reply = {}
        inc_fields = set()
        if nf is not None:
            inc_fields = set(p.split('.', 1)[1] for p in nf.bound_paths()
                             if p.split('.', 1)[0] == req.name)
            if nf.get != NOP and nf.get.split('.', 1)[0] == rep.name:
                # Aligned get: the request field of the same name carries
                # the keys in band.
                name = nf.get.split('.', 1)[1]
                if name in request and name in req.fields:
                    inc_fields.add(name)
            results = yield self.env.process(
                self._inc_part(conn, nf, index, schema, req, request))
            reply.update(self._align(nf, rep, results))
        opaque = dict((k, _jsonable(v)) for k, v in request.items()
                      if k not in inc_fields)
        if (nf is not None and not opaque and
                pipeline_config(nf).serve_in_switch and
                all(f in reply for f in rep.fields)):
            # Answered entirely in band, the handler is not invoked.
            self.metrics['latencies'].append(self.env.now - start)
            return reply
        plain = self._plain(conn.server)
        p = Packet(0, payload=encode_payload({
            'kind': CALL, 'gaid': gaid, 'method': method, 'id': call_id,
            'fields': opaque}))
        job = self.submit(plain, p, CONTROL)
        answer = yield job.done
        if 'error' in answer:
            if answer.get('error_kind') == 'ServiceUnknown':
                raise ServiceUnknown(answer['error'])
            raise HandlerPanic(answer['error'])
        reply.update(answer.get('fields', {}))
        for field, chunks in sorted(answer.get('chunks', {}).items()):
            values = {}
            for c in range(chunks):
                pull = Packet(gaid, flags=Flag.IS_CROSS,
                              op_type=(index or 0) << 4,
                              payload=encode_payload({
                                  'kind': PULL, 'id': call_id,
                                  'field': field, 'chunk': c}))
                pjob = self.submit(conn, pull, GET)
                part = yield pjob.done
                values.update(part)
            reply[field] = self._dequantize_map(nf, rep, field, values)
        self.metrics['latencies'].append(self.env.now - start)
        return reply

    def _inc_part(self, conn, nf, index, schema, req, request):
        packets = build_stream(request, nf, conn.amap, schema=schema,
                               filter_index=index,
                               first_chunk=conn.next_chunk,
                               request=req.name)
        events = []
        gets = []
        chunks = []
        lock_kind = LOCK if nf.cntfwd.threshold > 0 else RELEASE
        for p in packets:
            if 'tag' in p.meta:
                st = TagState(p.meta['tag'], p.meta['n'], p.meta['exact'],
                              self.env.event())
                conn.tags[st.tag] = st
                st.jobs.append(self.submit(conn, p, CHUNK))
                chunks.append(st)
                events.append(st.done)
            elif 'lock' in p.meta:
                events.append(self.submit(conn, p, lock_kind).done)
            elif nf.add_to == NOP:
                gets.append(self.submit(conn, p, GET).done)
            else:
                events.append(self.submit(conn, p, MAP).done)
        conn.next_chunk += len(chunks)
        if events or gets:
            yield self.env.all_of(events + gets)
        totals = None
        if gets:
            totals = {}
            for ev in gets:
                for k, v in ev.value.items():
                    totals[k] = totals.get(k, 0) + v
        array = None
        if chunks:
            array = []
            for st in chunks:
                array += st.result
        return {'array': array, 'totals': totals}

    def _align(self, nf, rep, results):
        """Reply fields answered by the request's own INC replies."""
        if nf.get == NOP:
            return {}
        message, name = nf.get.split('.', 1)
        if message != rep.name:
            return {}
        field = rep.fields.get(name)
        real = field is not None and field.is_real
        q = Quantizer(nf.precision if real else 0)
        if results['array'] is not None:
            values = numpy.asarray(results['array'], dtype=numpy.int64)
            if real:
                return {name: q.dequantize(values)}
            return {name: values}
        if results['totals'] is None:
            return {}
        return {name: self._dequantize_map(nf, rep, name,
                                           results['totals'])}

    def _dequantize_map(self, nf, rep, name, values):
        field = rep.fields.get(name)
        if nf is None or field is None or not field.is_real:
            return dict(values)
        q = Quantizer(nf.precision)
        return dict((k, float(q.dequantize(v))) for k, v in values.items())
