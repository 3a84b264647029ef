"""Seeded discrete event network driven by simpy."""

import collections
import math
import numpy
import pandas
import simpy
from incnet.switch.pipeline import FORWARD, SOURCE, process_frame
from incnet.utils.io import get_input_value, write_dict_h5

LOG_COLUMNS = ['time_ns', 'event', 'where', 'frame_id', 'size']


class Frame(object):
    """Bytes in flight between two hosts."""

    def __init__(self, src, dst, data, fid):
        self.src = src
        self.dst = dst
        self.data = data
        self.fid = fid

    def __repr__(self):
        return 'Frame({}, {} -> {}, {} B)'.format(self.fid, self.src,
                                                  self.dst, len(self.data))


class Link(object):
    """One direction of a link: FIFO queue, serialization and propagation.

    The frame being serialized still counts towards the queue length.

    Parameters
    ----------
    net : :class:`Network`
        Owning network.
    a, b : string
        Sending and receiving node.
    spec : :class:`incnet.netsim.topology.LinkSpec`
        Delay, rate and capacity.
    seed : :class:`numpy.random.SeedSequence`
        Seed of the loss and jitter stream.
    """

    def __init__(self, net, a, b, spec, seed):
        self.net = net
        self.a = a
        self.b = b
        self.delay = spec.delay
        self.rate = spec.rate
        self.capacity = spec.capacity
        self.queue = collections.deque()
        self.busy = False
        self.loss = 0.0
        self.jitter = 0
        self.rng = numpy.random.default_rng(seed)
        self.sent = 0
        self.dropped = 0
        self.lost = 0

    def __len__(self):
        return len(self.queue)

    def serialization(self, size):
        return int(math.ceil(size*8*1e9/self.rate))

    def enqueue(self, frame):
        if len(self.queue) >= self.capacity:
            # Tail drop.
            self.dropped += 1
            self.net.record('drop', self.a, frame)
            return False
        self.queue.append(frame)
        self.net.record('enqueue', self.a, frame)
        if not self.busy:
            self.busy = True
            self.net.env.process(self._transmit())
        return True

    def _transmit(self):
        env = self.net.env
        while self.queue:
            frame = self.queue[0]
            yield env.timeout(self.serialization(len(frame.data)))
            self.queue.popleft()
            self.sent += 1
            if self.loss > 0 and self.rng.random() < self.loss:
                self.lost += 1
                self.net.record('loss', self.a, frame)
                continue
            delay = self.delay
            if self.jitter:
                delay += int(self.rng.integers(0, self.jitter + 1))
            arrival = env.timeout(delay)
            arrival.callbacks.append(
                    lambda _, f=frame: self.net.arrive(self.b, f))
        self.busy = False

    def as_dict(self):
        return {'link': '{}->{}'.format(self.a, self.b), 'sent': self.sent,
                'dropped': self.dropped, 'lost': self.lost,
                'loss': self.loss}


class Network(object):
    """Hosts and switches of a topology joined by simulated links.

    Hosts receive frames through handlers registered with :meth:`attach`;
    switches with an attached :class:`incnet.switch.state.SwitchState` run
    the INC program on every frame, the others only forward.

    Parameters
    ----------
    topology : :class:`incnet.netsim.topology.Topology`
        Network graph.
    switch : :class:`incnet.switch.state.SwitchState`, optional
        State of the topology's INC switch.
    options : dict
        ``reorder`` (max extra propagation jitter in ns, default 0),
        ``event_log`` (record events, default True) and ``log_limit``
        (events kept, default 1000000, oldest dropped first; 0 keeps all).
    seed : int
        Root seed of every link's loss stream.
    env : :class:`simpy.Environment`, optional
        Event loop, a fresh one by default.
    verbose : bool
        Print set up information.
    """

    def __init__(self, topology, switch=None, options=None, seed=7, env=None,
                 verbose=False):
        if options is None:
            options = {}
        self.env = simpy.Environment() if env is None else env
        self.topology = topology
        self.verbose = verbose
        self.seed = seed
        jitter = get_input_value(options, 'reorder', default=0,
                                 alias=['jitter'], verbose=verbose)
        self.log_events = get_input_value(options, 'event_log', default=True,
                                          verbose=verbose)
        self.log_limit = get_input_value(options, 'log_limit',
                                         default=1000000, verbose=verbose)
        seeds = numpy.random.SeedSequence(seed).spawn(2*len(topology.links))
        self.links = {}
        for i, spec in enumerate(topology.links):
            for j, (a, b) in enumerate(((spec.a, spec.b), (spec.b, spec.a))):
                link = Link(self, a, b, spec, seeds[2*i+j])
                link.jitter = int(jitter)
                self.links[(a, b)] = link
        self.handlers = {}
        self.switches = {}
        if switch is not None:
            self.attach_switch(topology.inc_switch, switch)
        self.log = collections.deque(maxlen=self.log_limit or None)
        self.next_id = 0
        self.stats = dict((k, 0) for k in ('sent', 'delivered', 'absorbed',
                                           'misrouted', 'unroutable'))

    @property
    def now(self):
        return int(self.env.now)

    def attach(self, host, handler):
        """Deliver frames addressed to host to handler(frame)."""
        if not self.topology.is_host(host):
            raise ValueError('{} is not a host.'.format(host))
        self.handlers[host] = handler

    def attach_switch(self, name, state):
        if name not in self.topology.switches:
            raise ValueError('{} is not a switch.'.format(name))
        self.switches[name] = state

    def link(self, a, b):
        return self.links[(a, b)]

    def record(self, event, where, frame):
        if self.log_events:
            self.log.append((self.now, event, where, frame.fid,
                             len(frame.data)))

    def _frame(self, src, dst, data):
        frame = Frame(src, dst, data, self.next_id)
        self.next_id += 1
        return frame

    def send(self, src, dst, data):
        """Inject bytes at host src addressed to host dst.

        Returns
        -------
        fid : int
            Frame id used in the event log.
        """
        frame = self._frame(src, dst, bytes(data))
        self.stats['sent'] += 1
        self.record('send', src, frame)
        self._forward(src, frame)
        return frame.fid

    def _forward(self, node, frame):
        try:
            nxt = self.topology.hop(node, frame.dst)
        except KeyError:
            self.stats['unroutable'] += 1
            self.record('unroutable', node, frame)
            return
        self.links[(node, nxt)].enqueue(frame)

    def queue_length(self, node, dst):
        """Packets queued at node towards dst."""
        try:
            return len(self.links[(node, self.topology.hop(node, dst))])
        except KeyError:
            return 0

    def arrive(self, node, frame):
        if node in self.switches:
            self._inc_switch(node, frame)
        elif node in self.topology.switches:
            self._forward(node, frame)
        elif node == frame.dst:
            self.stats['delivered'] += 1
            self.record('deliver', node, frame)
            handler = self.handlers.get(node)
            if handler is not None:
                handler(frame)
        else:
            self.stats['misrouted'] += 1
            self.record('misrouted', node, frame)

    def _inc_switch(self, node, frame):
        st = self.switches[node]
        out = process_frame(frame.data, st, now=self.now,
                            qlen=self.queue_length(node, frame.dst),
                            src=frame.src)
        self.record('switch', node, frame)
        if not out:
            self.stats['absorbed'] += 1
            self.record('absorb', node, frame)
        for egress, data in out:
            if egress == FORWARD:
                nxt = Frame(frame.src, frame.dst, data, frame.fid)
            elif egress == SOURCE:
                nxt = self._frame(frame.dst, frame.src, data)
            else:
                nxt = self._frame(frame.src, egress, data)
            self._forward(node, nxt)

    def inject_loss(self, a, b, rate, seed=None, both=False):
        """Drop frames leaving a towards b with probability rate.

        Parameters
        ----------
        a, b : string
            Link end points.
        rate : float
            Loss probability in [0, 1].
        seed : int, optional
            Reseed the link's loss stream.
        both : bool
            Apply to the reverse direction as well.
        """
        if not 0 <= rate <= 1:
            raise ValueError('Loss rate {} outside [0, 1].'.format(rate))
        pairs = [(a, b), (b, a)] if both else [(a, b)]
        for i, pair in enumerate(pairs):
            link = self.links[pair]
            link.loss = float(rate)
            if seed is not None:
                link.rng = numpy.random.default_rng([seed, i])

    def run_until(self, t):
        """Advance the simulation to time t (ns) and return the event log."""
        if t > self.env.now:
            self.env.run(until=t)
        return self.event_log()

    def event_log(self):
        return pandas.DataFrame(list(self.log), columns=LOG_COLUMNS)

    def link_stats(self):
        return pandas.DataFrame([l.as_dict() for _, l in
                                 sorted(self.links.items())])

    def export_log(self, filename):
        """Write the event log as CSV (``.csv``) or HDF5 (otherwise)."""
        log = self.event_log()
        if filename.endswith('.csv'):
            log.to_csv(filename, index=False)
            return
        data = {}
        for col in LOG_COLUMNS:
            if log[col].dtype == object:
                data[col] = numpy.array(log[col].tolist(), dtype='S')
            else:
                data[col] = log[col].to_numpy()
        write_dict_h5(filename, 'event_log', data, mode='w')
