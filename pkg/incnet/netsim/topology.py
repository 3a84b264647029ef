"""Hosts, switches, links and precomputed shortest path routes."""

import json
import numpy
import scipy.sparse
from scipy.sparse.csgraph import shortest_path
from incnet.utils.io import get_input_value, strip_json_comments
from incnet.utils.misc import IncnetError

# Link defaults: 1 us propagation, 100 Gb/s, 128 packet queue.
DELAY = 1000
RATE = 100e9
CAPACITY = 128


class DisconnectedTopology(IncnetError):
    """Some host cannot reach another host, or the topology is empty."""
    pass


class LinkSpec(object):
    """Undirected link description.

    Parameters
    ----------
    a, b : string
        End points.
    delay : int
        Propagation delay in ns.
    rate : float
        Bandwidth in bits per second.
    capacity : int
        Queue capacity in packets, per direction.
    """

    def __init__(self, a, b, delay=DELAY, rate=RATE, capacity=CAPACITY):
        self.a = a
        self.b = b
        self.delay = int(delay)
        self.rate = float(rate)
        self.capacity = int(capacity)

    def as_dict(self):
        return {'a': self.a, 'b': self.b, 'delay': self.delay,
                'rate': self.rate, 'capacity': self.capacity}


class Topology(object):
    """Static network graph with next hop tables.

    Parameters
    ----------
    hosts : list of string
        End hosts.
    switches : list of string
        Switch names.
    links : list of :class:`LinkSpec`
        Links between nodes.
    clients, servers : list of string
        Host roles.
    inc_switch : string
        Switch running the INC program, by default the switch next to the
        first server (otherwise the first switch).
    """

    def __init__(self, hosts, switches, links, clients=(), servers=(),
                 inc_switch=None):
        self.hosts = list(hosts)
        self.switches = list(switches)
        self.links = list(links)
        self.clients = list(clients)
        self.servers = list(servers)
        if not self.hosts or not self.switches:
            raise DisconnectedTopology('Topology has no hosts or switches.')
        if inc_switch is None:
            inc_switch = self._server_switch()
        self.inc_switch = inc_switch
        if self.inc_switch not in self.switches:
            raise DisconnectedTopology('INC switch {} is not a switch.'.format(
                self.inc_switch))
        self.nodes = self.hosts + self.switches
        self.index = dict((n, i) for i, n in enumerate(self.nodes))
        for l in self.links:
            for end in (l.a, l.b):
                if end not in self.index:
                    raise DisconnectedTopology('Link end {} is not a '
                                               'node.'.format(end))
        self.next_hop = self._routes()

    def _server_switch(self):
        for l in self.links:
            if self.servers and self.servers[0] in (l.a, l.b):
                other = l.b if l.a == self.servers[0] else l.a
                if other in self.switches:
                    return other
        return self.switches[0]

    def _routes(self):
        n = len(self.nodes)
        rows = [self.index[l.a] for l in self.links]
        cols = [self.index[l.b] for l in self.links]
        graph = scipy.sparse.csr_matrix((numpy.ones(len(rows)), (rows, cols)),
                                        shape=(n, n))
        dist, pred = shortest_path(graph, directed=False, unweighted=True,
                                   return_predecessors=True)
        hosts = [self.index[h] for h in self.hosts]
        if numpy.any(numpy.isinf(dist[numpy.ix_(hosts, hosts)])):
            raise DisconnectedTopology('Some hosts cannot reach each other.')
        table = {}
        for i, src in enumerate(self.nodes):
            for j, dst in enumerate(self.nodes):
                if i == j or numpy.isinf(dist[i, j]):
                    continue
                # Walk back from dst until the node after src.
                k = j
                while pred[i, k] != i:
                    k = pred[i, k]
                table[(src, dst)] = self.nodes[k]
        return table

    def hop(self, node, dst):
        return self.next_hop[(node, dst)]

    def path(self, src, dst):
        nodes = [src]
        while nodes[-1] != dst:
            nodes.append(self.hop(nodes[-1], dst))
        return nodes

    def is_host(self, node):
        return node in self.index and node in self.hosts

    def as_dict(self):
        return {'hosts': self.hosts, 'switches': self.switches,
                'links': [l.as_dict() for l in self.links],
                'clients': self.clients, 'servers': self.servers,
                'inc_switch': self.inc_switch}


def _link_options(options):
    return {'delay': get_input_value(options, 'delay', default=DELAY,
                                     alias=['delay_ns']),
            'rate': get_input_value(options, 'rate', default=RATE,
                                    alias=['rate_bps']),
            'capacity': get_input_value(options, 'capacity',
                                        default=CAPACITY,
                                        alias=['queue'])}


def single_switch(n_clients, n_servers=1, options=None):
    """``X-to-Y`` star: clients c0.. and servers s0.. around switch sw0."""
    if options is None:
        options = {}
    link = _link_options(options)
    clients = ['c{}'.format(i) for i in range(n_clients)]
    servers = ['s{}'.format(i) for i in range(n_servers)]
    links = [LinkSpec(h, 'sw0', **link) for h in clients + servers]
    return Topology(clients + servers, ['sw0'], links, clients=clients,
                    servers=servers)


def dumbbell(left, right, options=None, servers=None, bottleneck=None,
             inc_switch=None):
    """Two switches joined by one link, hosts l0.. and r0.. on each side.

    By default the last right hand host serves, every other host is a client.
    ``bottleneck`` overrides the link options of the swl-swr link.
    """
    if options is None:
        options = {}
    link = _link_options(options)
    middle = _link_options(dict(options, **(bottleneck or {})))
    lhs = ['l{}'.format(i) for i in range(left)]
    rhs = ['r{}'.format(i) for i in range(right)]
    links = ([LinkSpec(h, 'swl', **link) for h in lhs] +
             [LinkSpec(h, 'swr', **link) for h in rhs] +
             [LinkSpec('swl', 'swr', **middle)])
    if servers is None:
        servers = rhs[-1:]
    clients = [h for h in lhs + rhs if h not in servers]
    return Topology(lhs + rhs, ['swl', 'swr'], links, clients=clients,
                    servers=list(servers), inc_switch=inc_switch)


def build_topology(spec, verbose=False):
    """Topology from a dict.

    ``spec`` either names a layout, ``{"layout": "2-to-1"}`` or
    ``{"layout": "dumbbell", "left": 4, "right": 4}`` (optional
    ``bottleneck`` link options and ``inc_switch``), or lists ``hosts``,
    ``switches`` and ``links`` explicitly with optional ``clients``,
    ``servers`` and ``inc_switch``.  Link fields not given fall back to the
    ``link`` section.
    """
    if not spec:
        raise DisconnectedTopology('Empty topology.')
    link = spec.get('link', {})
    layout = get_input_value(spec, 'layout', default=None, verbose=verbose)
    if layout == 'dumbbell':
        return dumbbell(spec.get('left', 4), spec.get('right', 4), link,
                        servers=spec.get('servers'),
                        bottleneck=spec.get('bottleneck'),
                        inc_switch=spec.get('inc_switch'))
    if layout is not None:
        try:
            x, y = [int(n) for n in str(layout).split('-to-')]
        except ValueError:
            raise DisconnectedTopology('Unknown layout {}.'.format(layout))
        return single_switch(x, y, link)
    defaults = _link_options(link)
    links = []
    for l in spec.get('links', []):
        opts = _link_options(dict(defaults, **l))
        links.append(LinkSpec(l['a'], l['b'], **opts))
    hosts = spec.get('hosts', [])
    servers = spec.get('servers', [])
    clients = spec.get('clients', [h for h in hosts if h not in servers])
    return Topology(hosts, spec.get('switches', []), links, clients=clients,
                    servers=servers, inc_switch=spec.get('inc_switch'))


def load_topology(filename, verbose=False):
    with open(filename) as f:
        spec = json.loads(strip_json_comments(f.read()))
    return build_topology(spec, verbose=verbose)
