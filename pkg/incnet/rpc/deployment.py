"""Wire a simulated network, its INC switch, the controller and the host
agents together."""

from incnet.client.agent import ClientAgent
from incnet.controller.controller import Controller
from incnet.netsim.network import Network
from incnet.rpc.service import Stub
from incnet.server.agent import ServerAgent
from incnet.switch.state import SwitchState
from incnet.utils.io import get_input_value
from incnet.utils.misc import print_section_header


class Deployment(object):
    """One simulation: network, switch, controller and agents.

    Parameters
    ----------
    topology : :class:`incnet.netsim.topology.Topology`
        Hosts and switches; clients get a ClientAgent, servers a
        ServerAgent.
    options : dict
        Sections ``switch``, ``controller``, ``network``, ``client`` and
        ``server`` passed to the respective objects.
    seed : int
        Root seed of the network.
    verbose : bool
        Print set up information.
    """

    def __init__(self, topology, options=None, seed=7, verbose=False):
        if options is None:
            options = {}
        self.topology = topology
        self.verbose = verbose
        self.switch = SwitchState(get_input_value(options, 'switch',
                                                  default={}, verbose=verbose),
                                  verbose=verbose)
        self.controller = Controller(self.switch,
                                     get_input_value(options, 'controller',
                                                     default={},
                                                     verbose=verbose),
                                     verbose=verbose)
        self.net = Network(topology, self.switch,
                           get_input_value(options, 'network', default={},
                                           verbose=verbose),
                           seed=seed, verbose=verbose)
        self.env = self.net.env
        client_opts = get_input_value(options, 'client', default={},
                                      verbose=verbose)
        server_opts = get_input_value(options, 'server', default={},
                                      verbose=verbose)
        if 'w_max' in client_opts and 'w_max' not in server_opts:
            server_opts = dict(server_opts, w_max=client_opts['w_max'])
        self.clients = dict((h, ClientAgent(h, self.net, self.controller,
                                            client_opts, verbose=verbose))
                            for h in topology.clients)
        self.servers = dict((h, ServerAgent(h, self.net, self.controller,
                                            options=server_opts,
                                            verbose=verbose))
                            for h in topology.servers)
        for server in self.servers.values():
            server.peers = self.clients
        self.services = {}
        self.env.process(self.controller.run(self.env))

    def register(self, service, server=None, members=None, memory=None,
                 on_expire=None, n_rings=None):
        """Register a service, start serving it and connect its clients.

        Returns
        -------
        gaid : int
            Application id.
        """
        if server is None:
            server = self.topology.servers[0]
        if members is None:
            members = self.topology.clients
        if memory is None:
            memory = service.memory
        gaid, (base, rows) = self.controller.register_app(
                service.filters, memory_request=memory, server=server,
                members=members, clear_mode=service.clear_mode,
                now=self.env.now)
        rings = self.servers[server].serve(gaid, service.filters,
                                           handler=service.handle,
                                           members=members,
                                           on_expire=on_expire,
                                           n_rings=n_rings)
        for host in members:
            self.clients[host].connect(gaid, server, service.filters, rings)
        self.services[gaid] = service
        if self.verbose:
            print("# {} registered as gaid {} on {} with {} rows.".format(
                service.name, gaid, server, rows))
        return gaid

    def stub(self, host, gaid):
        return Stub(self.clients[host], gaid, self.services[gaid])

    def call_sync(self, host, gaid, method, request):
        """Run the simulation until one call completes and return its
        reply."""
        proc = self.stub(host, gaid).call(method, request)
        self.env.run(until=proc)
        return proc.value

    def run(self, until):
        return self.net.run_until(until)

    def kill(self, host):
        """Process death of a host's agent."""
        agent = self.clients.get(host) or self.servers.get(host)
        agent.shutdown()

    def client_metrics(self):
        """Slot, packet and latency counters summed over the clients."""
        total = {}
        for agent in self.clients.values():
            for k, v in agent.metrics.items():
                if isinstance(v, list):
                    total.setdefault(k, []).extend(v)
                else:
                    total[k] = total.get(k, 0) + v
        return total

    def server_metrics(self):
        total = {}
        for agent in self.servers.values():
            for k, v in agent.metrics.items():
                total[k] = total.get(k, 0) + v
        return total

    def cache_hit_ratio(self):
        m = self.client_metrics()
        slots = m.get('slots_switch', 0) + m.get('slots_fallback', 0)
        if slots == 0:
            return 0.0
        return m['slots_switch'] / slots

    def print_summary(self):
        print_section_header('Deployment')
        print("# time: {} ns".format(self.env.now))
        for k, v in sorted(self.net.stats.items()):
            print("# network {:<12s} {}".format(k, v))
        for k, v in sorted(self.switch.stats.items()):
            print("# switch {:<13s} {}".format(k, v))
        print("# cache hit ratio: {:.4f}".format(self.cache_hit_ratio()))
