"""Application and micro-benchmark scenarios.

A scenario owns a configuration (its defaults merged with the user's),
builds seeded workloads, runs them through a simulated :class:`Deployment`
under each of its policies and computes the software reference of the same
workload.  Rows carry the metrics; arrays carry the results that ``verify``
compares.
"""

import copy
import numpy
from incnet.harness import metrics, oracle, workloads
from incnet.harness.report import Report
from incnet.netsim.topology import build_topology
from incnet.rpc.deployment import Deployment
from incnet.rpc.service import Service
from incnet.netfilter.netfilter import read_netfilter
from incnet.netfilter.schema import read_schema
from incnet.utils.io import ConfigError, data_path, get_input_value, to_json
from incnet.utils.misc import IncnetError, merge_dicts
from incnet.wire.packet import KV_SIZE

MS = 1000000
US = 1000


class UnknownScenario(IncnetError):
    pass


def _service(schema, filters, handlers=None, app_name=None, threshold=None,
             **kwargs):
    """Service from shipped files, optionally renamed and with its CntFwd
    threshold replaced."""
    nfs = [read_netfilter(data_path(f)) for f in filters]
    for nf in nfs:
        if app_name is not None:
            nf.app_name = app_name
        if threshold is not None and nf.cntfwd.threshold > 0:
            nf.cntfwd.threshold = threshold
    return Service(read_schema(data_path(schema)), nfs, handlers=handlers,
                   **kwargs)


def drive(dep, procs, limit):
    """Run until every process finished or the simulated time limit.

    Returns
    -------
    completed : int
        Processes that finished.
    livelock : bool
        The limit was hit with processes outstanding.
    """
    env = dep.env
    done = env.all_of(procs)
    stop = env.timeout(max(0, int(limit) - int(env.now)))
    env.run(until=env.any_of([done, stop]))
    completed = sum(1 for p in procs if p.triggered and p.ok)
    return completed, completed < len(procs)


def round_trip(dep, a, b, size=KV_SIZE):
    """Unloaded a -> b -> a time of a size byte packet."""
    t = 0
    for src, dst in ((a, b), (b, a)):
        path = dep.topology.path(src, dst)
        for x, y in zip(path[:-1], path[1:]):
            link = dep.net.link(x, y)
            t += link.delay + link.serialization(size)
    return t


def apply_loss(dep, rate, seed):
    """Independent loss of probability rate on every link direction."""
    if rate <= 0:
        return
    for i, spec in enumerate(dep.topology.links):
        dep.net.inject_loss(spec.a, spec.b, rate, seed=seed*1000 + i,
                            both=True)


class Scenario(object):
    """Base class of the harness scenarios.

    Parameters
    ----------
    config : dict
        Sections ``topology``, ``client``, ``server``, ``switch``,
        ``controller``, ``network``, ``workload`` and ``run`` merged over the
        scenario defaults.
    verbose : bool
        Print progress.
    """

    name = None
    defaults = {}

    def __init__(self, config=None, verbose=False):
        base = {'topology': {'layout': '2-to-1'}, 'client': {}, 'server': {},
                'switch': {}, 'controller': {}, 'network': {},
                'workload': {}, 'run': {'time_limit': 2000*MS}}
        merge_dicts(base, copy.deepcopy(self.defaults), overwrite=True)
        if config:
            if not isinstance(config, dict):
                raise ConfigError('Scenario config must be a dict.')
            merge_dicts(base, copy.deepcopy(config), overwrite=True)
        self.config = base
        self.verbose = verbose
        self.limit = self._number('run', 'time_limit')
        self.deployments = {}
        if self.verbose:
            print("# Scenario {} configuration:".format(self.name))
            print(to_json(self.config))

    def _number(self, section, key, default=None, integer=False,
                minimum=0):
        value = get_input_value(self.config.get(section, {}), key,
                                default=default, verbose=self.verbose)
        try:
            value = int(value) if integer else float(value)
        except (TypeError, ValueError):
            raise ConfigError('{}.{} must be a number, got {!r}.'.format(
                section, key, value))
        if value < minimum:
            raise ConfigError('{}.{} must be >= {}.'.format(section, key,
                                                            minimum))
        return value

    def policies(self):
        return ['default']

    def options(self, policy):
        """Deployment options under a policy."""
        return copy.deepcopy(self.config)

    def deployment(self, policy, seed):
        opts = self.options(policy)
        try:
            topo = build_topology(opts['topology'], verbose=self.verbose)
        except (KeyError, TypeError, ValueError) as err:
            raise ConfigError('Bad topology: {}'.format(err))
        dep = Deployment(topo, opts, seed=seed, verbose=self.verbose > 1)
        apply_loss(dep, float(opts['network'].get('loss', 0)), seed)
        self.deployments[str(policy)] = dep
        return dep

    def workload(self, seed, policy):
        raise NotImplementedError

    def reference(self, work):
        """Software results of a workload: {name: array}."""
        return {}

    def tolerance(self, work):
        return 0.0

    def simulate(self, policy, work, seed):
        """(metrics row, result arrays) of one simulated run."""
        raise NotImplementedError

    def finalize(self, rows):
        """Add columns comparing the rows of one seed."""
        pass

    def common(self, dep, calls, completed, livelock, app_bytes, start=0):
        m = dep.client_metrics()
        elapsed = dep.env.now - start
        row = {'calls': calls, 'completed': completed,
               'livelock': int(livelock), 'sim_time_ns': int(dep.env.now),
               'goodput': metrics.goodput(app_bytes, elapsed),
               'chr': dep.cache_hit_ratio(),
               'fallback_slots': m.get('slots_fallback', 0),
               'overflow_retries': m.get('overflow_retries', 0),
               'loss_ratio': metrics.loss_ratio(dep.net.link_stats())}
        row.update(metrics.percentiles(m.get('latencies', [])))
        return row


def _calls(stub, method, requests, out, start=0, times=None):
    """Process issuing requests one after the other."""
    env = stub.agent.env
    if start > env.now:
        yield env.timeout(start - env.now)
    for req in requests:
        t0 = env.now
        rep = yield stub.call(method, req)
        out.append(rep)
        if times is not None:
            times.append(env.now - t0)


class SyncAgtr(Scenario):
    """Synchronous gradient aggregation (DT-1 over Training.Update)."""

    name = 'syncagtr'
    defaults = {'workload': {'elements': 4096, 'iterations': 2,
                             'scale': 1.0}}
    clear_mode = None

    def workload(self, seed, policy):
        n = self._number('workload', 'elements', default=4096, integer=True,
                         minimum=1)
        its = self._number('workload', 'iterations', default=1,
                           integer=True, minimum=1)
        scale = self._number('workload', 'scale', default=1.0)
        topo = build_topology(self.config['topology'])
        rng = workloads.streams(seed, 1)[0]
        t = numpy.array([workloads.tensors(rng, len(topo.clients), n, scale)
                         for _ in range(its)])
        return {'tensors': t, 'precision': 8}

    def reference(self, work):
        return {'result': numpy.array([oracle.sum_tensors(t)
                                       for t in work['tensors']])}

    def tolerance(self, work):
        return oracle.quantization_bound(work['tensors'].shape[1],
                                         work['precision'])

    def service(self, policy, n_clients):
        return _service('training.schema', ['agtr.nf'], threshold=n_clients,
                        clear_mode=self.clear_mode_for(policy))

    def clear_mode_for(self, policy):
        return self.clear_mode

    def simulate(self, policy, work, seed):
        dep = self.deployment(policy, seed)
        clients = dep.topology.clients
        gaid = dep.register(self.service(policy, len(clients)))
        t = work['tensors']
        outs = [[] for _ in clients]
        procs = [dep.env.process(_calls(
            dep.stub(c, gaid), 'Update',
            [{'tensor': t[it, i]} for it in range(t.shape[0])], outs[i]))
                 for i, c in enumerate(clients)]
        completed, livelock = drive(dep, procs, self.limit)
        app_bytes = 4 * sum(len(o) for o in outs) * t.shape[2]
        row = self.common(dep, len(procs)*t.shape[0],
                          sum(len(o) for o in outs), livelock, app_bytes)
        entry = dep.controller.entry(gaid)
        data_rows = 2*entry.half if entry.half else entry.data_rows
        row['cells'] = data_rows * 32
        row['clear_mode'] = entry.clear_mode
        arrays = {}
        if not livelock:
            results = [numpy.array([r['tensor'] for r in o]) for o in outs]
            row['violations'] = sum(int(not numpy.array_equal(results[0], r))
                                    for r in results[1:])
            arrays['result'] = results[0]
        return row, arrays


class LossSweep(SyncAgtr):
    """SyncAgtr throughput and correctness under random loss."""

    name = 'loss-sweep'
    defaults = {'workload': {'elements': 2048, 'iterations': 2},
                'sweep': {'rates': [0.0, 0.001, 0.01]}}

    def policies(self):
        return ['loss={}'.format(r) for r in self.config['sweep']['rates']]

    def options(self, policy):
        opts = copy.deepcopy(self.config)
        opts['network']['loss'] = float(policy.split('=')[1])
        return opts

    def finalize(self, rows):
        base = rows[0].get('goodput', 0.0)
        for row in rows:
            row['normalized_goodput'] = (row.get('goodput', 0.0) / base
                                         if base else float('nan'))


class OverflowSweep(SyncAgtr):
    """SyncAgtr with a forced fraction of out of range elements."""

    name = 'overflow-sweep'
    defaults = {'workload': {'elements': 4096, 'iterations': 1},
                'sweep': {'ratios': [0.0, 0.00001, 0.001, 0.01]}}

    def policies(self):
        return ['overflow={}'.format(r)
                for r in self.config['sweep']['ratios']]

    def workload(self, seed, policy):
        work = super(OverflowSweep, self).workload(seed, policy)
        ratio = float(policy.split('=')[1])
        rng = workloads.streams(seed, 2)[1]
        work['tensors'] = numpy.array([
            [workloads.force_overflow(rng, row, ratio) for row in t]
            for t in work['tensors']])
        return work


class ClearCompare(SyncAgtr):
    """SyncAgtr under the copy, shadow and lazy clear policies."""

    name = 'clear-compare'
    defaults = {'workload': {'elements': 2048, 'iterations': 4}}

    def policies(self):
        return ['copy', 'shadow', 'lazy']

    def clear_mode_for(self, policy):
        return policy


class WordCount(Scenario):
    """Asynchronous aggregation: word count reduce then query."""

    name = 'asyncagtr-wordcount'
    defaults = {'workload': {'keys': 1000, 'words': 4000, 'batch': 32,
                             'zipf': 1.0},
                'client': {'cache_window': 200*US},
                'server': {'cache_window': 200*US}}

    def workload(self, seed, policy):
        topo = build_topology(self.config['topology'])
        rng = workloads.streams(seed, 1)[0]
        return {'batches': workloads.word_batches(
            rng, len(topo.clients),
            self._number('workload', 'keys', default=1000, integer=True,
                         minimum=1),
            self._number('workload', 'words', default=4000, integer=True,
                         minimum=1),
            batch=self._number('workload', 'batch', default=32, integer=True,
                               minimum=1),
            a=self._number('workload', 'zipf', default=1.0))}

    def reference(self, work):
        keys, values = oracle.dict_arrays(oracle.reduce_counts(
            work['batches']))
        return {'keys': keys, 'values': values}

    def simulate(self, policy, work, seed):
        dep = self.deployment(policy, seed)
        clients = dep.topology.clients
        handlers = {'ReduceByKey': lambda fields: {'msg': 'ok'},
                    'Query': lambda fields: {}}
        gaid = dep.register(_service('mapreduce.schema',
                                     ['reduce.nf', 'query.nf'],
                                     handlers=handlers))
        outs = [[] for _ in clients]
        procs = [dep.env.process(_calls(
            dep.stub(c, gaid), 'ReduceByKey',
            [{'kvs': b} for b in work['batches'][i]], outs[i]))
                 for i, c in enumerate(clients)]
        completed, livelock = drive(dep, procs, self.limit)
        calls = sum(len(b) for b in work['batches'])
        app_bytes = 8 * sum(len(b) for client in work['batches']
                            for b in client)
        row = self.common(dep, calls, sum(len(o) for o in outs), livelock,
                          app_bytes)
        row['evictions'] = dep.server_metrics().get('evictions', 0)
        arrays = {}
        if not livelock:
            query = []
            proc = dep.env.process(_calls(dep.stub(clients[0], gaid),
                                          'Query', [{'msg': 'all'}], query))
            _, stuck = drive(dep, [proc], dep.env.now + self.limit)
            row['livelock'] = int(stuck)
            if not stuck:
                keys, values = oracle.dict_arrays(query[0]['kvs'])
                arrays = {'keys': keys, 'values': values}
        return row, arrays


class CacheCompare(WordCount):
    """Word count with a switch cache of a fraction of the key set under
    each replacement policy."""

    name = 'cache-compare'
    defaults = {'workload': {'keys': 1000, 'words': 6000, 'batch': 16,
                             'zipf': 1.0},
                'client': {'cache_window': 200*US},
                'server': {'cache_window': 200*US},
                'cache': {'fraction': 0.1,
                          'policies': ['lru', 'fcfs', 'hash', 'pon']}}

    def policies(self):
        return list(self.config['cache']['policies'])

    def options(self, policy):
        opts = copy.deepcopy(self.config)
        keys = self._number('workload', 'keys', default=1000, integer=True,
                            minimum=1)
        frac = float(self.config['cache']['fraction'])
        opts['server']['cache_policy'] = policy
        opts['server']['cache_cells'] = max(1, int(round(frac * keys)))
        return opts

    def workload(self, seed, policy):
        topo = build_topology(self.config['topology'])
        rng = workloads.streams(seed, 1)[0]
        return {'batches': workloads.word_stream(
            rng, len(topo.clients),
            self._number('workload', 'keys', default=1000, integer=True,
                         minimum=1),
            self._number('workload', 'words', default=6000, integer=True,
                         minimum=1),
            batch=self._number('workload', 'batch', default=16, integer=True,
                               minimum=1),
            a=self._number('workload', 'zipf', default=1.0))}

    def finalize(self, rows):
        rho = metrics.spearman([r['chr'] for r in rows],
                               [r['goodput'] for r in rows])
        for row in rows:
            row['spearman'] = rho


class KeyValueMonitor(Scenario):
    """Flow counters pushed by MonitorCall and read back by switch served
    queries."""

    name = 'keyvalue-monitor'
    defaults = {'workload': {'keys': 256, 'reports': 8, 'batch': 16,
                             'zipf': 1.0}}

    def workload(self, seed, policy):
        topo = build_topology(self.config['topology'])
        rng = workloads.streams(seed, 1)[0]
        return {'reports': workloads.monitor_reports(
            rng, len(topo.clients),
            self._number('workload', 'keys', default=1000, integer=True,
                         minimum=1),
            self._number('workload', 'reports', integer=True, minimum=1),
            batch=self._number('workload', 'batch', default=32, integer=True,
                               minimum=1),
            a=self._number('workload', 'zipf', default=1.0))}

    def reference(self, work):
        keys, values = oracle.dict_arrays(oracle.reduce_counts(
            work['reports']))
        return {'keys': keys, 'values': values}

    def simulate(self, policy, work, seed):
        dep = self.deployment(policy, seed)
        clients = dep.topology.clients
        server = dep.topology.servers[0]
        handlers = {'MonitorCall':
                    lambda fields: {'payload': fields.get('payload', '')}}
        gaid = dep.register(_service('monitor.schema',
                                     ['monitor.nf', 'kvquery.nf'],
                                     handlers=handlers))
        outs = [[] for _ in clients]
        procs = [dep.env.process(_calls(
            dep.stub(c, gaid), 'MonitorCall',
            [{'kvs': b, 'payload': 'Hello'} for b in work['reports'][i]],
            outs[i])) for i, c in enumerate(clients)]
        completed, livelock = drive(dep, procs, self.limit)
        calls = sum(len(r) for r in work['reports'])
        app_bytes = 8 * sum(len(b) for client in work['reports']
                            for b in client)
        row = self.common(dep, calls, sum(len(o) for o in outs), livelock,
                          app_bytes)
        row['violations'] = sum(1 for o in outs for r in o
                                if r.get('payload') != 'Hello')
        arrays = {}
        if livelock:
            return row, arrays
        keys = sorted(oracle.reduce_counts(work['reports']))
        groups = [dict((k, 0) for k in keys[i:i+32])
                  for i in range(0, len(keys), 32)]
        stub = dep.stub(clients[0], gaid)
        # The first round installs the mappings, the second one hits.
        first, second, times = [], [], []
        proc = dep.env.process(_calls(stub, 'Query',
                                      [{'kvs': g} for g in groups], first))
        _, stuck = drive(dep, [proc], dep.env.now + self.limit)
        if not stuck:
            proc = dep.env.process(_calls(stub, 'Query',
                                          [{'kvs': g} for g in groups],
                                          second, times=times))
            _, stuck = drive(dep, [proc], dep.env.now + self.limit)
        row['livelock'] = int(stuck)
        if stuck:
            return row, arrays
        totals = {}
        for rep in second:
            totals.update(rep['kvs'])
        rtt = round_trip(dep, clients[0], server)
        row['rtt_ns'] = rtt
        row['hit_rtt_ratio'] = float(numpy.median(times)) / rtt
        keys, values = oracle.dict_arrays(totals)
        arrays = {'keys': keys, 'values': values}
        return row, arrays


class AgreementVote(Scenario):
    """Rounds of one-hot ballots tallied in the switch."""

    name = 'agreement-vote'
    defaults = {'topology': {'layout': '3-to-1'},
                'workload': {'candidates': 4, 'rounds': 5, 'bias': 0.6}}

    def workload(self, seed, policy):
        topo = build_topology(self.config['topology'])
        rng = workloads.streams(seed, 1)[0]
        return {'ballots': workloads.ballots(
            rng, len(topo.clients),
            self._number('workload', 'candidates', integer=True, minimum=1),
            n_rounds=self._number('workload', 'rounds', integer=True,
                                  minimum=1),
            bias=self._number('workload', 'bias'))}

    def reference(self, work):
        counts, decisions = oracle.tally(work['ballots'])
        return {'counts': counts, 'decisions': decisions}

    def simulate(self, policy, work, seed):
        dep = self.deployment(policy, seed)
        clients = dep.topology.clients
        gaid = dep.register(_service('vote.schema', ['vote.nf'],
                                     threshold=len(clients)))
        b = work['ballots']
        outs = [[] for _ in clients]
        procs = [dep.env.process(_calls(
            dep.stub(c, gaid), 'Vote',
            [{'ballot': b[r, i]} for r in range(b.shape[0])], outs[i]))
                 for i, c in enumerate(clients)]
        completed, livelock = drive(dep, procs, self.limit)
        app_bytes = 8 * b.size
        row = self.common(dep, b.shape[0]*len(clients),
                          sum(len(o) for o in outs), livelock, app_bytes)
        arrays = {}
        if not livelock:
            results = [numpy.array([r['ballot'] for r in o]) for o in outs]
            row['violations'] = sum(int(not numpy.array_equal(results[0], r))
                                    for r in results[1:])
            arrays = {'counts': results[0],
                      'decisions': numpy.argmax(results[0], axis=1)}
        return row, arrays


def _locker(stub, attempts, grants, holds):
    env = stub.agent.env
    for start, name, hold in attempts:
        if start > env.now:
            yield env.timeout(start - env.now)
        yield stub.call('GetLock', {'kvs': {name: 1}})
        acquired = env.now
        grants.append(name)
        yield env.timeout(hold)
        holds.append((name, acquired, env.now))
        yield stub.call('Release', {'kvs': {name: 1}})


class LockScenario(Scenario):
    """Clients contending for a few test&set locks."""

    name = 'lock'
    defaults = {'topology': {'layout': '4-to-1'},
                'workload': {'locks': 2, 'attempts': 5, 'hold': 20000}}

    def workload(self, seed, policy):
        topo = build_topology(self.config['topology'])
        rng = workloads.streams(seed, 1)[0]
        return {'schedule': workloads.lock_schedule(
            rng, len(topo.clients),
            self._number('workload', 'locks', integer=True, minimum=1),
            self._number('workload', 'attempts', integer=True, minimum=1),
            hold=self._number('workload', 'hold', integer=True, minimum=1))}

    def reference(self, work):
        return {'grants': oracle.lock_grants(work['schedule'])}

    def simulate(self, policy, work, seed):
        dep = self.deployment(policy, seed)
        clients = dep.topology.clients
        handlers = {'GetLock': lambda fields: {'msg': 'granted'},
                    'Release': lambda fields: {'msg': 'released'}}
        gaid = dep.register(_service('lock.schema', ['lock.nf', 'release.nf'],
                                     handlers=handlers))
        grants = [[] for _ in clients]
        holds = []
        procs = [dep.env.process(_locker(dep.stub(c, gaid),
                                         work['schedule'][i], grants[i],
                                         holds))
                 for i, c in enumerate(clients)]
        completed, livelock = drive(dep, procs, self.limit)
        calls = 2 * sum(len(s) for s in work['schedule'])
        row = self.common(dep, calls, completed, livelock,
                          8 * sum(len(g) for g in grants))
        row['violations'] = mutual_exclusion_violations(holds)
        arrays = {}
        if not livelock:
            arrays['grants'] = numpy.array([len(g) for g in grants],
                                           dtype=numpy.int64)
        return row, arrays


def mutual_exclusion_violations(holds):
    """Overlapping (acquire, release) intervals of the same lock."""
    n = 0
    by_lock = {}
    for name, a, b in holds:
        by_lock.setdefault(name, []).append((a, b))
    for spans in by_lock.values():
        spans.sort()
        for (a0, b0), (a1, b1) in zip(spans[:-1], spans[1:]):
            if a1 < b0:
                n += 1
    return n


def _heavy(stub, n, rng, until, done, rounds):
    """Back to back Updates until ``until``; ``rounds`` is shared by the
    members of an application so that they stop after the same call."""
    env = stub.agent.env
    k = 0
    while k < rounds[0] or env.now < until:
        rounds[0] = max(rounds[0], k + 1)
        yield stub.call('Update', {'tensor': rng.standard_normal(n)})
        done.append((env.now, 4*n))
        k += 1


def _small(stub, period, until, times):
    env = stub.agent.env
    while env.now < until:
        t0 = env.now
        yield stub.call('MonitorCall', {'kvs': {'flow': 1},
                                        'payload': 'Hello'})
        times.append(env.now - t0)
        if period > env.now - t0:
            yield env.timeout(period - (env.now - t0))


class ConcurrencyMix(Scenario):
    """Two bandwidth heavy aggregation apps and small monitoring apps
    sharing the bottleneck of a dumbbell.

    Policies: ``cc-on`` and ``cc-off`` run ``workload.apps`` applications
    with congestion control on and off, ``apps=N`` runs N applications with
    congestion control on and ``solo`` runs one small application alone.
    """

    name = 'concurrency-mix'
    defaults = {'topology': {'layout': 'dumbbell', 'left': 5, 'right': 1,
                             'servers': ['r0'], 'inc_switch': 'swl',
                             'link': {'rate': 10e9, 'capacity': 64},
                             'bottleneck': {'rate': 1e9}},
                'server': {'cores': 8},
                'switch': {'ecn_threshold': 16},
                'workload': {'apps': 4, 'elements': 2048,
                             'duration': 20*MS, 'small_period': 2*MS},
                'scaling': {'apps': [4, 20]}}

    def policies(self):
        return (['cc-on', 'cc-off'] +
                ['apps={}'.format(n) for n in self.config['scaling']['apps']] +
                ['solo'])

    def options(self, policy):
        opts = copy.deepcopy(self.config)
        opts['client']['congestion_control'] = policy != 'cc-off'
        return opts

    def n_apps(self, policy):
        if policy.startswith('apps='):
            n = int(policy.split('=')[1])
            if n < 2:
                raise ConfigError('scaling.apps must be >= 2, got {}.'.format(
                    n))
            return n
        return self._number('workload', 'apps', integer=True, minimum=2)

    def workload(self, seed, policy):
        return {'seed': seed}

    def simulate(self, policy, work, seed):
        dep = self.deployment(policy, seed)
        solo = policy == 'solo'
        n_apps = 1 if solo else self.n_apps(policy)
        n = self._number('workload', 'elements', default=4096, integer=True,
                         minimum=1)
        duration = self._number('workload', 'duration', integer=True)
        period = self._number('workload', 'small_period', integer=True)
        clients = dep.topology.clients
        if len(clients) < 5:
            raise ConfigError('concurrency-mix needs at least 5 clients.')
        pairs = [] if solo else [clients[0:2], clients[2:4]]
        small_host = clients[4]
        procs = []
        heavy = [[] for _ in pairs]
        for a, members in enumerate(pairs):
            gaid = dep.register(_service('training.schema', ['agtr.nf'],
                                         app_name='DT-{}'.format(a+1),
                                         threshold=len(members)),
                                members=members)
            rounds = [0]
            for i, c in enumerate(members):
                rng = numpy.random.default_rng([seed, a, i])
                out = heavy[a] if i == 0 else []
                procs.append(dep.env.process(_heavy(dep.stub(c, gaid), n, rng,
                                                    duration, out, rounds)))
        times = []
        handlers = {'MonitorCall':
                    lambda fields: {'payload': fields.get('payload', '')}}
        for s in range(n_apps - len(pairs)):
            gaid = dep.register(_service('monitor.schema',
                                         ['monitor.nf', 'kvquery.nf'],
                                         handlers=handlers,
                                         app_name='MON-{}'.format(s+1),
                                         memory=8),
                                members=[small_host])
            procs.append(dep.env.process(_small(dep.stub(small_host, gaid),
                                                period, duration, times)))
        completed, livelock = drive(dep, procs, duration + self.limit)
        rates = [metrics.goodput(sum(b for _, b in h), duration)
                 for h in heavy]
        row = self.common(dep, len(procs), completed, livelock,
                          sum(b for h in heavy for _, b in h), start=0)
        row['goodput'] = sum(rates)
        row['goodput_heavy_1'] = rates[0] if rates else 0.0
        row['goodput_heavy_2'] = rates[1] if rates else 0.0
        row['jain'] = metrics.fairness(rates) if rates else 1.0
        row['ecn_acks'] = dep.client_metrics().get('ecn_acks', 0)
        row['apps'] = n_apps
        lat = metrics.percentiles(times)
        row['small_p50'] = lat['p50']
        row['small_p99'] = lat['p99']
        return row, {}

    def finalize(self, rows):
        """Small application latency relative to ``solo`` and heavy goodput
        relative to the smallest ``apps=N`` run."""
        solo = [r for r in rows if r['policy'] == 'solo']
        scaled = [r for r in rows if r['policy'].startswith('apps=')]
        for row in rows:
            if solo and solo[0]['small_p50'] > 0:
                row['small_inflation'] = (row['small_p50'] /
                                          solo[0]['small_p50'] - 1.0)
            if scaled and scaled[0]['goodput'] > 0:
                row['heavy_vs_fewest'] = (row['goodput'] /
                                          scaled[0]['goodput'])


SCENARIOS = dict((cls.name, cls) for cls in (
    SyncAgtr, WordCount, KeyValueMonitor, AgreementVote, LockScenario,
    ConcurrencyMix, CacheCompare, LossSweep, OverflowSweep, ClearCompare))


def get_scenario(name, config=None, verbose=False):
    try:
        cls = SCENARIOS[name]
    except KeyError:
        raise UnknownScenario('Unknown scenario {}. Choose from {}.'.format(
            name, ', '.join(sorted(SCENARIOS))))
    return cls(config, verbose=verbose)


def run_scenario(name, config=None, seed=7, verbose=False):
    """Simulate every policy of a scenario for one seed.

    Returns
    -------
    report : :class:`incnet.harness.report.Report`
        One row per policy.

    Raises
    ------
    UnknownScenario
    ConfigError
    """
    scenario = get_scenario(name, config, verbose=verbose)
    rows = []
    arrays = {}
    for policy in scenario.policies():
        work = scenario.workload(seed, policy)
        if verbose:
            print("# Running {} policy {} seed {}.".format(name, policy,
                                                          seed))
        row, result = scenario.simulate(policy, work, seed)
        row.update({'scenario': name, 'policy': str(policy), 'seed': seed,
                    'tolerance': scenario.tolerance(work)})
        rows.append(row)
        if result:
            arrays[(name, str(policy), seed)] = result
    scenario.finalize(rows)
    return Report(rows, arrays)


def run_reference(name, config=None, seed=7, verbose=False):
    """Software reference report of the same workloads."""
    scenario = get_scenario(name, config, verbose=verbose)
    rows = []
    arrays = {}
    for policy in scenario.policies():
        work = scenario.workload(seed, policy)
        result = scenario.reference(work)
        rows.append({'scenario': name, 'policy': str(policy), 'seed': seed,
                     'tolerance': scenario.tolerance(work)})
        if result:
            arrays[(name, str(policy), seed)] = result
    return Report(rows, arrays)
