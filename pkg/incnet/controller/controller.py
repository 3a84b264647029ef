"""Application registry and switch memory manager."""

from incnet.netfilter.config import (
        ServiceFilters, app_clear_mode, pipeline_config
        )
from incnet.switch.state import AppEntry, PSEUDO_SRRT
from incnet.utils.io import get_input_value, write_dict_h5
from incnet.utils.misc import IncnetError, print_section_header

MS = 1000000


class DuplicateAppName(IncnetError):
    pass


class UnknownApp(IncnetError):
    pass


class NoSwitchCapacity(IncnetError):
    """The switch has no free srrt slot."""
    pass


class AppRecord(object):
    """Registry entry of one application."""

    def __init__(self, gaid, name, filters, request, clear_mode, server,
                 members, now):
        self.gaid = gaid
        self.name = name
        self.filters = filters
        self.request = request
        self.clear_mode = clear_mode
        self.server = server
        self.members = list(members)
        self.seen_at = now
        self.suspended = False
        self.notified = False
        self.srrts = []

    def as_dict(self):
        return {'gaid': self.gaid, 'name': self.name, 'request': self.request,
                'clear_mode': self.clear_mode, 'server': str(self.server),
                'members': ','.join(self.members),
                'suspended': int(self.suspended), 'srrts': len(self.srrts)}


class Controller(object):
    """Registers applications and programs the switch.

    Parameters
    ----------
    switch : :class:`incnet.switch.state.SwitchState`
        The switch this controller programs.
    options : dict
        ``srrt_pool`` (1024), ``level1_timeout`` (1 s), ``poll_period``
        (250 ms); times in ns.
    verbose : bool
        Print registration information.
    """

    def __init__(self, switch, options=None, verbose=False):
        if options is None:
            options = {}
        self.switch = switch
        self.verbose = verbose
        self.srrt_pool = get_input_value(options, 'srrt_pool', default=1024,
                                         verbose=verbose)
        self.level1 = get_input_value(options, 'level1_timeout',
                                      default=1000*MS, verbose=verbose)
        self.poll_period = get_input_value(options, 'poll_period',
                                           default=250*MS, verbose=verbose)
        self.free_rows = [(0, switch.ncells)]
        self.free_srrt = list(range(self.srrt_pool))
        self.next_pseudo = PSEUDO_SRRT
        self.next_gaid = 1
        self.apps = {}
        self.listeners = {}

    # Registration.
    def register_app(self, filters, memory_request=0, server=None,
                     members=(), clear_mode=None, now=0):
        """Register an application and reserve switch memory.

        Parameters
        ----------
        filters : :class:`incnet.netfilter.config.ServiceFilters` or list
            The application's method filters (NetFilters).
        memory_request : int
            Cells per register segment (data rows) requested.
        server : string
            Host of the application's server agent.
        members : list
            Client hosts.
        clear_mode : string
            Application wide clear policy, by default taken from the filters.
        now : int
            Registration time.

        Returns
        -------
        gaid : int
            Fresh application id.
        reservation : tuple
            (base row, rows); rows is 0 when the request does not fit.
        """
        if isinstance(filters, ServiceFilters):
            nfs = filters.filters
            configs = filters.configs()
            mode = filters.clear_mode()
        else:
            nfs = list(filters)
            configs = [pipeline_config(nf) for nf in nfs]
            mode = app_clear_mode(nfs)
        name = nfs[0].app_name
        if any(r.name == name for r in self.apps.values()):
            raise DuplicateAppName('{} is already registered.'.format(name))
        if clear_mode is not None:
            mode = clear_mode
        gaid = self.next_gaid
        self.next_gaid += 1
        record = AppRecord(gaid, name, nfs, memory_request, mode, server,
                           members, now)
        self.apps[gaid] = record
        entry = AppEntry(gaid, name, clear_mode=mode, server=server,
                         members=members, programs=configs)
        entry.last_seen = now
        self.switch.add_app(entry)
        self._reserve(record, entry)
        if self.verbose:
            print("# Registered {} as gaid {} with rows [{}, {}).".format(
                name, gaid, entry.base, entry.base + entry.rows))
        return gaid, (entry.base, entry.rows)

    def _rows_for(self, record):
        if record.request <= 0:
            return 0
        if record.clear_mode == 'shadow':
            return 2*record.request + 1
        return record.request + 1

    def _reserve(self, record, entry):
        rows = self._rows_for(record)
        entry.set_reservation(0, 0)
        if rows == 0:
            return
        for i, (start, length) in enumerate(self.free_rows):
            if length >= rows:
                # First fit.
                if length == rows:
                    self.free_rows.pop(i)
                else:
                    self.free_rows[i] = (start + rows, length - rows)
                entry.set_reservation(start, rows)
                return

    def _release_rows(self, entry):
        if entry.rows == 0:
            return
        base, rows = entry.base, entry.rows
        self.switch.registers[:, base:base+rows] = 0
        self.switch.counters[base:base+rows] = 0
        self.free_rows.append((base, rows))
        self.free_rows.sort()
        merged = []
        for start, length in self.free_rows:
            if merged and merged[-1][0] + merged[-1][1] == start:
                merged[-1] = (merged[-1][0], merged[-1][1] + length)
            else:
                merged.append((start, length))
        self.free_rows = merged
        entry.set_reservation(0, 0)

    def deregister(self, gaid):
        record = self._record(gaid)
        entry = self.switch.apps[gaid]
        self._release_rows(entry)
        for srrt in record.srrts:
            self.release_srrt(gaid, srrt)
        self.switch.remove_app(gaid)
        del self.apps[gaid]
        self.listeners.pop(gaid, None)

    def _record(self, gaid):
        record = self.apps.get(gaid)
        if record is None:
            raise UnknownApp('gaid {} is not registered.'.format(gaid))
        return record

    def entry(self, gaid):
        self._record(gaid)
        return self.switch.apps[gaid]

    def lookup(self, name):
        for gaid, record in self.apps.items():
            if record.name == name:
                return gaid
        raise UnknownApp('No application named {}.'.format(name))

    # Connections.
    def allocate_srrt(self, gaid, w_max=256):
        """Allocate a switch bitmap slot, all ones on the switch."""
        record = self._record(gaid)
        if not self.free_srrt or record.suspended:
            raise NoSwitchCapacity('No free srrt slot for gaid '
                                   '{}.'.format(gaid))
        srrt = self.free_srrt.pop(0)
        self.switch.allocate_flow(srrt, gaid, w_max)
        record.srrts.append(srrt)
        return srrt

    def allocate_pseudo(self):
        """Host-local pseudo flow id, never present in the switch pool."""
        srrt = self.next_pseudo
        self.next_pseudo += 1
        return srrt

    def release_srrt(self, gaid, srrt):
        self.switch.release_flow(srrt)
        record = self.apps.get(gaid)
        if record is not None and srrt in record.srrts:
            record.srrts.remove(srrt)
        if srrt not in self.free_srrt:
            self.free_srrt.append(srrt)
            self.free_srrt.sort()

    # Control channel register access.
    def _check_rows(self, gaid, rows):
        entry = self.entry(gaid)
        for row in rows:
            if not entry.base <= row < entry.base + entry.rows:
                raise ValueError('Row {} is outside the reservation of gaid '
                                 '{}.'.format(row, gaid))

    def read(self, gaid, seg, row):
        self._check_rows(gaid, [row])
        return int(self.switch.registers[seg, row])

    def write(self, gaid, seg, row, value):
        self._check_rows(gaid, [row])
        self.switch.registers[seg, row] = value

    def read_and_clear(self, gaid, seg, row):
        value = self.read(gaid, seg, row)
        self.switch.registers[seg, row] = 0
        return value

    def read_counter(self, gaid, index):
        self._check_rows(gaid, [index])
        return int(self.switch.counters[index])

    def write_counter(self, gaid, index, value):
        self._check_rows(gaid, [index])
        self.switch.counters[index] = value

    # Timeouts.
    def subscribe(self, gaid, callback):
        """Deliver level-1 notifications of gaid to callback(gaid)."""
        self._record(gaid)
        self.listeners[gaid] = callback

    def poll_timestamps(self, now):
        """Level-1 notifications for applications idle beyond the timeout.

        Each idle period produces one notification.  Applications without a
        listener are suspended directly.

        Returns
        -------
        notified : list of int
            gaids notified by this poll.
        """
        notified = []
        for gaid, record in sorted(self.apps.items()):
            entry = self.switch.apps[gaid]
            if entry.last_seen > record.seen_at:
                record.seen_at = entry.last_seen
                record.notified = False
            if record.suspended or record.notified:
                continue
            if now - entry.last_seen > self.level1:
                record.notified = True
                notified.append(gaid)
                if self.verbose:
                    print("# Level-1 timeout of gaid {} at {} ns.".format(
                        gaid, now))
                callback = self.listeners.get(gaid)
                if callback is None:
                    self.suspend(gaid)
                else:
                    callback(gaid)
        return notified

    def suspend(self, gaid):
        """Reclaim the switch rows and srrt slots of an idle application."""
        record = self._record(gaid)
        entry = self.switch.apps[gaid]
        self._release_rows(entry)
        for srrt in list(record.srrts):
            self.release_srrt(gaid, srrt)
        record.suspended = True

    def resume(self, gaid, now=0):
        """Re-reserve memory for a suspended application."""
        record = self._record(gaid)
        entry = self.switch.apps[gaid]
        if record.suspended:
            record.suspended = False
            record.notified = False
            self._reserve(record, entry)
        entry.last_seen = now
        record.seen_at = now
        return entry.base, entry.rows

    def run(self, env):
        """simpy process polling the switch timestamps."""
        while True:
            yield env.timeout(self.poll_period)
            self.poll_timestamps(env.now)

    # Reports.
    def registry(self):
        reserved = dict((g, (e.base, e.rows)) for g, e in
                        self.switch.apps.items())
        return {'apps': dict((str(g), dict(r.as_dict(),
                                           base=reserved[g][0],
                                           rows=reserved[g][1]))
                             for g, r in self.apps.items()),
                'free_rows': sum(l for _, l in self.free_rows),
                'free_srrt': len(self.free_srrt)}

    def dump(self, filename, group='controller'):
        write_dict_h5(filename, group, self.registry())

    def print_registry(self):
        print_section_header('Controller registry')
        for gaid, record in sorted(self.apps.items()):
            entry = self.switch.apps[gaid]
            print("# {:>4d} {:<12s} rows [{}, {}) clear {} members {}".format(
                gaid, record.name, entry.base, entry.base + entry.rows,
                record.clear_mode, ','.join(record.members)))
