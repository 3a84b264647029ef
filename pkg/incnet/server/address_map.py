"""Logical to physical address mapping and switch cache replacement."""

import numpy
from incnet.client.stream import ring_rows
from incnet.utils.io import get_input_value
from incnet.utils.misc import IncnetError
from incnet.wire.packet import NSLOTS

POLICIES = ('lru', 'fcfs', 'hash', 'pon')
_ALIASES = {'periodic-lru': 'lru', 'lru': 'lru', 'fcfs': 'fcfs',
            'hash': 'hash', 'pon': 'pon', 'power-of-n': 'pon'}


class UnknownPolicy(IncnetError):
    pass


class Mapping(object):
    """Switch location of one logical address.

    Attributes
    ----------
    seg, row : int
        Register cell, -1 if the key owns no cell.
    counter : int
        Counter index, -1 if the key owns no counter.
    version : int
        Installation number, newer mappings supersede revoked ones.
    """

    def __init__(self, laddr, name, seg=-1, row=-1, counter=-1, version=0):
        self.laddr = laddr
        self.name = name
        self.seg = seg
        self.row = row
        self.counter = counter
        self.version = version

    def as_list(self):
        return [self.laddr, self.name, self.seg, self.row, self.counter,
                self.version]

    def __repr__(self):
        return 'Mapping({})'.format(self.as_list())


class AddressMap(object):
    """Per application table laddr -> {physical | uncached}.

    The application's data rows start with the collective ring band (if any
    rings are requested); the remaining rows form a grid of free cells,
    numbered ``c`` with segment ``c % 32`` and row ``map_row + c // 32``.
    Counter indices for CntFwd key fields come from the same rows of the
    counter bank.

    Parameters
    ----------
    gaid : int
        Application id.
    first_row : int
        First data row of the reservation.
    rows : int
        Usable data rows (the primary half in shadow mode).
    options : dict
        ``cache_policy`` (lru, fcfs, hash or pon), ``pon_threshold`` (5),
        ``cache_cells`` (cap on map cells, default all).
    n_rings : int
        Rings to lay out for collective methods.
    half : int
        Shadow partner distance in rows, 0 outside shadow mode.
    verbose : bool
        Print set up information.
    """

    def __init__(self, gaid, first_row, rows, options=None, n_rings=0,
                 half=0, verbose=False):
        if options is None:
            options = {}
        self.gaid = gaid
        policy = get_input_value(options, 'cache_policy', default='lru',
                                 verbose=verbose)
        self.policy = _ALIASES.get(str(policy).lower())
        if self.policy is None:
            raise UnknownPolicy('Unknown cache policy {}.'.format(policy))
        self.pon_threshold = get_input_value(options, 'pon_threshold',
                                             default=5, verbose=verbose)
        self.half = half
        if n_rings and rows < ring_rows(n_rings):
            n_rings = 0
        self.n_rings = n_rings
        self.ring_base = first_row
        self.map_row = first_row + ring_rows(n_rings)
        map_rows = max(0, rows - ring_rows(n_rings))
        ncells = map_rows * NSLOTS
        cap = get_input_value(options, 'cache_cells', default=None,
                              verbose=verbose)
        if cap is not None:
            ncells = min(ncells, int(cap))
        self.free = numpy.ones(ncells, dtype=bool)
        self.free_counters = list(range(self.map_row, self.map_row + map_rows))
        self.table = {}
        self.names = {}
        self.cells = {}
        self.window = {}
        self.cumulative = {}
        self.version = 0
        self.evictions = 0

    @property
    def capacity(self):
        return len(self.free)

    @property
    def rings(self):
        """Ring layout handed to clients, None without rings."""
        if not self.n_rings:
            return None
        return (self.ring_base, self.n_rings, self.half)

    def cell(self, c):
        return c % NSLOTS, self.map_row + c // NSLOTS

    def cell_index(self, seg, row):
        return (row - self.map_row) * NSLOTS + seg

    def owner(self, name, laddr):
        """True if name owns laddr; the first name seen for an address owns
        it, later colliding names live on the server."""
        return self.names.setdefault(laddr, name) == name

    def lookup(self, laddr):
        return self.table.get(laddr)

    def at_cell(self, seg, row):
        """Mapping occupying a register cell, None if free."""
        return self.cells.get((seg, row))

    def _new_version(self):
        self.version += 1
        return self.version

    def allocate_mapping(self, laddr, name, counter=False):
        """Mapping for a first-use key, None when it stays uncached.

        Parameters
        ----------
        laddr : int
            Logical address.
        name : string
            Key name carried by the first-use packet.
        counter : bool
            The key needs a CntFwd counter rather than a register cell.

        Returns
        -------
        mapping : :class:`Mapping` or None
        """
        m = self.table.get(laddr)
        if m is not None:
            return m if m.name == name else None
        if not self.owner(name, laddr):
            return None
        if counter:
            if not self.free_counters:
                return None
            m = Mapping(laddr, name, counter=self.free_counters.pop(0),
                        version=self._new_version())
            self.table[laddr] = m
            return m
        if self.policy == 'pon' or not self.capacity:
            return None
        if self.policy == 'hash':
            c = laddr % self.capacity
            if not self.free[c]:
                return None
        else:
            free = numpy.flatnonzero(self.free)
            if not len(free):
                return None
            c = int(free[0])
        return self._install(laddr, name, c)

    def _install(self, laddr, name, c):
        self.free[c] = False
        seg, row = self.cell(c)
        m = Mapping(laddr, name, seg, row, version=self._new_version())
        self.table[laddr] = m
        self.cells[(seg, row)] = m
        return m

    def install(self, laddr):
        """Give laddr the first free cell, None if the cache is full."""
        free = numpy.flatnonzero(self.free)
        if not len(free) or laddr not in self.names:
            return None
        return self._install(laddr, self.names[laddr], int(free[0]))

    def evict(self, laddr):
        """Free the cell of laddr and return its mapping."""
        m = self.table.pop(laddr)
        del self.cells[(m.seg, m.row)]
        self.free[self.cell_index(m.seg, m.row)] = True
        self.evictions += 1
        return m

    def count(self, counts):
        """Add client reported per-laddr uses to the current window."""
        for laddr, n in counts:
            self.window[laddr] = self.window.get(laddr, 0) + n
            self.cumulative[laddr] = self.cumulative.get(laddr, 0) + n

    def cache_sweep(self, counts=None):
        """Plan the end of a cache update window.

        Parameters
        ----------
        counts : list of (laddr, n), optional
            Uses reported since the last call to :meth:`count`.

        Returns
        -------
        plan : dict
            ``evict``: cached laddrs to drain, ``install``: laddrs to place
            in the freed or free cells, in order.
        """
        if counts:
            self.count(counts)
        window, self.window = self.window, {}
        plan = {'evict': [], 'install': []}
        known = [l for l in window if l in self.names]
        cached = set(l for l, m in self.table.items() if m.seg >= 0)
        nfree = int(numpy.count_nonzero(self.free))
        if self.policy == 'lru':
            ranked = sorted(known, key=lambda l: (-window[l], l))
            hot = ranked[:self.capacity]
            wanted = [l for l in hot if l not in cached]
            hot = set(hot)
            victims = sorted((l for l in cached if l not in hot),
                             key=lambda l: (window.get(l, 0), l))
            need = max(0, len(wanted) - nfree)
            plan['evict'] = victims[:need]
            plan['install'] = wanted[:nfree + len(plan['evict'])]
        elif self.policy == 'pon':
            hot = sorted((l for l in self.cumulative
                          if l in self.names and l not in cached and
                          self.cumulative[l] > self.pon_threshold),
                         key=lambda l: (-self.cumulative[l], l))
            plan['install'] = hot[:nfree]
        return plan

    def cells_used(self):
        return int(numpy.count_nonzero(~self.free))

    def snapshot(self):
        return {'gaid': self.gaid, 'policy': self.policy,
                'capacity': self.capacity, 'cached': len(self.cells),
                'evictions': self.evictions, 'version': self.version}
