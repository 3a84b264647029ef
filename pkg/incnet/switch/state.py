"""Register memory, admission table and per-flow reliability state of one
emulated INC switch."""

import numpy
from incnet.utils.io import get_input_value, write_dict_h5
from incnet.utils.misc import IncnetError
from incnet.wire.packet import NSLOTS

# Cells per register segment.
NCELLS = 40960
# srrt values at or above this are host-local pseudo flows.
PSEUDO_SRRT = 0x8000
# Logical address reserved for the per application ECN cell.
ECN_KEY = 0xFFFFFFFF


class UnknownSrrt(IncnetError):
    """Packet names an srrt slot the switch has not allocated."""
    pass


class RegisterAccessError(IncnetError):
    """A register cell was accessed twice during one packet traversal."""
    pass


class FlowBits(object):
    """Reliability state of one srrt slot.

    Parameters
    ----------
    gaid : int
        Owning application.
    w_max : int
        Send window of the flow.

    Attributes
    ----------
    request : :class:`numpy.ndarray`
        Flip bits of client to server packets, all ones at start.
    reply_seq : :class:`numpy.ndarray`
        Sequence number of the last reply seen per window index, -1 if none.
    overflow : :class:`numpy.ndarray`
        Slot mask of addTo saturations recorded on the fresh pass per index.
    """

    def __init__(self, gaid, w_max):
        self.gaid = gaid
        self.w_max = w_max
        self.request = numpy.ones(w_max, dtype=numpy.uint8)
        self.reply_seq = numpy.full(w_max, -1, dtype=numpy.int64)
        self.overflow = numpy.zeros(w_max, dtype=numpy.uint32)


class AppEntry(object):
    """Admission table entry of a registered application.

    Parameters
    ----------
    gaid : int
        Global application id.
    name : string
        Application name.
    base : int
        First reserved row. Row ``base`` is the control row holding the ECN
        cell, data rows follow.
    rows : int
        Number of reserved rows, 0 when the application runs without switch
        memory.
    clear_mode : string
        Application wide clear policy.
    server : string
        Host of the server agent.
    members : list
        Client hosts receiving multicast replies.
    programs : list of :class:`incnet.netfilter.config.SwitchProgramConfig`
        Filters indexed by the op_type high nibble.
    """

    def __init__(self, gaid, name, base=0, rows=0, clear_mode='nop',
                 server=None, members=None, programs=None):
        self.gaid = gaid
        self.name = name
        self.clear_mode = clear_mode
        self.server = server
        self.members = list(members) if members is not None else []
        self.programs = list(programs) if programs is not None else []
        self.last_seen = 0
        self.set_reservation(base, rows)

    def set_reservation(self, base, rows):
        self.base = base
        self.rows = rows
        if self.clear_mode == 'shadow' and rows > 1:
            self.half = (rows - 1) // 2
        else:
            self.half = 0

    @property
    def data_rows(self):
        """Usable data rows (the primary half in shadow mode)."""
        if self.rows == 0:
            return 0
        if self.clear_mode == 'shadow':
            return self.half
        return self.rows - 1

    @property
    def first_row(self):
        return self.base + 1

    def owns(self, offsets):
        """Mask of offsets inside the application's data rows."""
        offsets = numpy.asarray(offsets, dtype=numpy.int64)
        top = self.base + self.rows
        if self.clear_mode == 'shadow':
            top = self.first_row + 2*self.half
        return (self.rows > 0) & (offsets >= self.first_row) & (offsets < top)

    def owns_counter(self, index):
        return self.rows > 0 and self.base <= index < self.base + self.rows

    def partner(self, offsets):
        """Shadow partner rows: row + half in the primary half, row - half
        in the secondary half."""
        offsets = numpy.asarray(offsets, dtype=numpy.int64)
        upper = offsets >= self.first_row + self.half
        return numpy.where(upper, offsets - self.half, offsets + self.half)

    def program(self, index):
        if 0 <= index < len(self.programs):
            return self.programs[index]
        return None

    def as_dict(self):
        return {'gaid': self.gaid, 'name': self.name, 'base': self.base,
                'rows': self.rows, 'clear_mode': self.clear_mode,
                'server': self.server, 'members': list(self.members),
                'last_seen': self.last_seen, 'nfilters': len(self.programs)}


class SwitchState(object):
    """State of an emulated INC switch.

    Parameters
    ----------
    options : dict
        Input options. ``cells`` (register cells per segment, default 40960)
        and ``ecn_threshold`` (ingress queue length in packets, default 32).
    verbose : bool
        Print set up information.
    """

    def __init__(self, options=None, verbose=False):
        if options is None:
            options = {}
        self.ncells = get_input_value(options, 'cells', default=NCELLS,
                                      alias=['ncells'], verbose=verbose)
        self.ecn_threshold = get_input_value(options, 'ecn_threshold',
                                             default=32, verbose=verbose)
        self.registers = numpy.zeros((NSLOTS, self.ncells), dtype=numpy.int32)
        self.counters = numpy.zeros(self.ncells, dtype=numpy.int64)
        self.flows = {}
        self.apps = {}
        self.stats = dict((k, 0) for k in ('packets', 'plain', 'bypass',
                                           'duplicates', 'misaddressed',
                                           'saturated', 'dropped',
                                           'turnaround', 'multicast',
                                           'ecn_marked', 'unknown_srrt',
                                           'malformed'))
        self.verbose = verbose

    def add_app(self, entry):
        self.apps[entry.gaid] = entry

    def remove_app(self, gaid):
        entry = self.apps.pop(gaid)
        for srrt in [s for s, f in self.flows.items() if f.gaid == gaid]:
            del self.flows[srrt]
        return entry

    def allocate_flow(self, srrt, gaid, w_max=256):
        if srrt >= PSEUDO_SRRT:
            raise UnknownSrrt('srrt {} is reserved for pseudo flows.'.format(
                srrt))
        self.flows[srrt] = FlowBits(gaid, w_max)
        return self.flows[srrt]

    def release_flow(self, srrt):
        self.flows.pop(srrt, None)

    def flow(self, srrt, gaid):
        bits = self.flows.get(srrt)
        if bits is None or bits.gaid != gaid:
            raise UnknownSrrt('gaid {} has no srrt slot {}.'.format(gaid,
                                                                    srrt))
        return bits

    def snapshot(self):
        """Read-only summary for reports."""
        return {
            'nonzero_cells': int(numpy.count_nonzero(self.registers)),
            'nonzero_counters': int(numpy.count_nonzero(self.counters)),
            'flows': len(self.flows),
            'apps': dict((str(g), e.as_dict()) for g, e in self.apps.items()),
            'stats': dict(self.stats),
        }

    def dump(self, filename, group='switch'):
        snap = self.snapshot()
        apps = snap.pop('apps')
        snap['registers'] = self.registers
        snap['counters'] = self.counters
        for gaid, app in apps.items():
            app['members'] = ','.join(app['members'])
            app['server'] = str(app['server'])
        snap['apps'] = apps
        write_dict_h5(filename, group, snap)
