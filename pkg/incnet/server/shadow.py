"""Server side 64-bit backing store of the INC maps."""

import numpy
from incnet.wire.packet import NSLOTS


class ShadowStore(object):
    """Software half of every INC map served by one server agent.

    The true accumulator of a key is its shadow value plus the register of
    its cell, if cached.  Lazily cleared collective cells are read relative
    to a per-cell snapshot.

    Attributes
    ----------
    values : dict
        gaid -> {key name: int}.
    snapshots : dict
        gaid -> (base row, int64 array of shape (32, rows)).
    backups : dict
        gaid -> {chunk tag: list of int}, stored collective results.
    saved : dict
        gaid -> {key name: int}, maps drained at the first level timeout.
    """

    def __init__(self):
        self.values = {}
        self.snapshots = {}
        self.backups = {}
        self.saved = {}

    def add(self, gaid, name, v):
        m = self.values.setdefault(gaid, {})
        m[name] = m.get(name, 0) + int(v)
        return m[name]

    def get(self, gaid, name):
        return self.values.get(gaid, {}).get(name, 0)

    def take(self, gaid, name):
        """Remove and return the shadow value of a key."""
        return self.values.get(gaid, {}).pop(name, 0)

    def items(self, gaid):
        return dict(self.values.get(gaid, {}))

    def drain(self, gaid):
        """Move a whole map to the level-1 save area."""
        saved = self.saved.setdefault(gaid, {})
        for name, v in self.values.pop(gaid, {}).items():
            saved[name] = saved.get(name, 0) + v
        self.snapshots.pop(gaid, None)
        self.backups.pop(gaid, None)
        return saved

    def restore(self, gaid):
        """Bring a saved map back after the application resumed."""
        for name, v in self.saved.pop(gaid, {}).items():
            self.add(gaid, name, v)

    def drop(self, gaid):
        self.values.pop(gaid, None)
        self.snapshots.pop(gaid, None)
        self.backups.pop(gaid, None)
        return self.saved.pop(gaid, {})

    def init_snapshots(self, gaid, base, rows):
        self.snapshots[gaid] = (base, numpy.zeros((NSLOTS, rows),
                                                  dtype=numpy.int64))

    def snapshot(self, gaid, segs, rows):
        base, snap = self.snapshots[gaid]
        return snap[segs, numpy.asarray(rows) - base]

    def set_snapshot(self, gaid, segs, rows, values):
        base, snap = self.snapshots[gaid]
        snap[segs, numpy.asarray(rows) - base] = values

    def backup(self, gaid, tag, values):
        self.backups.setdefault(gaid, {})[tag] = list(values)

    def stored(self, gaid, tag):
        return self.backups.get(gaid, {}).get(tag)
