"""Turn bound message fields into INC packets.

Arrays of collective methods (CntFwd key ``ClientID``) travel as elided-key
chunks over rings of 256 register cells.  Ring ``r`` with base row ``R``
places slot ``i`` of its chunk slot ``s`` on cell ``(i, R + r + 32 s + i)``,
so up to 32 rings tile a band of ``255 + n_rings`` rows.  Maps travel as
key/value slots addressed by physical rows once the server has handed out
a mapping, and as crossing packets to the server until then.
"""

import hashlib
import numpy
from incnet.client.quantize import Quantizer
from incnet.netfilter.netfilter import NOP, CLIENT_ID, NULL_KEY, OPCODES
from incnet.utils.misc import IncnetError
from incnet.wire.packet import (
        Packet, Flag, NSLOTS, MAX_INT, MIN_INT, elided_keys
        )
from incnet.wire.payload import DATA, encode_payload

DEFAULT_SEED = 0x4E52
RING_CHUNKS = 8
RING_CELLS = RING_CHUNKS * NSLOTS
MAX_RINGS = 32


class UnboundField(IncnetError):
    """A filter binding names a field the message does not carry."""
    pass


def hash_key(key, seed=DEFAULT_SEED):
    """32-bit logical address of a map key.

    blake2b with a 4 byte digest keyed by the seed; 0xFFFFFFFF is reserved
    for the ECN cell and remapped to 0xFFFFFFFE.
    """
    h = hashlib.blake2b(str(key).encode('utf-8'), digest_size=4,
                        key=int(seed).to_bytes(4, 'big'))
    laddr = int.from_bytes(h.digest(), 'big')
    if laddr == 0xFFFFFFFF:
        laddr = 0xFFFFFFFE
    return laddr


def ring_rows(n_rings):
    """Rows spanned by n_rings interleaved rings."""
    if n_rings == 0:
        return 0
    return RING_CELLS - 1 + n_rings


class ClientMap(object):
    """Client side view of an application's INC memory.

    Parameters
    ----------
    gaid : int
        Application id.
    rings : tuple
        (base row, number of rings, shadow half) of the collective area;
        ``None`` when collectives run in software.
    seed : int
        Key hash seed.

    Attributes
    ----------
    entries : dict
        laddr -> mapping dict with keys name, seg, row, counter, version.
    counts : dict
        Uses of each laddr in the current cache window.
    no_inc : bool
        The application has no switch flows; mappings are ignored and every
        packet crosses to the server.
    """

    def __init__(self, gaid, rings=None, seed=DEFAULT_SEED):
        self.gaid = gaid
        self.seed = seed
        self.entries = {}
        self.revoked = {}
        self.counts = {}
        self.no_inc = False
        if rings is None:
            self.ring_base, self.n_rings, self.half = 0, 0, 0
        else:
            self.ring_base, self.n_rings, self.half = rings

    def install(self, mappings):
        """Learn piggybacked mappings [laddr, name, seg, row, counter,
        version]; mappings older than a revocation are ignored."""
        if self.no_inc:
            return
        for laddr, name, seg, row, counter, version in mappings:
            if version <= self.revoked.get(laddr, -1):
                continue
            cur = self.entries.get(laddr)
            if cur is not None and cur['version'] > version:
                continue
            self.entries[laddr] = {'name': name, 'seg': seg, 'row': row,
                                   'counter': counter, 'version': version}

    def revoke(self, laddr, version):
        self.revoked[laddr] = max(version, self.revoked.get(laddr, -1))
        cur = self.entries.get(laddr)
        if cur is not None and cur['version'] <= version:
            del self.entries[laddr]

    def lookup(self, name):
        """(laddr, mapping or None) of a key name."""
        laddr = hash_key(name, self.seed)
        self.counts[laddr] = self.counts.get(laddr, 0) + 1
        return laddr, self.entries.get(laddr)

    def drain_counts(self):
        counts, self.counts = self.counts, {}
        return counts

    @property
    def collective_in_switch(self):
        return self.n_rings > 0

    def chunk_counter(self, g):
        """Counter index (= first elided key) of global chunk g."""
        r = g % self.n_rings
        s = (g // self.n_rings) % RING_CHUNKS
        base = self.ring_base + r + NSLOTS*s
        if self.half and (g // (RING_CHUNKS*self.n_rings)) % 2:
            base += self.half
        return base

    def release_distance(self):
        """Chunk g may start once chunk g - release_distance() completed."""
        return RING_CHUNKS * max(self.n_rings, 1)


def _op_type(index, nf):
    return (index << 4) | OPCODES[nf.modify[0]]


def _bits(n):
    return (1 << n) - 1


def _cntfwd(nf):
    threshold = nf.cntfwd.threshold if nf.cntfwd.enabled else 0
    return Flag.IS_CNF if threshold else Flag.NONE, threshold


def build_collective(values, nf, amap, real=True, filter_index=0,
                     first_chunk=0, forced=None):
    """Packets of one array pushed to a ClientID collective.

    Parameters
    ----------
    values : array_like
        Flattened array.
    nf : :class:`incnet.netfilter.netfilter.NetFilter`
        Method filter.
    amap : :class:`ClientMap`
        Ring layout.
    real : bool
        Elements are reals scaled by 10**Precision.
    filter_index : int
        Index of the filter inside the application.
    first_chunk : int
        Global index of the first chunk.
    forced : array_like, optional
        Boolean mask of elements forced onto the overflow path.

    Returns
    -------
    packets : list of :class:`incnet.wire.packet.Packet`
        One packet per 32 elements, meta holds ``tag`` and ``exact``.
    """
    q = Quantizer(nf.precision if real else 0)
    values = numpy.ravel(numpy.asarray(values))
    fixed, overflow = q.quantize_array(values)
    if forced is not None:
        overflow = overflow | numpy.asarray(forced, dtype=bool)
    exact = [q.exact(x) for x in values]
    flags, threshold = _cntfwd(nf)
    packets = []
    for j in range(0, len(values), NSLOTS):
        g = first_chunk + j // NSLOTS
        chunk = fixed[j:j+NSLOTS].copy()
        n = len(chunk)
        of = overflow[j:j+NSLOTS]
        # Overflowing elements poison their cells so the chunk result comes
        # back saturated and the exact path takes over.
        chunk[of] = numpy.where(numpy.asarray(exact[j:j+n])[of] < 0,
                                MIN_INT, MAX_INT)
        slot_values = numpy.zeros(NSLOTS, dtype=numpy.int64)
        slot_values[:n] = chunk
        payload = {'kind': DATA, 'tag': g}
        if amap.collective_in_switch:
            counter = amap.chunk_counter(g)
            p = Packet(amap.gaid, flags=flags,
                       op_type=_op_type(filter_index, nf), bitmap=_bits(n),
                       counter_index=counter, counter_threshold=threshold,
                       keys=elided_keys(counter), values=slot_values)
            p.elided = True
        else:
            payload['exact'] = exact[j:j+n]
            p = Packet(amap.gaid, flags=Flag.IS_CROSS | flags,
                       op_type=_op_type(filter_index, nf), bitmap=_bits(n),
                       counter_threshold=threshold, values=slot_values)
        p.payload = encode_payload(payload)
        p.meta = {'tag': g, 'exact': exact[j:j+n], 'n': n}
        packets.append(p)
    return packets


def build_map_stream(entries, nf, amap, real=False, filter_index=0,
                     add=True):
    """Packets of one map field.

    Cached keys are packed one per register segment into key/value packets.
    Uncached keys go to the server in crossing packets whose payload names
    the key of every slot.  Keys colliding with a cached mapping of another
    name or with an earlier uncached key of this stream, and values that
    overflow 32 bits, ride in the payload of a crossing packet.

    Parameters
    ----------
    entries : list of (key, value)
        Map items; values are ignored (sent as 0) when add is False.
    nf : :class:`incnet.netfilter.netfilter.NetFilter`
        Method filter.
    amap : :class:`ClientMap`
        Mapping cache.
    real : bool
        Values are reals scaled by 10**Precision.
    filter_index : int
        Index of the filter inside the application.
    add : bool
        Values contribute to Map.addTo.

    Returns
    -------
    packets : list of :class:`incnet.wire.packet.Packet`
        meta holds ``names`` (slot -> key) and ``cells`` (laddrs used).
    """
    q = Quantizer(nf.precision if real else 0)
    op_type = _op_type(filter_index, nf)
    buckets = [[] for _ in range(NSLOTS)]
    cross = []
    extra = []
    owners = {}
    for name, value in entries:
        v = q.exact(value) if add else 0
        laddr, m = amap.lookup(name)
        if v > MAX_INT or v < MIN_INT:
            extra.append((name, v, True))
        elif m is not None and m['seg'] >= 0:
            if m['name'] == name:
                buckets[m['seg']].append((name, laddr, m['row'], v))
            else:
                extra.append((name, v, False))
        elif owners.setdefault(laddr, name) != name:
            extra.append((name, v, False))
        else:
            cross.append((name, laddr, v))
    packets = []
    while any(buckets):
        keys = numpy.zeros(NSLOTS, dtype=numpy.uint32)
        values = numpy.zeros(NSLOTS, dtype=numpy.int64)
        names = [None] * NSLOTS
        cells = []
        bitmap = 0
        for seg in range(NSLOTS):
            if buckets[seg]:
                name, laddr, row, v = buckets[seg].pop(0)
                keys[seg] = row
                values[seg] = v
                names[seg] = name
                cells.append(laddr)
                bitmap |= 1 << seg
        p = Packet(amap.gaid, op_type=op_type, bitmap=bitmap, keys=keys,
                   values=values)
        p.payload = encode_payload({'kind': DATA, 'bm': bitmap})
        p.meta = {'names': names, 'cells': cells}
        packets.append(p)
    chunks = [cross[i:i+NSLOTS] for i in range(0, len(cross), NSLOTS)]
    extras = [extra[i:i+NSLOTS] for i in range(0, len(extra), NSLOTS)]
    for k in range(max(len(chunks), len(extras))):
        part = chunks[k] if k < len(chunks) else []
        more = extras[k] if k < len(extras) else []
        keys = numpy.zeros(NSLOTS, dtype=numpy.uint32)
        values = numpy.zeros(NSLOTS, dtype=numpy.int64)
        for i, (name, laddr, v) in enumerate(part):
            keys[i] = laddr
            values[i] = v
        flags = Flag.IS_CROSS
        if any(of for _, _, of in more):
            flags |= Flag.IS_OF
        payload = {'kind': DATA, 'names': [name for name, _, _ in part]}
        if more:
            payload['extra'] = [[name, v] for name, v, _ in more]
        p = Packet(amap.gaid, flags=flags, op_type=op_type,
                   bitmap=_bits(len(part)), keys=keys, values=values)
        p.payload = encode_payload(payload)
        p.meta = {'names': [name for name, _, _ in part] +
                           [None] * (NSLOTS - len(part)),
                  'cells': [laddr for _, laddr, _ in part],
                  'extra': [name for name, _, _ in more]}
        packets.append(p)
    return packets


def build_counter_stream(keys, nf, amap, filter_index=0):
    """One packet per key of a CntFwd key field (test&set and release)."""
    flags, threshold = _cntfwd(nf)
    packets = []
    for name in keys:
        laddr, m = amap.lookup(name)
        if m is not None and m['counter'] >= 0 and m['name'] == name:
            p = Packet(amap.gaid, flags=flags,
                       op_type=_op_type(filter_index, nf),
                       counter_index=m['counter'],
                       counter_threshold=threshold)
        else:
            p = Packet(amap.gaid, flags=flags | Flag.IS_CROSS,
                       op_type=_op_type(filter_index, nf),
                       counter_threshold=threshold)
        p.payload = encode_payload({'kind': DATA, 'names': [name]})
        p.meta = {'names': [name], 'cells': [laddr], 'lock': name}
        packets.append(p)
    return packets


def build_stream(msg, nf, amap, schema=None, filter_index=0, first_chunk=0,
                 request=None):
    """Packets carrying the fields of msg bound by nf.

    A get binding on a reply field travels with the request when the
    request carries a field of the same name (aligned fields); the keys are
    then looked up in the switch or by the server.

    Parameters
    ----------
    msg : dict
        Marshaled request, field name -> value.
    nf : :class:`incnet.netfilter.netfilter.NetFilter`
        Method filter.
    amap : :class:`ClientMap`
        Mapping cache of the application.
    schema : :class:`incnet.netfilter.schema.ServiceSchema`, optional
        Used to learn field types; without it float arrays are reals.
    filter_index : int
        Index of the filter inside the application.
    first_chunk : int
        Global index of the first collective chunk.
    request : string
        Request message name. Bindings on other messages are skipped.

    Returns
    -------
    packets : list of :class:`incnet.wire.packet.Packet`
    """
    def field_of(path, aligned=False):
        if path in (NOP, CLIENT_ID, NULL_KEY):
            return None
        message, name = path.split('.', 1)
        if aligned:
            if name not in msg:
                return None
        else:
            if request is not None and message != request:
                return None
            if name not in msg:
                raise UnboundField('{} is not part of the '
                                   'message.'.format(path))
        kind = None
        if schema is not None:
            field = schema.resolve(path)
            kind = field.kind if field is not None else None
        return name, kind

    packets = []
    add = field_of(nf.add_to)
    key = field_of(nf.cntfwd.key)
    if add is not None:
        name, kind = add
        value = msg[name]
        if nf.cntfwd.key == CLIENT_ID:
            array = numpy.asarray(value)
            if kind is None:
                real = array.dtype.kind == 'f'
            else:
                real = kind in ('FPArray', 'float')
            packets += build_collective(array, nf, amap, real=real,
                                        filter_index=filter_index,
                                        first_chunk=first_chunk)
        else:
            real = kind in ('FPArray', 'float')
            packets += build_map_stream(_items(value), nf, amap, real=real,
                                        filter_index=filter_index)
    elif nf.get != NOP:
        get = field_of(nf.get, aligned=True)
        if get is not None:
            packets += build_map_stream(_items(msg[get[0]]), nf, amap,
                                        add=False, filter_index=filter_index)
    if key is not None:
        names = [k for k, _ in _items(msg[key[0]])]
        packets += build_counter_stream(names, nf, amap,
                                        filter_index=filter_index)
    return packets


def _items(value):
    """Map items of an IEDT value; arrays are integer keyed maps."""
    if isinstance(value, dict):
        return list(value.items())
    return list(enumerate(numpy.ravel(numpy.asarray(value)).tolist()))
