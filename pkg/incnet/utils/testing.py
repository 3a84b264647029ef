"""Generators shared by the test suites."""

import numpy
from incnet.switch.state import SwitchState, AppEntry
from incnet.wire.packet import Packet, Flag, NSLOTS, elided_keys


def random_packet(rng, elided=False, max_payload=40):
    """Random valid packet drawn from a numpy Generator."""
    counter_index = int(rng.integers(0, 2**32, dtype=numpy.uint64))
    if elided:
        keys = elided_keys(counter_index)
    else:
        keys = rng.integers(0, 2**32, size=NSLOTS, dtype=numpy.uint32)
    values = rng.integers(-2**31, 2**31, size=NSLOTS, dtype=numpy.int32)
    nbytes = int(rng.integers(0, max_payload + 1))
    payload = rng.integers(0, 256, size=nbytes, dtype=numpy.uint8).tobytes()
    return Packet(gaid=int(rng.integers(0, 2**32, dtype=numpy.uint64)),
                  seq=int(rng.integers(0, 2**32, dtype=numpy.uint64)),
                  srrt=int(rng.integers(0, 2**16)),
                  flip=int(rng.integers(0, 2)),
                  flags=Flag(int(rng.integers(0, 128))),
                  op_type=int(rng.integers(0, 256)),
                  bitmap=int(rng.integers(0, 2**32, dtype=numpy.uint64)),
                  counter_index=counter_index,
                  counter_threshold=int(rng.integers(0, 2**32,
                                                     dtype=numpy.uint64)),
                  keys=keys, values=values, payload=payload)


def window_trace(rng, n_packets, w_max, loss=0.2, dup=0.3, ack=0.5):
    """Arrival order of sequence numbers at the switch for one flow.

    Sequence s is first sent only after s - w_max was acked (delivered at
    least once).  In-window packets are lost with probability ``loss`` and
    duplicated with probability ``dup``.

    Returns
    -------
    order : list of int
        Delivered sequence numbers, duplicates included.
    """
    current = dict((i, i) for i in range(min(w_max, n_packets)))
    delivered = set()
    order = []
    while current:
        idx = sorted(current)[int(rng.integers(0, len(current)))]
        seq = current[idx]
        if rng.random() >= loss:
            order.append(seq)
            delivered.add(seq)
            if rng.random() < dup:
                order.append(seq)
        if seq in delivered and rng.random() < ack:
            if seq + w_max < n_packets:
                current[idx] = seq + w_max
            else:
                del current[idx]
    return order


def flip_of(seq, w_max):
    return (seq // w_max) % 2


def make_switch(programs, clear_mode='copy', rows=301, cells=4096,
                members=('c0', 'c1'), server='s0', w_max=16, nflows=2,
                gaid=7, ecn_threshold=32):
    """Switch with one registered application owning rows [1, 1 + rows)
    and srrt slots 0..nflows-1."""
    st = SwitchState({'cells': cells, 'ecn_threshold': ecn_threshold})
    entry = AppEntry(gaid, 'app', base=1, rows=rows, clear_mode=clear_mode,
                     server=server, members=members, programs=programs)
    st.add_app(entry)
    for srrt in range(nflows):
        st.allocate_flow(srrt, gaid, w_max)
    return st, entry
