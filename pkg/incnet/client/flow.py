"""Per-connection sliding window, retransmission timer and AIMD."""

from incnet.utils.io import ConfigError, get_input_value
from incnet.wire.packet import SEQ_SPACE, encode_packet

# Simulated times are integer nanoseconds.
MS = 1000000


def flip_for(seq, w_max):
    """Flip bit of a sequence number: (seq div w_max) mod 2."""
    return (seq // w_max) % 2


def seq_geq(a, b):
    """a is b or a later sequence number, modulo SEQ_SPACE."""
    return (a - b) % SEQ_SPACE < SEQ_SPACE // 2


class Inflight(object):
    """A sent packet waiting for its acknowledgement.

    Parameters
    ----------
    seq : int
        Sequence number.
    packet : :class:`incnet.wire.packet.Packet`
        Packet as sent.
    data : bytes
        Encoded bytes, resent unchanged on timeout.
    sent_at : int
        Time of the first transmission.
    """

    def __init__(self, seq, packet, data, sent_at):
        self.seq = seq
        self.packet = packet
        self.data = data
        self.sent_at = sent_at
        self.retransmitted = False
        self.tries = 1


class FlowState(object):
    """Sender side state of one connection.

    Parameters
    ----------
    srrt : int
        Switch bitmap slot (or pseudo slot) of the connection.
    gaid : int
        Application the connection belongs to.
    options : dict
        ``w_max`` (256), ``initial_cw`` (8), ``rto_floor`` (4 ms in ns) and
        ``congestion_control`` (True).
    verbose : bool
        Print set up information.
    """

    def __init__(self, srrt, gaid=0, options=None, verbose=False):
        if options is None:
            options = {}
        self.srrt = srrt
        self.gaid = gaid
        self.w_max = get_input_value(options, 'w_max', default=256,
                                     verbose=verbose)
        if self.w_max < 1 or SEQ_SPACE % self.w_max:
            # Keeps the flip bit continuous across the sequence wrap.
            raise ConfigError('w_max must be a power of two, got {}.'.format(
                self.w_max))
        self.rto_floor = get_input_value(options, 'rto_floor', default=4*MS,
                                         verbose=verbose)
        self.congestion_control = get_input_value(options,
                                                  'congestion_control',
                                                  default=True,
                                                  alias=['cc'],
                                                  verbose=verbose)
        initial = get_input_value(options, 'initial_cw', default=8,
                                  verbose=verbose)
        if self.congestion_control:
            self.cw = max(1, min(initial, self.w_max))
        else:
            self.cw = self.w_max
        self.next_seq = 0
        self.unacked = {}
        self.srtt = None
        self.rto = self.rto_floor
        # AIMD round: the round ends when a packet sent after its start is
        # acked.
        self.round_end = 0
        self.round_marked = False
        self.retransmissions = 0
        self.ecn_marks = 0

    def can_send(self):
        """Window discipline: room in cw and seq - w_max already acked."""
        if len(self.unacked) >= self.cw:
            return False
        return (self.next_seq - self.w_max) % SEQ_SPACE not in self.unacked

    def send(self, p, now, elide_keys=False):
        """Stamp a packet with the next sequence number and record it.

        Returns
        -------
        inflight : :class:`Inflight`
            Record holding the encoded bytes.
        """
        seq = self.next_seq
        self.next_seq = (seq + 1) % SEQ_SPACE
        p.seq = seq
        p.srrt = self.srrt
        p.flip = flip_for(seq, self.w_max)
        rec = Inflight(seq, p, encode_packet(p, elide_keys), now)
        self.unacked[seq] = rec
        return rec

    def on_ack(self, seq, now, ecn=False):
        """Retire an in-flight sequence number.

        Returns
        -------
        inflight : :class:`Inflight` or None
            The retired record, None for stale or duplicate acks.
        """
        rec = self.unacked.pop(seq, None)
        if rec is None:
            return None
        if not rec.retransmitted:
            # Karn's rule: no samples from retransmitted packets.
            sample = now - rec.sent_at
            if self.srtt is None:
                self.srtt = sample
            else:
                self.srtt = (7*self.srtt + sample) // 8
            self.rto = max(2*self.srtt, self.rto_floor)
        if ecn:
            self.on_ecn()
        elif seq_geq(seq, self.round_end):
            if self.congestion_control and not self.round_marked:
                self.cw = min(self.w_max, self.cw + 1)
            self.round_end = self.next_seq
            self.round_marked = False
        return rec

    def on_ecn(self):
        """Multiplicative decrease, at most once per round."""
        self.ecn_marks += 1
        if not self.congestion_control or self.round_marked:
            return
        self.cw = max(1, self.cw // 2)
        self.round_marked = True
        self.round_end = self.next_seq

    def on_timeout(self, seq):
        """Bytes to resend for an unacked sequence number, None if acked."""
        rec = self.unacked.get(seq)
        if rec is None:
            return None
        rec.retransmitted = True
        rec.tries += 1
        self.retransmissions += 1
        return rec.data
