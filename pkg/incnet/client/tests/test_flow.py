import pytest
from incnet.client.flow import FlowState, flip_for, seq_geq, MS
from incnet.utils.io import ConfigError
from incnet.wire.packet import Packet, SEQ_SPACE


@pytest.mark.unit
def test_flip_for():
    assert flip_for(0, 256) == 0
    assert flip_for(255, 256) == 0
    assert flip_for(256, 256) == 1
    assert flip_for(512, 256) == 0


@pytest.mark.unit
def test_send_stamps_packet():
    flow = FlowState(3, gaid=1, options={'w_max': 4})
    p = Packet(1)
    rec = flow.send(p, now=10)
    assert (p.seq, p.srrt, p.flip) == (0, 3, 0)
    assert rec.sent_at == 10
    for _ in range(4):
        flow.send(Packet(1), now=10)
    assert flow.unacked[4].packet.flip == 1


@pytest.mark.unit
def test_window_discipline():
    flow = FlowState(0, options={'w_max': 4, 'congestion_control': False})
    assert flow.cw == 4
    for _ in range(4):
        assert flow.can_send()
        flow.send(Packet(1), now=0)
    assert not flow.can_send()
    for seq in (1, 2, 3):
        flow.on_ack(seq, now=5)
    # seq 4 needs seq 0 acknowledged first.
    assert not flow.can_send()
    flow.on_ack(0, now=6)
    assert flow.can_send()


@pytest.mark.unit
def test_rtt_and_additive_increase():
    flow = FlowState(0, options={'w_max': 64, 'initial_cw': 2})
    assert flow.cw == 2
    flow.send(Packet(1), now=0)
    flow.send(Packet(1), now=0)
    assert not flow.can_send()
    flow.on_ack(0, now=100)
    assert flow.srtt == 100
    assert flow.rto == 4*MS
    assert flow.cw == 3
    # Same round: no further increase.
    flow.on_ack(1, now=120)
    assert flow.cw == 3


@pytest.mark.unit
def test_multiplicative_decrease_once_per_round():
    flow = FlowState(0, options={'initial_cw': 8})
    flow.send(Packet(1), now=0)
    flow.on_ecn()
    assert flow.cw == 4
    flow.on_ecn()
    assert flow.cw == 4
    assert flow.ecn_marks == 2
    off = FlowState(0, options={'congestion_control': False, 'w_max': 16})
    off.on_ecn()
    assert off.cw == 16


@pytest.mark.unit
def test_karn_rule():
    flow = FlowState(0)
    flow.send(Packet(1), now=0)
    data = flow.on_timeout(0)
    assert data == flow.unacked[0].data
    assert flow.retransmissions == 1
    rec = flow.on_ack(0, now=50)
    assert rec.tries == 2
    assert flow.srtt is None
    assert flow.on_timeout(0) is None
    assert flow.on_ack(0, now=60) is None


@pytest.mark.unit
def test_sequence_wraps():
    flow = FlowState(0, options={'w_max': 4, 'congestion_control': False})
    flow.next_seq = SEQ_SPACE - 2
    seqs = [flow.send(Packet(1), now=0).seq for _ in range(4)]
    assert seqs == [SEQ_SPACE - 2, SEQ_SPACE - 1, 0, 1]
    assert [flow.unacked[s].packet.flip for s in seqs] == [1, 1, 0, 0]
    assert not flow.can_send()
    for s in seqs[1:]:
        flow.on_ack(s, now=1)
    # seq 2 needs SEQ_SPACE - 2 acknowledged first.
    assert not flow.can_send()
    flow.on_ack(SEQ_SPACE - 2, now=1)
    assert flow.can_send()
    assert seq_geq(0, SEQ_SPACE - 1)
    assert not seq_geq(SEQ_SPACE - 1, 0)


@pytest.mark.unit
def test_window_must_divide_sequence_space():
    with pytest.raises(ConfigError):
        FlowState(0, options={'w_max': 3})
