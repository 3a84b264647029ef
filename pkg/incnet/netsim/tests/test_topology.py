import json
import pytest
from incnet.utils.io import data_path
from incnet.netsim.topology import (
        DisconnectedTopology, LinkSpec, Topology, build_topology, dumbbell,
        load_topology, single_switch
        )


@pytest.mark.unit
def test_single_switch():
    top = build_topology({'layout': '2-to-1'})
    assert top.hosts == ['c0', 'c1', 's0']
    assert top.switches == ['sw0']
    assert top.servers == ['s0']
    assert top.inc_switch == 'sw0'
    assert top.path('c0', 's0') == ['c0', 'sw0', 's0']


@pytest.mark.unit
def test_dumbbell():
    top = dumbbell(4, 4)
    assert len(top.hosts) == 8
    assert top.servers == ['r3']
    assert len(top.clients) == 7
    # Every client reaches the server through the INC switch.
    assert top.inc_switch == 'swr'
    for c in top.clients:
        assert 'swr' in top.path(c, 'r3')
    assert top.path('l0', 'r3') == ['l0', 'swl', 'swr', 'r3']
    assert top.hop('swl', 'r0') == 'swr'


@pytest.mark.unit
def test_dumbbell_bottleneck():
    top = build_topology({'layout': 'dumbbell', 'left': 2, 'right': 1,
                          'link': {'rate': 10e9}, 'inc_switch': 'swl',
                          'bottleneck': {'rate': 1e9, 'capacity': 32}})
    assert top.inc_switch == 'swl'
    rates = dict(((l.a, l.b), (l.rate, l.capacity)) for l in top.links)
    assert rates[('swl', 'swr')] == (1e9, 32)
    assert rates[('l0', 'swl')][0] == 10e9


@pytest.mark.unit
def test_disconnected():
    with pytest.raises(DisconnectedTopology):
        build_topology({})
    with pytest.raises(DisconnectedTopology):
        Topology(['a', 'b'], ['s'], [LinkSpec('a', 's')])
    with pytest.raises(DisconnectedTopology):
        Topology(['a'], ['s'], [LinkSpec('a', 'x')])
    with pytest.raises(DisconnectedTopology):
        build_topology({'layout': 'star'})


@pytest.mark.unit
def test_load_topology(tmp_path):
    spec = {'hosts': ['a', 'b', 'c'], 'switches': ['t', 'u'],
            'servers': ['c'], 'link': {'delay': 500},
            'links': [{'a': 'a', 'b': 't'}, {'a': 'b', 'b': 't'},
                      {'a': 't', 'b': 'u', 'rate': 10e9},
                      {'a': 'c', 'b': 'u', 'capacity': 4}]}
    filename = str(tmp_path / 'top.json')
    with open(filename, 'w') as f:
        f.write('// comment\n' + json.dumps(spec))
    top = load_topology(filename)
    assert top.clients == ['a', 'b']
    assert top.inc_switch == 'u'
    assert [l.delay for l in top.links] == [500]*4
    assert top.links[2].rate == 10e9
    assert top.links[3].capacity == 4
    assert top.path('a', 'c') == ['a', 't', 'u', 'c']
    assert single_switch(1).as_dict()['inc_switch'] == 'sw0'


@pytest.mark.unit
def test_shipped_topologies():
    star = load_topology(data_path('star.json'))
    assert star.clients == ['w0', 'w1']
    assert star.inc_switch == 'tor'
    assert star.links[0].rate == 100e9
    bell = load_topology(data_path('dumbbell.json'))
    assert bell.servers == ['r3']
    assert bell.links[-1].capacity == 64
