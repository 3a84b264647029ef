import pytest
from incnet.server.address_map import AddressMap, UnknownPolicy
from incnet.wire.packet import NSLOTS


@pytest.mark.unit
def test_first_come_allocation():
    amap = AddressMap(1, first_row=1, rows=10, options={'cache_policy':
                                                        'fcfs'})
    assert amap.capacity == 10*NSLOTS
    a = amap.allocate_mapping(5, 'a')
    assert (a.seg, a.row, a.version) == (0, 1, 1)
    # A colliding name stays on the server.
    assert amap.allocate_mapping(5, 'b') is None
    b = amap.allocate_mapping(6, 'b')
    assert (b.seg, b.row) == (1, 1)
    assert amap.at_cell(1, 1) is b
    assert amap.allocate_mapping(6, 'b') is b
    assert amap.cells_used() == 2


@pytest.mark.unit
def test_evict_and_reinstall():
    amap = AddressMap(1, first_row=1, rows=2)
    amap.allocate_mapping(5, 'a')
    m = amap.evict(5)
    assert m.name == 'a'
    assert amap.lookup(5) is None
    assert amap.evictions == 1
    again = amap.allocate_mapping(5, 'a')
    assert (again.seg, again.row) == (0, 1)
    assert again.version > m.version


@pytest.mark.unit
def test_hash_policy():
    amap = AddressMap(1, first_row=1, rows=10, options={'cache_policy':
                                                        'hash'})
    m = amap.allocate_mapping(325, 'x')
    assert (m.seg, m.row) == (5, 1)
    assert amap.allocate_mapping(645, 'y') is None


@pytest.mark.unit
def test_power_of_n():
    amap = AddressMap(1, first_row=1, rows=4, options={'cache_policy': 'pon',
                                                       'pon_threshold': 5})
    assert amap.allocate_mapping(7, 'k') is None
    assert amap.allocate_mapping(8, 'j') is None
    plan = amap.cache_sweep([(7, 10), (8, 2)])
    assert plan == {'evict': [], 'install': [7]}
    m = amap.install(7)
    assert m.name == 'k' and m.seg == 0


@pytest.mark.unit
def test_periodic_lru():
    amap = AddressMap(1, first_row=1, rows=1, options={'cache_cells': 2})
    assert amap.capacity == 2
    amap.allocate_mapping(1, 'a')
    amap.allocate_mapping(2, 'b')
    assert amap.allocate_mapping(3, 'c') is None
    plan = amap.cache_sweep([(1, 1), (2, 5), (3, 9)])
    assert plan == {'evict': [1], 'install': [3]}
    # A quiet window plans nothing.
    assert amap.cache_sweep() == {'evict': [], 'install': []}


@pytest.mark.unit
def test_counters_and_rings():
    amap = AddressMap(1, first_row=1, rows=300, n_rings=1)
    assert amap.rings == (1, 1, 0)
    assert amap.map_row == 257
    m = amap.allocate_mapping(9, 'lock0', counter=True)
    assert m.counter == 257 and m.seg == -1
    small = AddressMap(1, first_row=1, rows=10, n_rings=1)
    assert small.rings is None
    with pytest.raises(UnknownPolicy):
        AddressMap(1, first_row=1, rows=10, options={'cache_policy': 'mru'})
