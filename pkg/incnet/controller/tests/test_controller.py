import pytest
from incnet.controller.controller import (
        Controller, DuplicateAppName, NoSwitchCapacity, UnknownApp
        )
from incnet.netfilter.netfilter import NetFilter
from incnet.switch.state import SwitchState, PSEUDO_SRRT


def reduce_filter(name):
    return NetFilter(name, add_to='R.kvs')


def make_controller(cells=64, **options):
    switch = SwitchState({'cells': cells})
    return switch, Controller(switch, options)


@pytest.mark.unit
def test_first_fit_reservations():
    switch, ctrl = make_controller()
    g1, res1 = ctrl.register_app([reduce_filter('A')], memory_request=4)
    g2, res2 = ctrl.register_app([reduce_filter('B')], memory_request=4)
    assert (g1, g2) == (1, 2)
    assert res1 == (0, 5)
    assert res2 == (5, 5)
    entry = ctrl.entry(g1)
    assert entry.first_row == 1 and entry.data_rows == 4
    # Too large a request runs without switch memory.
    g3, res3 = ctrl.register_app([reduce_filter('C')], memory_request=100)
    assert res3 == (0, 0)
    assert ctrl.entry(g3).data_rows == 0
    ctrl.deregister(g1)
    assert ctrl.free_rows[0] == (0, 5)
    _, res4 = ctrl.register_app([reduce_filter('D')], memory_request=2)
    assert res4 == (0, 3)


@pytest.mark.unit
def test_shadow_doubles_rows():
    switch, ctrl = make_controller()
    nf = NetFilter('S', get='Rep.t', add_to='Req.t', clear='shadow')
    gaid, (base, rows) = ctrl.register_app([nf], memory_request=4)
    assert rows == 9
    entry = ctrl.entry(gaid)
    assert entry.clear_mode == 'shadow'
    assert entry.half == 4
    assert entry.data_rows == 4
    gaid, (base, rows) = ctrl.register_app([reduce_filter('T')],
                                           memory_request=4,
                                           clear_mode='shadow')
    assert rows == 9 and base == 9


@pytest.mark.unit
def test_names_and_lookup():
    switch, ctrl = make_controller()
    gaid, _ = ctrl.register_app([reduce_filter('A')], memory_request=1)
    assert ctrl.lookup('A') == gaid
    with pytest.raises(DuplicateAppName):
        ctrl.register_app([reduce_filter('A')])
    with pytest.raises(UnknownApp):
        ctrl.lookup('missing')
    with pytest.raises(UnknownApp):
        ctrl.entry(42)


@pytest.mark.unit
def test_register_access_bounds():
    switch, ctrl = make_controller()
    gaid, (base, rows) = ctrl.register_app([reduce_filter('A')],
                                           memory_request=2)
    ctrl.write(gaid, 3, 1, 17)
    assert ctrl.read(gaid, 3, 1) == 17
    assert ctrl.read_and_clear(gaid, 3, 1) == 17
    assert switch.registers[3, 1] == 0
    ctrl.write_counter(gaid, 2, 5)
    assert ctrl.read_counter(gaid, 2) == 5
    with pytest.raises(ValueError):
        ctrl.write(gaid, 0, base + rows, 1)


@pytest.mark.unit
def test_srrt_pool():
    switch, ctrl = make_controller(srrt_pool=2)
    gaid, _ = ctrl.register_app([reduce_filter('A')], memory_request=1)
    assert ctrl.allocate_srrt(gaid, w_max=8) == 0
    assert ctrl.allocate_srrt(gaid, w_max=8) == 1
    assert switch.flows[1].w_max == 8
    with pytest.raises(NoSwitchCapacity):
        ctrl.allocate_srrt(gaid)
    ctrl.release_srrt(gaid, 0)
    assert 0 not in switch.flows
    assert ctrl.allocate_srrt(gaid) == 0
    assert ctrl.allocate_pseudo() >= PSEUDO_SRRT
    assert ctrl.allocate_pseudo() != ctrl.allocate_pseudo()


@pytest.mark.unit
def test_level1_timeout_suspends_and_resumes():
    switch, ctrl = make_controller(level1_timeout=100)
    quiet, _ = ctrl.register_app([reduce_filter('A')], memory_request=2)
    watched, _ = ctrl.register_app([reduce_filter('B')], memory_request=2)
    ctrl.allocate_srrt(quiet)
    calls = []
    ctrl.subscribe(watched, calls.append)
    assert ctrl.poll_timestamps(50) == []
    assert ctrl.poll_timestamps(150) == [quiet, watched]
    assert calls == [watched]
    assert ctrl.entry(quiet).rows == 0
    assert ctrl.apps[quiet].srrts == []
    # One notification per idle period.
    assert ctrl.poll_timestamps(300) == []
    with pytest.raises(NoSwitchCapacity):
        ctrl.allocate_srrt(quiet)
    base, rows = ctrl.resume(quiet, now=300)
    assert rows == 3
    switch.apps[watched].last_seen = 320
    assert ctrl.poll_timestamps(350) == []
    assert ctrl.poll_timestamps(500) == [quiet, watched]


@pytest.mark.unit
def test_registry():
    switch, ctrl = make_controller()
    gaid, _ = ctrl.register_app([reduce_filter('A')], memory_request=2,
                                server='s0', members=['c0', 'c1'])
    reg = ctrl.registry()
    app = reg['apps'][str(gaid)]
    assert app['name'] == 'A'
    assert app['members'] == 'c0,c1'
    assert app['rows'] == 3
    assert reg['free_rows'] == 61
