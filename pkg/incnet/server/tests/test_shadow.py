import pytest
from incnet.server.shadow import ShadowStore


@pytest.mark.unit
def test_accumulate_and_take():
    store = ShadowStore()
    store.add(1, 'a', 2)
    assert store.add(1, 'a', 2**40) == 2**40 + 2
    assert store.get(1, 'missing') == 0
    assert store.take(1, 'a') == 2**40 + 2
    assert store.get(1, 'a') == 0


@pytest.mark.unit
def test_drain_restore():
    store = ShadowStore()
    store.add(1, 'a', 3)
    store.backup(1, 0, [1, 2])
    assert store.drain(1) == {'a': 3}
    assert store.items(1) == {}
    assert store.stored(1, 0) is None
    store.add(1, 'a', 1)
    store.restore(1)
    assert store.get(1, 'a') == 4
    store.drain(1)
    assert store.drop(1) == {'a': 4}
    assert store.saved == {}
