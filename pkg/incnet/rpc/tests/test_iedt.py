import numpy
import pytest
from incnet.netfilter.schema import parse_schema
from incnet.rpc.iedt import MarshalError, marshal, unmarshal

SCHEMA = """
service Mixed {
    rpc Push(PushRequest) returns (PushReply);
}
message PushRequest {
    FPArray grad = 1;
    IntIntMap counts = 2;
    StrIntMap words = 3;
    string note = 4;
}
message PushReply {
    IntArray ids = 1;
    bytes blob = 2;
}
"""


@pytest.fixture
def schema():
    return parse_schema(SCHEMA)


@pytest.mark.unit
def test_marshal_normalises(schema):
    msg = marshal(schema.request('Push'),
                  {'grad': [1, 2.5], 'counts': {'3': 4}, 'words': {7: 1},
                   'note': 'hi'})
    assert msg['grad'].dtype == numpy.float64
    assert msg['grad'].tolist() == [1.0, 2.5]
    assert msg['counts'] == {3: 4}
    assert msg['words'] == {'7': 1}
    assert msg['note'] == 'hi'


@pytest.mark.unit
def test_marshal_rejects(schema):
    request = schema.request('Push')
    with pytest.raises(MarshalError):
        marshal(request, {'missing': 1})
    with pytest.raises(MarshalError):
        marshal(request, {'grad': [[1.0]]})
    with pytest.raises(MarshalError):
        marshal(request, {'grad': ['a']})
    with pytest.raises(MarshalError):
        marshal(request, {'counts': {'x': 1}})
    with pytest.raises(MarshalError):
        marshal(request, {'counts': {1: 1, '1': 2}})
    with pytest.raises(MarshalError):
        marshal(request, {'words': [1, 2]})


@pytest.mark.unit
def test_unmarshal(schema):
    msg = unmarshal(schema.reply('Push'), {'ids': [1, 2], 'blob': 'ab',
                                           'extra': 3})
    assert msg['ids'].dtype == numpy.int64
    assert msg['blob'] == b'ab'
    assert 'extra' not in msg
