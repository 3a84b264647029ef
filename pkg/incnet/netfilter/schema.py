"""Minimal declarative service schema format.

Example::

    // Gradient aggregation.
    service Training {
        rpc Update(NewGrad) returns (AgtrGrad);
    }
    message NewGrad {
        FPArray tensor = 1;
    }
    message AgtrGrad {
        FPArray tensor = 1;
    }

Field types are the INC-enabled data types ``FPArray``, ``IntArray``,
``StrIntMap``, ``IntIntMap``, the scalars ``int`` and ``float``, and the
opaque types ``string`` and ``bytes``.  A ``netrpc.`` prefix on a type is
accepted and ignored.
"""

import collections
import re
from incnet.utils.misc import IncnetError
from incnet.netfilter.netfilter import NOP

ARRAY_KINDS = ('FPArray', 'IntArray')
MAP_KINDS = ('StrIntMap', 'IntIntMap')
SCALAR_KINDS = ('int', 'float')
OPAQUE_KINDS = ('string', 'bytes')
_KIND_ALIASES = {
    'fparray': 'FPArray', 'intarray': 'IntArray', 'strintmap': 'StrIntMap',
    'intintmap': 'IntIntMap', 'int': 'int', 'int32': 'int', 'int64': 'int',
    'float': 'float', 'double': 'float', 'string': 'string', 'bytes': 'bytes',
}
_COMMENT = re.compile(r'//[^\n]*')
_BLOCK = re.compile(r'(service|message)\s+(\w+)\s*\{(.*?)\}', re.DOTALL)
_RPC = re.compile(r'rpc\s+(\w+)\s*\(\s*(\w+)\s*\)\s*returns\s*'
                  r'\(\s*(\w+)\s*\)\s*;')
_FIELD = re.compile(r'([\w.]+)\s+(\w+)\s*=\s*(\d+)\s*;')


class SchemaError(IncnetError):
    """Schema text is malformed or inconsistent."""
    pass


class Field(object):

    def __init__(self, name, kind, number):
        self.name = name
        self.kind = kind
        self.number = number

    @property
    def is_iedt(self):
        return self.kind not in OPAQUE_KINDS

    @property
    def is_array(self):
        return self.kind in ARRAY_KINDS

    @property
    def is_map(self):
        return self.kind in MAP_KINDS

    @property
    def is_real(self):
        return self.kind in ('FPArray', 'float')

    def __repr__(self):
        return 'Field({} {} = {})'.format(self.kind, self.name, self.number)


class Message(object):

    def __init__(self, name, fields):
        self.name = name
        self.fields = collections.OrderedDict((f.name, f) for f in fields)

    def iedt_fields(self):
        return [f for f in self.fields.values() if f.is_iedt]

    def opaque_fields(self):
        return [f for f in self.fields.values() if not f.is_iedt]


class Method(object):

    def __init__(self, name, request, reply):
        self.name = name
        self.request = request
        self.reply = reply


class ServiceSchema(object):
    """Service name, methods and the messages they exchange."""

    def __init__(self, name, methods, messages):
        self.name = name
        self.methods = collections.OrderedDict((m.name, m) for m in methods)
        self.messages = messages

    def resolve(self, path):
        """Field for a ``Message.field`` path, None if it does not exist."""
        if path == NOP or '.' not in path:
            return None
        msg, field = path.split('.', 1)
        message = self.messages.get(msg)
        if message is None:
            return None
        return message.fields.get(field)

    def request(self, method):
        return self.messages[self.methods[method].request]

    def reply(self, method):
        return self.messages[self.methods[method].reply]


def _kind(token):
    if token.lower().startswith('netrpc.'):
        token = token[len('netrpc.'):]
    kind = _KIND_ALIASES.get(token.lower())
    if kind is None:
        raise SchemaError('Unknown field type "{}".'.format(token))
    return kind


def _leftover(body, pattern):
    rest = pattern.sub('', body).strip()
    return rest


def parse_schema(text):
    """Parse schema text holding exactly one service and its messages."""
    text = _COMMENT.sub('', text)
    services = []
    messages = {}
    for block, name, body in _BLOCK.findall(text):
        if block == 'service':
            methods = [Method(*m) for m in _RPC.findall(body)]
            if _leftover(body, _RPC):
                raise SchemaError('Cannot parse service {} body.'.format(name))
            services.append((name, methods))
        else:
            if name in messages:
                raise SchemaError('Message {} defined twice.'.format(name))
            fields = [Field(fname, _kind(ftype), int(num))
                      for ftype, fname, num in _FIELD.findall(body)]
            if _leftover(body, _FIELD):
                raise SchemaError('Cannot parse message {} body.'.format(name))
            if len(set(f.name for f in fields)) != len(fields):
                raise SchemaError('Duplicate field in message {}.'.format(name))
            messages[name] = Message(name, fields)
    if _leftover(text, _BLOCK):
        raise SchemaError('Unexpected text outside service/message blocks.')
    if len(services) != 1:
        raise SchemaError('Expected exactly one service, found '
                          '{}.'.format(len(services)))
    name, methods = services[0]
    for m in methods:
        for msg in (m.request, m.reply):
            if msg not in messages:
                raise SchemaError('{}.{} references undefined message '
                                  '{}.'.format(name, m.name, msg))
    return ServiceSchema(name, methods, messages)


def read_schema(filename):
    with open(filename) as f:
        return parse_schema(f.read())
