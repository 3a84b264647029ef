"""NetFilter parsing, normalisation and validation.

A NetFilter is the JSON document binding message fields of a service to the
five reliable INC primitives::

    {
        "AppName": "DT-1",
        "Precision": 8,
        "get": "AgtrGrad.tensor",
        "addTo": "NewGrad.tensor",
        "clear": "copy",
        "modify": "nop",
        "CntFwd": {"to": "ALL", "threshold": 2, "key": "ClientID"}
    }

``//`` comments and trailing commas are tolerated.
"""

import json
import re
from incnet.utils.io import strip_json_comments
from incnet.utils.misc import IncnetError, Violation

NOP = 'nop'
CLEAR_POLICIES = ('copy', 'shadow', 'lazy', 'nop')
MODIFY_OPS = ('NOP', 'MAX', 'MIN', 'ADD', 'ASSIGN', 'SHIFTL', 'SHIFTR',
              'BAND', 'BOR', 'BNOT', 'BXOR')
OPCODES = dict((name, code) for code, name in enumerate(MODIFY_OPS))
TARGETS = ('ALL', 'SRC', 'SERVER')
CLIENT_ID = 'ClientID'
NULL_KEY = 'NULL'
FIELDS = ('AppName', 'Precision', 'get', 'addTo', 'clear', 'modify', 'CntFwd')
CNTFWD_FIELDS = ('to', 'threshold', 'key')
_PATH = re.compile(r'^[A-Za-z_]\w*\.[A-Za-z_]\w*$')


class NetFilterSyntaxError(IncnetError, SyntaxError):
    """Filter text is not a JSON object of the expected shape."""
    pass


class UnknownField(IncnetError):
    """Filter carries a key outside the NetFilter vocabulary."""
    pass


class BadEnum(IncnetError):
    """Enumerated filter value outside its allowed set."""
    pass


class CntFwd(object):
    """Count-then-forward binding."""

    def __init__(self, to='SERVER', threshold=0, key=NULL_KEY):
        self.to = to
        self.threshold = threshold
        self.key = key

    @property
    def enabled(self):
        return self.threshold > 0

    def as_dict(self):
        to = list(self.to) if isinstance(self.to, tuple) else self.to
        return {'to': to, 'threshold': self.threshold, 'key': self.key}

    def __eq__(self, other):
        return isinstance(other, CntFwd) and self.as_dict() == other.as_dict()

    def __repr__(self):
        return 'CntFwd({})'.format(self.as_dict())


class NetFilter(object):
    """Normalised per-service INC configuration.

    Parameters
    ----------
    app_name : string
        Application name, unique per application.
    precision : int
        Decimal digits kept when quantising reals.
    get : string
        Field path bound to Map.get or ``nop``.
    add_to : string
        Field path bound to Map.addTo or ``nop``.
    clear : string
        One of copy, shadow, lazy, nop.
    modify : tuple
        (operator, para) for Stream.modify.
    cntfwd : :class:`CntFwd`
        Count-then-forward binding.
    """

    def __init__(self, app_name, precision=0, get=NOP, add_to=NOP,
                 clear=NOP, modify=('NOP', 0), cntfwd=None):
        self.app_name = app_name
        self.precision = precision
        self.get = get
        self.add_to = add_to
        self.clear = clear
        self.modify = tuple(modify)
        self.cntfwd = cntfwd if cntfwd is not None else CntFwd()

    def bound_paths(self):
        """Field paths referenced by any binding."""
        paths = [p for p in (self.get, self.add_to) if p != NOP]
        if self.cntfwd.key not in (CLIENT_ID, NULL_KEY):
            paths.append(self.cntfwd.key)
        return paths

    def bound_messages(self):
        return set(p.split('.')[0] for p in self.bound_paths())

    def as_dict(self):
        op, para = self.modify
        return {
            'AppName': self.app_name,
            'Precision': self.precision,
            'get': self.get,
            'addTo': self.add_to,
            'clear': self.clear,
            'modify': NOP if op == 'NOP' else {'op': op, 'para': para},
            'CntFwd': self.cntfwd.as_dict(),
        }

    def __eq__(self, other):
        return isinstance(other, NetFilter) and self.as_dict() == other.as_dict()

    def __repr__(self):
        return 'NetFilter({})'.format(self.as_dict())


def _path_or_nop(value, name):
    if not isinstance(value, str):
        raise NetFilterSyntaxError('"{}" must be a string.'.format(name))
    if value.lower() == NOP:
        return NOP
    if not _PATH.match(value):
        raise NetFilterSyntaxError('"{}" must be Message.field, got '
                                   '"{}".'.format(name, value))
    return value


def _uint32(value, name):
    if isinstance(value, bool) or not isinstance(value, int):
        raise NetFilterSyntaxError('"{}" must be an integer.'.format(name))
    if not 0 <= value < 2**32:
        raise NetFilterSyntaxError('"{}" out of 32-bit range.'.format(name))
    return value


def _parse_modify(value):
    if isinstance(value, str):
        if value.lower() != NOP:
            raise BadEnum('"modify" string must be "nop", got '
                          '"{}".'.format(value))
        return ('NOP', 0)
    if not isinstance(value, dict):
        raise NetFilterSyntaxError('"modify" must be "nop" or {"op", "para"}.')
    unknown = set(value) - set(('op', 'para'))
    if unknown:
        raise UnknownField('modify.{}'.format(sorted(unknown)[0]))
    op = str(value.get('op', 'NOP')).upper()
    if op not in OPCODES:
        raise BadEnum('Unknown modify operator "{}".'.format(op))
    para = value.get('para', 0)
    if isinstance(para, bool) or not isinstance(para, int):
        raise NetFilterSyntaxError('"modify.para" must be an integer.')
    if not -2**31 <= para < 2**31:
        raise NetFilterSyntaxError('"modify.para" out of signed 32-bit range.')
    return (op, para)


def _parse_cntfwd(value):
    if not isinstance(value, dict):
        raise NetFilterSyntaxError('"CntFwd" must be an object.')
    unknown = set(value) - set(CNTFWD_FIELDS)
    if unknown:
        raise UnknownField('CntFwd.{}'.format(sorted(unknown)[0]))
    to = value.get('to', 'SERVER')
    if isinstance(to, list):
        if not to or not all(isinstance(t, str) for t in to):
            raise NetFilterSyntaxError('"CntFwd.to" endpoint list must hold '
                                       'host names.')
        to = tuple(to)
    elif isinstance(to, str):
        to = to.upper()
        if to not in TARGETS:
            raise BadEnum('"CntFwd.to" must be one of {} or a list, got '
                          '"{}".'.format(TARGETS, to))
    else:
        raise NetFilterSyntaxError('"CntFwd.to" must be a string or list.')
    threshold = _uint32(value.get('threshold', 0), 'CntFwd.threshold')
    key = value.get('key', NULL_KEY)
    if not isinstance(key, str):
        raise NetFilterSyntaxError('"CntFwd.key" must be a string.')
    if key.upper() == NULL_KEY:
        key = NULL_KEY
    elif key.lower() == CLIENT_ID.lower():
        key = CLIENT_ID
    else:
        key = _path_or_nop(key, 'CntFwd.key')
        if key == NOP:
            key = NULL_KEY
    return CntFwd(to, threshold, key)


def parse_netfilter(text):
    """Parse NetFilter text into a normalised :class:`NetFilter`.

    Parameters
    ----------
    text : string
        JSON object text.

    Returns
    -------
    nf : :class:`NetFilter`
        Normalised filter.
    """
    try:
        raw = json.loads(strip_json_comments(text))
    except ValueError as err:
        raise NetFilterSyntaxError('Invalid JSON: {}'.format(err))
    if not isinstance(raw, dict):
        raise NetFilterSyntaxError('A NetFilter is a JSON object.')
    unknown = set(raw) - set(FIELDS)
    if unknown:
        raise UnknownField(sorted(unknown)[0])
    app_name = raw.get('AppName')
    if not isinstance(app_name, str) or not app_name:
        raise NetFilterSyntaxError('"AppName" is required.')
    precision = _uint32(raw.get('Precision', 0), 'Precision')
    clear = raw.get('clear', NOP)
    if not isinstance(clear, str) or clear.lower() not in CLEAR_POLICIES:
        raise BadEnum('"clear" must be one of {}, got '
                      '"{}".'.format(CLEAR_POLICIES, clear))
    return NetFilter(app_name, precision=precision,
                     get=_path_or_nop(raw.get('get', NOP), 'get'),
                     add_to=_path_or_nop(raw.get('addTo', NOP), 'addTo'),
                     clear=clear.lower(),
                     modify=_parse_modify(raw.get('modify', NOP)),
                     cntfwd=_parse_cntfwd(raw.get('CntFwd', {})))


def read_netfilter(filename):
    with open(filename) as f:
        return parse_netfilter(f.read())


def serialize_netfilter(nf):
    return json.dumps(nf.as_dict(), indent=4)


def validate(nf, schema, n_clients=None):
    """Check a filter against the service schema it binds to.

    Parameters
    ----------
    nf : :class:`NetFilter`
        Filter to check.
    schema : :class:`incnet.netfilter.schema.ServiceSchema`
        Service description.
    n_clients : int, optional
        Number of clients in the deployment, used to check that a ClientID
        threshold can be reached.

    Returns
    -------
    report : list of :class:`incnet.utils.misc.Violation`
        Empty if the filter is valid.
    """
    report = []
    bindings = [('get', nf.get), ('addTo', nf.add_to)]
    if nf.cntfwd.key not in (CLIENT_ID, NULL_KEY):
        bindings.append(('CntFwd.key', nf.cntfwd.key))
    for rip, path in bindings:
        if path == NOP:
            continue
        field = schema.resolve(path)
        if field is None:
            report.append(Violation('UnresolvedPath', path,
                                    '{} binds to a missing field'.format(rip)))
        elif not field.is_iedt:
            report.append(Violation('TypeMismatch', path,
                                    '{} binds to opaque type {}'.format(
                                        rip, field.kind)))
    if nf.cntfwd.key == CLIENT_ID and nf.cntfwd.enabled:
        field = schema.resolve(nf.add_to) if nf.add_to != NOP else None
        if field is not None and not field.is_array:
            report.append(Violation('UnsupportedBinding', nf.add_to,
                                    'ClientID counting needs an array field'))
        if n_clients is not None and nf.cntfwd.threshold > n_clients:
            report.append(Violation('ThresholdUnreachable', 'CntFwd.threshold',
                                    'threshold {} exceeds {} clients'.format(
                                        nf.cntfwd.threshold, n_clients)))
    return report
