"""INC-enabled data types and opaque field marshaling.

Request and reply messages are plain dicts mapping field names to values.
IEDT fields hold arrays (``FPArray``, ``IntArray``), maps (``StrIntMap``,
``IntIntMap``) or scalars; every other field is opaque and travels the plain
channel as JSON.
"""

import numpy
from incnet.utils.misc import IncnetError


class MarshalError(IncnetError):
    """A message value does not fit its declared field type."""
    pass


def _array(name, kind, value):
    a = numpy.asarray(value)
    if a.ndim != 1:
        raise MarshalError('{} {} must be one dimensional.'.format(kind, name))
    if kind == 'FPArray':
        if a.size and a.dtype.kind not in 'iuf':
            raise MarshalError('{} must hold reals.'.format(name))
        return a.astype(numpy.float64)
    if a.size and a.dtype.kind not in 'iu':
        raise MarshalError('{} must hold integers.'.format(name))
    return a.astype(numpy.int64)


def _map(name, kind, value):
    if not isinstance(value, dict):
        raise MarshalError('{} {} must be a dict.'.format(kind, name))
    out = {}
    for k, v in value.items():
        if kind == 'StrIntMap':
            k = str(k)
        else:
            try:
                k = int(k)
            except (TypeError, ValueError):
                raise MarshalError('{} key {!r} is not an integer.'.format(
                    name, k))
        if k in out:
            raise MarshalError('{} key {!r} repeated.'.format(name, k))
        if isinstance(v, (float, numpy.floating)):
            out[k] = float(v)
        else:
            out[k] = int(v)
    return out


def marshal(message, values):
    """Validate and normalise a message.

    Parameters
    ----------
    message : :class:`incnet.netfilter.schema.Message`
        Declared message.
    values : dict
        Field name -> value.

    Returns
    -------
    msg : dict
        Arrays as numpy arrays, maps as dicts with typed keys, opaque values
        unchanged.
    """
    msg = {}
    for name, value in values.items():
        field = message.fields.get(name)
        if field is None:
            raise MarshalError('{} has no field {}.'.format(message.name,
                                                            name))
        if field.is_array:
            msg[name] = _array(name, field.kind, value)
        elif field.is_map:
            msg[name] = _map(name, field.kind, value)
        elif field.kind == 'int':
            msg[name] = int(value)
        elif field.kind == 'float':
            msg[name] = float(value)
        else:
            msg[name] = value
    return msg


def unmarshal(message, values):
    """Typed reply fields from assembled (partly JSON decoded) values."""
    msg = {}
    for name, value in values.items():
        field = message.fields.get(name)
        if field is None:
            continue
        if field.is_array:
            msg[name] = _array(name, field.kind, value)
        elif field.is_map:
            msg[name] = _map(name, field.kind, value)
        elif field.kind == 'bytes' and isinstance(value, str):
            msg[name] = value.encode('latin-1')
        else:
            msg[name] = value
    return msg
