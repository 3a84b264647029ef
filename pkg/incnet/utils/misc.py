'''Various useful routines maybe not appropriate elsewhere'''

import numpy
import types


class IncnetError(Exception):
    """Base class for all errors raised by incnet."""
    pass


class Violation(object):
    """One entry of a validation report.

    Parameters
    ----------
    kind : string
        Short violation name, e.g. ``UnresolvedPath``.
    path : string
        Offending field path or option.
    message : string
        Human readable explanation.
    """

    def __init__(self, kind, path, message=''):
        self.kind = kind
        self.path = path
        self.message = message

    def __eq__(self, other):
        return (isinstance(other, Violation) and
                (self.kind, self.path) == (other.kind, other.path))

    def __repr__(self):
        return 'Violation({}, {}: {})'.format(self.kind, self.path,
                                              self.message)


def is_class(obj):
    cond = (hasattr(obj, '__class__') and (('__dict__') in dir(obj)
            and not isinstance(obj, types.FunctionType)))
    return cond


def serialise(obj, verbose=0):
    """Convert object attributes into something json can write.

    numpy arrays larger than a handful of entries are summarised by their
    shape unless verbose > 1.
    """
    obj_dict = {}
    if isinstance(obj, dict):
        items = obj.items()
    else:
        items = obj.__dict__.items()

    for k, v in items:
        k = str(k)
        if k.startswith('_'):
            continue
        if isinstance(v, (bool, numpy.bool_)):
            obj_dict[k] = bool(v)
        elif isinstance(v, (int, numpy.integer)):
            obj_dict[k] = int(v)
        elif isinstance(v, (float, numpy.floating)):
            obj_dict[k] = float(v)
        elif isinstance(v, str) or v is None:
            obj_dict[k] = v
        elif isinstance(v, dict):
            obj_dict[k] = serialise(v, verbose)
        elif isinstance(v, (list, tuple)):
            if all(isinstance(x, (int, float, str, bool)) for x in v):
                obj_dict[k] = list(v)
        elif isinstance(v, numpy.ndarray):
            if verbose > 1 or v.size <= 32:
                obj_dict[k] = v.tolist()
            else:
                obj_dict[k] = 'ndarray{}'.format(v.shape)
        elif isinstance(v, types.FunctionType) or hasattr(v, '__self__'):
            if verbose == 1:
                obj_dict[k] = str(v)
        elif is_class(v):
            obj_dict[k] = serialise(v, verbose)
        else:
            pass

    return obj_dict


def print_section_header(string):
    header = """
    ################################################
    #                                              #
    """
    box_len = len("################################################")
    str_len = len(string)
    start = box_len // 2 - str_len // 2 - 1
    init = "    #" + ' '*start
    end = box_len - (box_len//2 + str_len // 2) - 1
    fin = ' '*max(end, 1) + "#"
    footer = """
    #                                              #
    ################################################
    """
    print(header + init + string + fin + footer)


def merge_dicts(a, b, path=None, overwrite=False):
    """Recursively merge dict b into dict a.

    Conflicting leaves raise unless overwrite is set, in which case b wins.
    """
    if path is None: path = []
    for key in b:
        if key in a:
            if isinstance(a[key], dict) and isinstance(b[key], dict):
                merge_dicts(a[key], b[key], path + [str(key)],
                            overwrite=overwrite)
            elif a[key] == b[key]:
                pass # same leaf value
            elif overwrite:
                a[key] = b[key]
            else:
                raise IncnetError('Conflict at %s' % '.'.join(path + [str(key)]))
        else:
            a[key] = b[key]
    return a


def jain_index(x):
    """Jain's fairness index of a sequence of non-negative rates."""
    x = numpy.asarray(x, dtype=numpy.float64)
    if x.size == 0 or not numpy.any(x):
        return 1.0
    return float(x.sum()**2 / (x.size * (x**2).sum()))
