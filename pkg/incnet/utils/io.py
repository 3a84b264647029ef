import h5py
import json
import os
import numpy
import re
from incnet.utils.misc import serialise, IncnetError


class ConfigError(IncnetError):
    """Input options are malformed or unusable."""
    pass


def get_input_value(inputs, key, default=0, alias=None, verbose=False):
    """Helper routine to parse input options.
    """
    val = inputs.get(key, None)
    if val is not None and verbose:
        print("# Setting {} to {}.".format(key, val))
    if val is None:
        if alias is not None:
            for a in alias:
                val = inputs.get(a, None)
                if val is not None:
                    if verbose:
                        print("# Setting {} to {}.".format(key, val))
                    break
        if val is None:
            val = default
            if verbose:
                print("# Note: {} not specified. Setting to default value"
                      " of {}.".format(key, default))
    return val


_LINE_COMMENT = re.compile(r'//[^\n]*')
_TRAILING_COMMA = re.compile(r',(\s*[}\]])')


def strip_json_comments(text):
    """Remove // comments and trailing commas from hand written JSON."""
    out = []
    for line in text.splitlines():
        # Only strip comments outside of string literals.
        in_str = False
        cut = len(line)
        i = 0
        while i < len(line):
            c = line[i]
            if c == '"' and (i == 0 or line[i-1] != '\\'):
                in_str = not in_str
            elif not in_str and line.startswith('//', i):
                cut = i
                break
            i += 1
        out.append(line[:cut])
    return _TRAILING_COMMA.sub(r'\1', '\n'.join(out))


def read_input(input_file, comm, verbose=False):
    """Helper function to parse input file and share it across ranks.

    Parameters
    ----------
    input_file : string
        Input filename.
    comm : MPI communicator
        Communicator object (FakeComm without mpi4py).
    verbose : bool
        If true print out set up information.

    Returns
    -------
    options : dict
        Python dict of input options.
    """
    options = None
    if comm.rank == 0:
        if verbose:
            print('# Initialising incnet run from %s'%input_file)
        try:
            with open(input_file) as inp:
                options = json.loads(strip_json_comments(inp.read()))
        except (OSError, ValueError) as err:
            raise ConfigError('Could not read {}: {}'.format(input_file, err))
        if not isinstance(options, dict):
            raise ConfigError('{} must hold a JSON object.'.format(input_file))
    options = comm.bcast(options, root=0)
    return options


def to_json(obj, verbose=0):
    return json.dumps(serialise(obj, verbose=verbose), sort_keys=True,
                      indent=4)


def write_dict_h5(filename, group, data, mode='a'):
    """Write a (possibly nested) dict of arrays / scalars to an HDF5 group."""
    with h5py.File(filename, mode) as fh5:
        _write_group(fh5.require_group(group), data)


def _write_group(grp, data):
    for k, v in data.items():
        k = str(k)
        if isinstance(v, dict):
            _write_group(grp.require_group(k), v)
            continue
        if k in grp:
            del grp[k]
        if isinstance(v, str):
            grp[k] = v
        else:
            grp[k] = numpy.asarray(v)


def read_dict_h5(filename, group):
    with h5py.File(filename, 'r') as fh5:
        return _read_group(fh5[group])


def _read_group(grp):
    out = {}
    for k, v in grp.items():
        if isinstance(v, h5py.Group):
            out[k] = _read_group(v)
        else:
            val = v[()]
            if isinstance(val, bytes):
                val = val.decode('utf-8')
            out[k] = val
    return out


def data_path(name):
    """Path of a file shipped in incnet/data."""
    return os.path.join(os.path.dirname(os.path.dirname(
        os.path.abspath(__file__))), 'data', name)
