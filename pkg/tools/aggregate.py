#!/usr/bin/env python
'''Average incnet report columns over seeds.

Rows are grouped by scenario and policy.  Every numeric column gets a mean and
a standard error column (``<name>_error``).  By default the result is printed,
use -o to write it as CSV.
'''
import argparse
import sys
import pandas as pd
import scipy.stats
from incnet.harness.report import read_report


def parse_args(args):
    """Parse command-line arguments.

    Parameters
    ----------
    args : list of strings
        command-line arguments.

    Returns
    -------
    options : :class:`argparse.Namespace`
        Command line arguments.
    """

    parser = argparse.ArgumentParser(description = __doc__)
    parser.add_argument('-c', '--columns', nargs='+', dest='columns',
                        default=None, help='Columns to aggregate. '
                        'Default: all numeric columns.')
    parser.add_argument('-o', '--out', dest='out', default=None,
                        help='Output CSV.')
    parser.add_argument('-f', nargs='+', dest='filenames',
                        help='Space-separated list of reports to aggregate.')

    options = parser.parse_args(args)

    if not options.filenames:
        parser.print_help()
        sys.exit(1)

    return options


def aggregate(frame, columns=None):
    """Mean and standard error of report columns per scenario and policy.

    Parameters
    ----------
    frame : :class:`pandas.DataFrame`
        Report rows of any number of seeds.
    columns : list of strings
        Columns to aggregate.

    Returns
    -------
    summary : :class:`pandas.DataFrame`
        One row per (scenario, policy) with ``nseeds``, the means and
        ``<column>_error``.
    """
    if columns is None:
        skip = ('seed', 'schema_version')
        columns = [c for c in frame.select_dtypes('number').columns
                   if c not in skip]
    groups = frame.groupby(['scenario', 'policy'], sort=True)
    means = groups[columns].mean()
    # sem of a single seed is nan.
    errors = groups[columns].agg(lambda x: scipy.stats.sem(x, nan_policy='omit'))
    errors.columns = [c + '_error' for c in errors.columns]
    summary = pd.concat([means, errors], axis=1)
    summary.insert(0, 'nseeds', groups.size())
    order = ['nseeds']
    for c in columns:
        order += [c, c + '_error']
    return summary[order].reset_index()


def main(args):
    """Aggregate incnet reports.

    Parameters
    ----------
    args : list of strings
        command-line arguments.

    Returns
    -------
    None.
    """

    options = parse_args(args)
    frames = [read_report(f).frame for f in options.filenames]
    frame = pd.concat(frames, ignore_index=True)
    summary = aggregate(frame, options.columns)
    if options.out is not None:
        summary.to_csv(options.out, index=False)
    else:
        print(summary.to_string(index=False))


if __name__ == '__main__':

    main(sys.argv[1:])
