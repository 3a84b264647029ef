#!/usr/bin/env python
'''Simulate one scenario and export the network event log of every policy.

Logs are written to <prefix>_<policy>.csv, or to HDF5 files when the prefix
ends in .h5.  Link statistics are printed with -v.
'''
import argparse
import os
import sys
from incnet.harness.scenarios import get_scenario
from incnet.utils.io import read_input
from incnet.utils.comm import FakeComm


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
    parser.add_argument('scenario', help='Scenario name.')
    parser.add_argument('-c', '--config', dest='config', default=None,
                        help='JSON scenario configuration.')
    parser.add_argument('-s', '--seed', type=int, dest='seed', default=7,
                        help='Seed. Default: 7')
    parser.add_argument('-o', '--out', dest='out', default='events.csv',
                        help='Output prefix with extension. '
                        'Default: events.csv')
    parser.add_argument('-v', '--verbose', action='store_true',
                        default=False, help='Print link statistics.')

    return parser.parse_args(args)


def main(args):
    """Run the scenario and export its event logs.

    Parameters
    ----------
    args : list of strings
        command-line arguments.

    Returns
    -------
    None.
    """

    options = parse_args(args)
    config = {}
    if options.config is not None:
        config = read_input(options.config, FakeComm())
    config.setdefault('network', {})['event_log'] = True
    scenario = get_scenario(options.scenario, config)
    root, ext = os.path.splitext(options.out)
    for policy in scenario.policies():
        work = scenario.workload(options.seed, policy)
        scenario.simulate(policy, work, options.seed)
        net = scenario.deployments[str(policy)].net
        filename = '{}_{}{}'.format(root, policy, ext or '.csv')
        net.export_log(filename)
        print("# Wrote {} events to {}.".format(len(net.log), filename))
        if options.verbose:
            print(net.link_stats().to_string(index=False))


if __name__ == '__main__':

    main(sys.argv[1:])
