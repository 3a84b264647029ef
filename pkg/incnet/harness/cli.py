"""Command line driver.

    incnet run <scenario> [--config FILE] [--seed N ...] [--out CSV]
    incnet reference <scenario> [--config FILE] [--seed N ...] [--out CSV]
    incnet verify --report CSV --oracle CSV
    incnet list
"""

import argparse
import sys
from incnet.harness.report import Report, read_report, verify
from incnet.harness.scenarios import (
        SCENARIOS, UnknownScenario, run_reference, run_scenario
        )
from incnet.utils.comm import init_communicator, split_seeds
from incnet.utils.io import ConfigError, read_input
from incnet.utils.misc import IncnetError


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
    parser = argparse.ArgumentParser(prog='incnet', description=__doc__,
                                     formatter_class=
                                     argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest='command')
    for name, text in (('run', 'Simulate a scenario.'),
                       ('reference', 'Software reference of a scenario.')):
        p = sub.add_parser(name, help=text)
        p.add_argument('scenario', help='Scenario name.')
        p.add_argument('-c', '--config', default=None,
                       help='JSON scenario configuration.')
        p.add_argument('-s', '--seed', type=int, nargs='+', default=[7],
                       dest='seeds', help='Seeds to run. Default: 7')
        p.add_argument('-o', '--out', default=None,
                       help='Report CSV (an .h5 sidecar is written next to '
                       'it).')
        p.add_argument('-v', '--verbose', action='count', default=0,
                       help='Print progress.')
    p = sub.add_parser('verify', help='Check a report against a reference.')
    p.add_argument('--report', required=True, help='Simulated report CSV.')
    p.add_argument('--oracle', required=True, help='Reference report CSV.')
    p.add_argument('-v', '--verbose', action='count', default=0,
                   help='Print the ledger.')
    sub.add_parser('list', help='List scenarios.')
    options = parser.parse_args(args)
    if options.command is None:
        parser.print_help()
        sys.exit(1)
    return options


def _run(options, comm):
    config = None
    if options.config is not None:
        config = read_input(options.config, comm, verbose=options.verbose)
    runner = run_scenario if options.command == 'run' else run_reference
    report = Report()
    for seed in split_seeds(options.seeds, comm):
        report.extend(runner(options.scenario, config, seed=seed,
                             verbose=options.verbose))
    parts = comm.gather(report, root=0)
    if comm.rank != 0:
        return 0
    report = Report()
    for part in parts:
        report.extend(part)
    if options.out is not None:
        report.write(options.out)
    if options.verbose or options.out is None:
        report.print_summary()
    return 0


def _verify(options):
    ledger = verify(read_report(options.report), read_report(options.oracle),
                    verbose=options.verbose)
    failed = ledger[~ledger['passed'].astype(bool)]
    for _, row in failed.iterrows():
        print("# Error: {} {} seed {}: {} failed ({}).".format(
            row['scenario'], row['policy'], row['seed'], row['check'],
            row['detail']))
    print("# {} of {} checks passed.".format(len(ledger) - len(failed),
                                             len(ledger)))
    return int(len(failed) > 0 or len(ledger) == 0)


def main(args=None):
    """Entry point of the ``incnet`` command.

    Returns
    -------
    status : int
        0 on success, 1 on any error or failed check.
    """
    if args is None:
        args = sys.argv[1:]
    options = parse_args(args)
    comm = init_communicator()
    try:
        if options.command == 'list':
            for name in sorted(SCENARIOS):
                print(name)
            return 0
        if options.command == 'verify':
            return _verify(options)
        return _run(options, comm)
    except (UnknownScenario, ConfigError) as err:
        print("# Error: {}".format(err))
        return 1
    except (IncnetError, OSError, ValueError) as err:
        print("# Error: {}: {}".format(type(err).__name__, err))
        return 1


if __name__ == '__main__':
    sys.exit(main())
