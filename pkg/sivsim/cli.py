"""Command-line front end: ``sivsim <subcommand> --scenario <file> ...``."""
import argparse
import logging
import sys

from . import __version__
from .acceptance import compare_acceptance
from .artifacts import write_error
from .config import log_level_setting, parse_scenario
from .errors import SivsimError
from .runner import HANDLERS, REPRODUCE_TARGETS, reproduce, run

logger = logging.getLogger('sivsim')

EXIT_OK = 0
EXIT_FAILED = 1


def build_parser():
    parser = argparse.ArgumentParser(prog='sivsim', description='SiV color-centre simulations with acceptance checks.')
    parser.add_argument('--version', action='version', version=f'%(prog)s {__version__}')
    sub = parser.add_subparsers(dest='command', required=True)

    for name in HANDLERS:
        p = sub.add_parser(name, help=f'run the {name} simulation')
        p.add_argument('--scenario', required=True, help='scenario YAML file')
        p.add_argument('--out', help='output directory (default: $SIVSIM_OUTPUT_DIR/<name>-<subcommand>)')
        p.add_argument('--seed', type=int, help='override the scenario seed')
        _common(p)

    p = sub.add_parser('reproduce', help='run the bundled scenarios and check the acceptance targets')
    which = p.add_mutually_exclusive_group(required=True)
    which.add_argument('--all', action='store_true', help='every target')
    which.add_argument('--target', action='append', choices=REPRODUCE_TARGETS, help='one target (repeatable)')
    p.add_argument('--out', help='root directory for the target directories')
    _common(p)

    p = sub.add_parser('compare', help='check existing artifacts against the acceptance targets')
    p.add_argument('artifacts', help='reproduce root or single run directory')
    p.add_argument('-v', '--verbose', action='store_true', help='debug logging')
    return parser


def _common(p):
    p.add_argument('--jobs', type=int, help='worker processes (default: $SIVSIM_JOBS or 1)')
    p.add_argument('-v', '--verbose', action='store_true', help='debug logging')


def _print_report(report):
    print(report.to_frame().to_string(index=False))
    print('PASS' if report.passed else f'FAIL ({len(report.failures())} failed checks)')


def _dispatch(args):
    if args.command == 'compare':
        report = compare_acceptance(args.artifacts)
        _print_report(report)
        return EXIT_OK if report.passed else EXIT_FAILED
    if args.command == 'reproduce':
        report = reproduce(args.out, targets=None if args.all else args.target, jobs=args.jobs)
        _print_report(report)
        return EXIT_OK if report.passed else EXIT_FAILED
    try:
        scenario = parse_scenario(args.scenario)
    except SivsimError as e:
        if args.out:
            write_error(args.out, e.with_context(subcommand=args.command))
        raise
    result = run(args.command, scenario, out_dir=args.out, seed=args.seed, jobs=args.jobs)
    print(result.out_dir)
    return EXIT_OK


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else log_level_setting(),
                        format='%(asctime)s %(levelname)s %(name)s: %(message)s')
    try:
        return _dispatch(args)
    except SivsimError as e:
        logger.error('%s: %s', e.code, e.message)
        return e.exit_code
    except KeyboardInterrupt:
        logger.warning('Interrupted')
        return 130
    except Exception:
        logger.exception('Unexpected failure in %s', args.command)
        return EXIT_FAILED


if __name__ == '__main__':
    sys.exit(main())
