"""
Main command line interface of the ptmchain package.

Every subcommand prints a JSON summary of its run as last line on stdout.
"""
import sys
import logging
import contextlib

from clldutils.clilib import register_subcommands, get_parser_and_subparsers, ParserError
from clldutils.loglib import Logging

import ptmchain.commands
from ptmchain.util import summary_line, message
from ptmchain.cli_util import add_db

EXIT_OK, EXIT_FAILURE, EXIT_USAGE = 0, 1, 2


def get_parser():
    parser, subparsers = get_parser_and_subparsers('ptmchain')
    add_db(parser, default=None)
    register_subcommands(subparsers, ptmchain.commands)
    return parser, subparsers


def main(args=None, parsed_args=None, log=None, catch_all=True):
    parser, subparsers = get_parser()
    try:
        args = parsed_args or parser.parse_args(args=args)
    except SystemExit as e:
        return EXIT_OK if e.code in (0, None) else EXIT_USAGE

    if not hasattr(args, "main"):
        parser.print_usage(sys.stderr)
        return EXIT_USAGE

    with contextlib.ExitStack() as stack:
        if not log:  # pragma: no cover
            args.log = getattr(args, 'log', None) or logging.getLogger('ptmchain')
            stack.enter_context(
                Logging(args.log, level=getattr(args, 'log_level', logging.INFO)))
        else:
            args.log = log
        try:
            res = args.main(args) or {}
        except KeyboardInterrupt:  # pragma: no cover
            return EXIT_FAILURE
        except ParserError as e:
            print(message(args._command, e), file=sys.stderr)
            subparsers.choices[args._command].print_usage(sys.stderr)
            return EXIT_USAGE
        except Exception as e:
            if not catch_all:
                raise
            args.log.error(message(args._command, 'failed: {0}'.format(e)))
            print(summary_line(args._command, status='error', error=str(e)))
            return EXIT_FAILURE
        print(summary_line(args._command, **res))
        return EXIT_OK


if __name__ == '__main__':  # pragma: no cover
    sys.exit(main() or 0)
