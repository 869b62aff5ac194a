import os
import pathlib
import argparse

import attr
from clldutils.clilib import ParserError, PathType

from .store import DB_NAME, open_store

__all__ = ['RunConfig', 'add_db', 'add_jobs', 'add_output_dir', 'add_out', 'get_store', 'check_out']


DB_HELP = 'Store file, or existing directory containing the store file {0}'.format(DB_NAME)


def add_db(parser, default=argparse.SUPPRESS):
    """
    `--db` is accepted before and after the subcommand; the subcommand's value wins.
    """
    parser.add_argument('--db', metavar='STORE', help=DB_HELP, default=default)


def add_jobs(parser, help='Number of parallel workers'):
    parser.add_argument('--jobs', type=int, default=1, help=help)


def add_output_dir(parser):
    parser.add_argument(
        '--out',
        help='An existing directory for the output',
        type=PathType(type='dir'),
        default=pathlib.Path('.'),
    )


def add_out(parser, help, suffixes):
    parser.add_argument(
        '--out',
        metavar='PATH',
        help='{0} ({1})'.format(help, ' or '.join(suffixes)),
        type=pathlib.Path,
        default=None,
    )


def check_out(fname, suffixes=None):
    """
    Output files must go into an existing, writable directory.
    """
    if fname is None:
        return None
    fname = pathlib.Path(fname)
    if suffixes and fname.suffix not in suffixes:
        raise ParserError('invalid output file {0}: expected {1}'.format(
            fname, ' or '.join(suffixes)))
    if not fname.parent.is_dir() or not os.access(str(fname.parent), os.W_OK):
        raise ParserError('output directory does not exist or is not writable: {0}'.format(
            fname.parent))
    return fname


def _existing(kind):
    def check(instance, attribute, value):
        if value is None:
            return
        if (kind == 'dir' and not value.is_dir()) or (kind == 'file' and not value.is_file()):
            raise ParserError('{0} does not exist or is not a {1}: {2}'.format(
                attribute.name, kind, value))
    return check


def _path(value):
    return pathlib.Path(value) if value is not None else None


@attr.s(frozen=True)
class RunConfig(object):
    """
    Settings shared by the subcommands, validated before any stage runs.
    """
    db = attr.ib(converter=_path)
    signatures = attr.ib(default=None, converter=_path, validator=_existing('file'))
    corpus = attr.ib(default=None, converter=_path, validator=_existing('dir'))
    jobs = attr.ib(default=1)
    client = attr.ib(default=attr.Factory(dict))
    reports = attr.ib(default=attr.Factory(list))
    log_level = attr.ib(default=None)

    @db.validator
    def _check_db(self, attribute, value):
        if value is None:
            raise ParserError('no store given, use --db')
        directory = value if value.is_dir() else value.parent
        if not directory.is_dir():
            raise ParserError('store directory does not exist: {0}'.format(directory))

    @jobs.validator
    def _check_jobs(self, attribute, value):
        if value is None or value < 1:
            raise ParserError('parallelism must be at least 1, got {0}'.format(value))

    @classmethod
    def from_args(cls, args, **kw):
        return cls(
            db=args.db,
            signatures=getattr(args, 'signatures', None),
            corpus=getattr(args, 'corpus', None),
            jobs=getattr(args, 'jobs', 1),
            log_level=getattr(args, 'log_level', None),
            **kw)

    @property
    def db_path(self) -> pathlib.Path:
        return self.db / DB_NAME if self.db.is_dir() else self.db


def get_store(args, **kw):
    """
    Validate the run configuration and open the store.
    """
    args.cfg = RunConfig.from_args(args, **kw)
    return open_store(args.cfg.db)
