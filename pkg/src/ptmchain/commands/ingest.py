"""
Load registry and repository snapshots (JSON lines) into the store.

Records with an existing (registry, name) resp. (host, full_name) are updated, malformed
records are reported and skipped.
"""
import pathlib

from clldutils.clilib import ParserError, PathType

from ptmchain.store import ingest_registry_snapshot, ingest_repository_snapshot
from ptmchain.cli_util import add_db, get_store


def register(parser):
    add_db(parser)
    parser.add_argument(
        '--snapshot',
        metavar='SNAPSHOT',
        help='Registry snapshot, one PTM package per line',
        type=PathType(type='file'),
        default=None,
    )
    parser.add_argument(
        '--repositories',
        metavar='SNAPSHOT',
        help='Repository snapshot, one application repository per line',
        type=PathType(type='file'),
        default=None,
    )


def run(args):
    if not (args.snapshot or args.repositories):
        raise ParserError('nothing to ingest, use --snapshot and/or --repositories')
    store = get_store(args)
    res = dict(loaded=0, skipped=0, repositories_loaded=0, repositories_skipped=0)
    if args.snapshot:
        errors = []
        res['loaded'] = ingest_registry_snapshot(store, pathlib.Path(args.snapshot), errors)
        res['skipped'] = len(errors)
        args.log.info('{0}: {1} PTM packages loaded, {2} skipped'.format(
            args.snapshot, res['loaded'], res['skipped']))
    if args.repositories:
        errors = []
        res['repositories_loaded'] = ingest_repository_snapshot(
            store, pathlib.Path(args.repositories), errors)
        res['repositories_skipped'] = len(errors)
        args.log.info('{0}: {1} repositories loaded, {2} skipped'.format(
            args.repositories, res['repositories_loaded'], res['repositories_skipped']))
    return res
