"""
Export a store table as JSON lines or CSV.

PTM package and repository JSON lines can be re-ingested with `ptmchain ingest`.
"""
from clldutils.clilib import ParserError

from ptmchain.store import TABLES, EXPORT_FORMATS, Selector, StoreError, export_table, query
from ptmchain.cli_util import add_db, get_store, add_output_dir


def register(parser):
    add_db(parser)
    parser.add_argument(
        '--table',
        choices=TABLES,
        required=True,
    )
    add_output_dir(parser)
    parser.add_argument(
        '--format',
        dest='export_format',
        choices=EXPORT_FORMATS,
        default='jsonl',
    )
    parser.add_argument(
        '--where',
        metavar='CONDITION',
        help='Only count rows matching a condition like "downloads >= 50"; the export '
             'always contains the full table',
        default=None,
    )


def run(args):
    store = get_store(args)
    fname = export_table(store, args.table, args.out, args.export_format)
    res = dict(table=args.table, file=str(fname), rows=store.count(args.table))
    if args.where:
        try:
            res['matching'] = len(query(store, Selector.from_string(
                '{0} where {1}'.format(args.table, args.where))))
        except (StoreError, ValueError) as e:
            raise ParserError('invalid condition {0}: {1}'.format(args.where, e))
    args.log.info('{0} rows written to {1}'.format(res['rows'], fname))
    return res
