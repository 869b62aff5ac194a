"""
Summary statistics of the ingested PTMs and their downstream applications.

Reports: domain distributions, creation time series, parameter medians and metadata
availability.

Without --out the report is printed as table.
"""
import attr
from clldutils.clilib import Table, add_format

from ptmchain.stats import REPORTS, ROW_CLASSES, report, write_report
from ptmchain.cli_util import add_db, get_store, add_out, check_out


def register(parser):
    add_db(parser)
    parser.add_argument(
        '--report',
        choices=REPORTS,
        default='domains',
    )
    add_out(parser, 'Report file', ['.csv', '.json'])
    parser.add_argument(
        '--registry',
        help='Only consider PTMs from this registry',
        default=None,
    )
    add_format(parser, default='simple')


def run(args):
    out = check_out(args.out, ['.csv', '.json'])
    store = get_store(args, reports=[args.report])
    rows = report(store, args.report, registry=args.registry)
    if out:
        write_report(args.report, rows, out)
        args.log.info('{0} report written to {1}'.format(args.report, out))
    else:
        with Table(args, *[f.name for f in attr.fields(ROW_CLASSES[args.report])]) as t:
            t.extend(attr.astuple(r) for r in rows)
    return dict(report=args.report, rows=len(rows))
