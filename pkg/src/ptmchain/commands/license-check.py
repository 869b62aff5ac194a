"""
Check license compatibility along PTM-application links.

Aggregates the links by (PTM license, repository license) and writes the flow table as CSV
and, optionally, as Sankey JSON. Without --out the flow table is printed.
"""
from clldutils.clilib import PathType, Table, add_format

from ptmchain.licenses import load_matrix, license_flows, write_flows_csv, write_sankey
from ptmchain.cli_util import add_db, get_store, add_out, check_out


def register(parser):
    add_db(parser)
    parser.add_argument(
        '--matrix',
        metavar='MATRIX',
        help='Compatibility matrix (CSV); defaults to the matrix shipped with ptmchain',
        type=PathType(type='file'),
        default=None,
    )
    add_out(parser, 'Flow table', ['.csv'])
    parser.add_argument(
        '--sankey',
        metavar='PATH',
        help='Write the flows as Sankey JSON to PATH (.json)',
        default=None,
    )
    add_format(parser, default='simple')


def run(args):
    out = check_out(args.out, ['.csv'])
    sankey = check_out(args.sankey, ['.json'])
    store = get_store(args)
    table = license_flows(store, load_matrix(args.matrix))
    if out:
        write_flows_csv(table, out)
        args.log.info('flow table written to {0}'.format(out))
    else:
        with Table(args, 'ptm_license', 'repo_license', 'pair_count', 'verdict') as t:
            for row in table.rows:
                t.append([row.ptm_license, row.repo_license, row.pair_count, row.verdict])
    if sankey:
        write_sankey(table, sankey)
        args.log.info('Sankey JSON written to {0}'.format(sankey))
    res = dict(table.summary)
    res['flows'] = len(table.rows)
    return res
