"""
Scan a corpus of application repositories for PTM loading calls.

The corpus directory is expected to contain repositories as `<owner>/<name>/`.
"""
from clldutils.clilib import PathType

from ptmchain.analyzer import MAX_FILE_SIZE
from ptmchain.signatures import load_signatures
from ptmchain.scanner import ScanConfig, discover_repositories, scan_corpus
from ptmchain.cli_util import add_db, get_store, add_jobs


def register(parser):
    add_db(parser)
    parser.add_argument(
        '--corpus',
        metavar='CORPUS',
        help='Directory containing repositories as <owner>/<name>/',
        type=PathType(type='dir'),
        required=True,
    )
    parser.add_argument(
        '--signatures',
        metavar='CATALOG',
        help='Signature catalog (JSON); defaults to the catalog shipped with ptmchain',
        type=PathType(type='file'),
        default=None,
    )
    add_jobs(parser, help='Number of repositories scanned in parallel')
    parser.add_argument(
        '--no-prefilter',
        help='Parse every source file, not only those passing the substring pre-filter',
        action='store_true',
        default=False,
    )
    parser.add_argument(
        '--max-file-size',
        help='Skip source files larger than this number of bytes',
        type=int,
        default=MAX_FILE_SIZE,
    )


def run(args):
    store = get_store(args)
    sigset = load_signatures(args.cfg.signatures)
    args.log.info('{0} signatures for {1}'.format(
        len(sigset.signatures), ', '.join(sigset.libraries)))
    repos = discover_repositories(args.cfg.corpus)
    counts = scan_corpus(
        store,
        repos,
        sigset,
        parallelism=args.cfg.jobs,
        config=ScanConfig(
            max_file_size=args.max_file_size,
            use_prefilter=not args.no_prefilter))
    res = counts.__json__()
    res['skipped_files'] = sum(len(r.skipped) for r in store.scan_results())
    return res
