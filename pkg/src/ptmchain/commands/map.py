"""
Link usage records of scanned repositories to indexed PTM packages.
"""
from ptmchain.mapper import link
from ptmchain.cli_util import add_db, get_store


def register(parser):
    add_db(parser)


def run(args):
    stats = link(get_store(args))
    args.log.info('{0.links} links between {0.repos} repositories and {0.ptms} PTMs'.format(
        stats))
    return stats.__json__()
