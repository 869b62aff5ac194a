"""
Mapping of usage records to PTM packages, i.e. derivation of PTM-application links.
"""
import typing
import logging
import collections

import attr

from .models import (
    EXACT, CASE_INSENSITIVE, UNMATCHED, MATCH_STRENGTHS, PtmAppLink, PtmPackage,
    RepoScanResult,
)

__all__ = [
    'Unresolvable', 'NameResolution', 'PtmIndex', 'LinkStats', 'normalize_model_name', 'link']

QUOTES = '\'"`'

log = logging.getLogger('ptmchain')


class Unresolvable(ValueError):
    pass


def normalize_model_name(raw: str, hub: typing.Optional[str] = None) -> str:
    """
    Strip surrounding whitespace and quote characters; nothing else.

    >>> normalize_model_name(" 'gpt2' ")
    'gpt2'

    :raises Unresolvable: if nothing remains.
    """
    res, prev = raw or '', None
    while res != prev:
        prev, res = res, res.strip().strip(QUOTES)
    if not res:
        raise Unresolvable('empty model name: {0!r}'.format(raw))
    return res


@attr.s(frozen=True)
class NameResolution(object):
    raw = attr.ib()
    canonical = attr.ib()
    matched_ptm = attr.ib(default=None)
    strength = attr.ib(
        default=UNMATCHED, validator=attr.validators.in_(MATCH_STRENGTHS + (UNMATCHED,)))


class PtmIndex(object):
    """
    Lookup of PTM ids by registry and name, exact and case-insensitive.
    """

    def __init__(self, ptms: typing.Iterable[PtmPackage]):
        self.exact = collections.defaultdict(dict)
        self.folded = collections.defaultdict(lambda: collections.defaultdict(set))
        for ptm in ptms:
            self.exact[ptm.registry][ptm.name] = ptm.id
            self.folded[ptm.registry][ptm.name.lower()].add(ptm.id)

    def resolve(self, raw: str, hub: str) -> NameResolution:
        """
        :raises Unresolvable: if `raw` is empty after normalization.
        """
        name = normalize_model_name(raw, hub)
        if name in self.exact.get(hub, {}):
            return NameResolution(raw, name, self.exact[hub][name], EXACT)
        candidates = self.folded[hub].get(name.lower(), set()) if hub in self.folded else set()
        if len(candidates) == 1:
            return NameResolution(raw, name, next(iter(candidates)), CASE_INSENSITIVE)
        return NameResolution(raw, name)


@attr.s
class LinkStats(object):
    links = attr.ib(default=0)
    repos = attr.ib(default=0)
    ptms = attr.ib(default=0)
    unmatched = attr.ib(default=0)
    dynamic = attr.ib(default=0)

    def __json__(self):
        return attr.asdict(self)


def link(store, results: typing.Optional[typing.Iterable[RepoScanResult]] = None) -> LinkStats:
    """
    Link usage records to indexed PTMs and replace the links of the scanned repositories.

    Repeated loads of a PTM within a repository add evidence to one link. A link is `Exact` if
    any of its records matched exactly.

    :param results: Scan results; read from the store if not given.
    """
    results = store.scan_results() if results is None else list(results)
    index = PtmIndex(store.ptms())
    evidence = collections.defaultdict(set)
    strengths = collections.defaultdict(set)
    unmatched = collections.defaultdict(set)
    stats = LinkStats()

    for result in results:
        for record in result.records:
            if record.is_dynamic:
                stats.dynamic += 1
                continue
            try:
                res = index.resolve(record.model_name.text, record.hub)
            except Unresolvable as e:  # pragma: no cover
                log.warning('{0}: {1}'.format(result.repo_id, e))
                continue
            if res.matched_ptm:
                evidence[(result.repo_id, res.matched_ptm)].add(record.id)
                strengths[(result.repo_id, res.matched_ptm)].add(res.strength)
            else:
                unmatched[(result.repo_id, record.hub, res.canonical)].add(record.id)

    links = [
        PtmAppLink(
            repo_id=repo_id,
            ptm_id=ptm_id,
            evidence=sorted(ids),
            match_strength=EXACT if EXACT in strengths[(repo_id, ptm_id)] else CASE_INSENSITIVE)
        for (repo_id, ptm_id), ids in sorted(evidence.items())]
    store.replace_links(
        [r.repo_id for r in results],
        links,
        [(repo_id, hub, name, sorted(ids)) for (repo_id, hub, name), ids in unmatched.items()])

    stats.links = len(links)
    stats.repos = len(set(li.repo_id for li in links))
    stats.ptms = len(set(li.ptm_id for li in links))
    stats.unmatched = len(set((hub, name) for _, hub, name in unmatched))
    for li in links:
        if li.match_strength == CASE_INSENSITIVE:
            log.info('case-insensitive match: {0} -> {1}'.format(li.repo_id, li.ptm_id))
    log.info('{0.links} links between {0.repos} repositories and {0.ptms} PTMs'.format(stats))
    return stats
