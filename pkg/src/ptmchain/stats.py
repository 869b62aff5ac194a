"""
Summary statistics over the store, as plot-ready tables.

PTMs are assigned to a domain by extracted metadata, falling back to the registry tags (see
`config/domains.ini`) and finally to `Other`. Time buckets are calendar months in UTC.
"""
import typing
import pathlib
import statistics
import collections

import attr
from csvw import dsv
from clldutils import jsonlib

from . import config
from .cards.prompts import domain_and_task
from .cards.schema import field_names, is_empty
from .models import PtmPackage

__all__ = [
    'REPORTS', 'DistributionRow', 'TimelineRow', 'MedianRow', 'AvailabilityRow',
    'ptm_domain', 'domain_distribution', 'creation_time_series', 'parameter_median_series',
    'metadata_availability', 'write_report', 'report']

REPORTS = ('domains', 'downstream', 'timeline', 'params', 'availability')
OTHER = 'Other'


@attr.s(frozen=True)
class DistributionRow(object):
    key = attr.ib()
    count = attr.ib()
    proportion = attr.ib()


@attr.s(frozen=True)
class TimelineRow(object):
    month = attr.ib()
    domain = attr.ib()
    count = attr.ib()


@attr.s(frozen=True)
class MedianRow(object):
    month = attr.ib()
    domain = attr.ib()
    median = attr.ib()
    n = attr.ib()


@attr.s(frozen=True)
class AvailabilityRow(object):
    field = attr.ib()
    available = attr.ib()
    total = attr.ib()
    proportion = attr.ib()


def ptm_domain(ptm: PtmPackage, metadata: typing.Optional[dict] = None) -> str:
    domains = config.load('domains')
    value = (metadata or {}).get('domain')
    if value in domains:
        return value
    return domain_and_task(ptm.tags)[0] or OTHER


def _ptms(store, registry=None):
    metadata = {ptm_id: data for ptm_id, data, _ in store.metadata()}
    return [
        (p, metadata.get(p.id)) for p in store.ptms(registry_name=registry)]


def distribution(keys: typing.Iterable[str]) -> typing.List[DistributionRow]:
    """
    >>> [(r.key, r.proportion) for r in distribution(['NLP', 'CV', 'NLP', 'NLP'])]
    [('NLP', 0.75), ('CV', 0.25)]
    """
    counts = collections.Counter(keys)
    total = sum(counts.values())
    return [
        DistributionRow(key, n, n / total)
        for key, n in sorted(counts.items(), key=lambda i: (-i[1], i[0]))]


def domain_distribution(store,
                        side: str = 'ptms',
                        registry: typing.Optional[str] = None) -> typing.List[DistributionRow]:
    """
    Distribution of domains over PTMs (`side='ptms'`) or over PTM-application links
    (`side='downstream'`).
    """
    domains = {p.id: ptm_domain(p, md) for p, md in _ptms(store, registry)}
    if side == 'ptms':
        return distribution(domains.values())
    if side == 'downstream':
        return distribution(domains[li.ptm_id] for li in store.links() if li.ptm_id in domains)
    raise ValueError('unknown side: {0}'.format(side))


def month(timestamp: str) -> str:
    return timestamp[:7]


def months(first: str, last: str) -> typing.List[str]:
    """
    >>> months('2022-11', '2023-02')
    ['2022-11', '2022-12', '2023-01', '2023-02']
    """
    y, m = map(int, first.split('-'))
    res = []
    while True:
        res.append('{0:04d}-{1:02d}'.format(y, m))
        if res[-1] >= last:
            return res
        y, m = (y + 1, 1) if m == 12 else (y, m + 1)


def creation_time_series(store, registry: typing.Optional[str] = None) -> typing.List[TimelineRow]:
    """
    Number of PTMs created per month and domain; months without PTMs are zero-filled.
    """
    counts = collections.Counter(
        (month(p.created_at), ptm_domain(p, md))
        for p, md in _ptms(store, registry) if p.created_at)
    if not counts:
        return []
    domains = sorted(set(d for _, d in counts), key=lambda d: config.load('domains')[d].ordinal)
    return [
        TimelineRow(m, d, counts[(m, d)])
        for m in months(min(k[0] for k in counts), max(k[0] for k in counts))
        for d in domains]


def parameter_median_series(store,
                            registry: typing.Optional[str] = None) -> typing.List[MedianRow]:
    """
    Median parameter count of PTMs created per month and domain; buckets without data are
    omitted.
    """
    values = collections.defaultdict(list)
    for p, md in _ptms(store, registry):
        count = (md or {}).get('parameter_count')
        if p.created_at and isinstance(count, int) and not isinstance(count, bool):
            values[(month(p.created_at), ptm_domain(p, md))].append(count)
    return [
        MedianRow(m, d, statistics.median(v), len(v))
        for (m, d), v in sorted(
            values.items(), key=lambda i: (i[0][0], config.load('domains')[i[0][1]].ordinal))]


def metadata_availability(store,
                          registry: typing.Optional[str] = None) -> typing.List[AvailabilityRow]:
    """
    Proportion of PTMs with extracted metadata which have a non-empty value per field.
    """
    mds = [md for _, md in _ptms(store, registry) if md is not None]
    if not mds:
        return []
    return [
        AvailabilityRow(
            name,
            sum(1 for md in mds if not is_empty(md.get(name))),
            len(mds),
            sum(1 for md in mds if not is_empty(md.get(name))) / len(mds))
        for name in field_names()]


def report(store, name: str, registry: typing.Optional[str] = None) -> list:
    if name == 'domains':
        return domain_distribution(store, 'ptms', registry)
    if name == 'downstream':
        return domain_distribution(store, 'downstream', registry)
    if name == 'timeline':
        return creation_time_series(store, registry)
    if name == 'params':
        return parameter_median_series(store, registry)
    if name == 'availability':
        return metadata_availability(store, registry)
    raise ValueError('unknown report: {0}'.format(name))


ROW_CLASSES = {
    'domains': DistributionRow,
    'downstream': DistributionRow,
    'timeline': TimelineRow,
    'params': MedianRow,
    'availability': AvailabilityRow,
}


def write_report(name: str, rows: list, fname) -> pathlib.Path:
    """
    Write report rows as CSV or JSON, depending on the suffix of `fname`.
    """
    fname = pathlib.Path(fname)
    header = [f.name for f in attr.fields(ROW_CLASSES[name])]
    if fname.suffix == '.csv':
        with dsv.UnicodeWriter(fname) as writer:
            writer.writerow(header)
            writer.writerows([attr.astuple(r) for r in rows])
    elif fname.suffix == '.json':
        jsonlib.dump([attr.asdict(r) for r in rows], fname, indent=2)
    else:
        raise ValueError('report output must be a .csv or .json file: {0}'.format(fname))
    return fname
