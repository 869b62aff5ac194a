import json
import random
import statistics
import collections

import pytest

from ptmchain.models import HUGGINGFACE, PYTORCHHUB, EXACT, PtmPackage, Repository, PtmAppLink
from ptmchain.stats import *

DOMAIN_TAGS = collections.OrderedDict([
    ('NLP', ['transformers', 'fill-mask']),
    ('CV', ['image-classification']),
    ('Audio', ['automatic-speech-recognition']),
    ('Multimodal', ['text-to-image']),
    ('Other', []),
])
PROVENANCE = dict(pipeline_mode='cheap', client_id='test:mock', timestamp='2024-01-01T00:00:00Z')


@pytest.fixture
def oracle(store):
    """
    A store with 50 random PTMs, and the facts needed to compute the expected statistics.
    """
    rng = random.Random(7)
    rows = []
    for i in range(50):
        domain = rng.choice(list(DOMAIN_TAGS))
        tags = DOMAIN_TAGS[domain]
        metadata = None
        if i % 2 == 0:
            metadata = {
                'parameter_count': rng.choice([None, rng.randint(1, 500) * 10 ** 6]),
                'license': rng.choice([None, '', 'mit']),
            }
            if i % 5 == 0:
                # Extracted domains win over registry tags:
                metadata['domain'] = domain
                tags = DOMAIN_TAGS['CV' if domain != 'CV' else 'NLP']
        ptm = PtmPackage(
            HUGGINGFACE if i < 45 else PYTORCHHUB,
            'model-{0:02d}'.format(i),
            tags=tags,
            created_at='2022-{0:02d}-{1:02d}T12:00:00Z'.format(
                rng.choice([1, 2, 4, 5]), rng.randint(1, 28)))
        rows.append((ptm, domain, metadata))
    store.add_ptms([r[0] for r in rows])
    for ptm, _, metadata in rows:
        if metadata is not None:
            store.save_metadata(ptm.id, metadata, PROVENANCE)
    store.add_repositories([Repository('a/b')])
    store.add_links([PtmAppLink('github:a/b', r[0].id, ['x:1:y'], EXACT) for r in rows[:10]])
    return store, rows


def _distribution(keys):
    counts = collections.Counter(keys)
    return [
        (k, n, n / sum(counts.values()))
        for k, n in sorted(counts.items(), key=lambda i: (-i[1], i[0]))]


def test_domain_distribution(oracle):
    store, rows = oracle
    res = domain_distribution(store)
    assert [(r.key, r.count, r.proportion) for r in res] == \
        _distribution(d for _, d, _ in rows)
    assert sum(r.count for r in res) == 50
    assert sum(r.proportion for r in res) == pytest.approx(1.0)

    res = domain_distribution(store, 'downstream')
    assert [(r.key, r.count) for r in res] == [(k, n) for k, n, _ in _distribution(
        d for _, d, _ in rows[:10])]

    res = domain_distribution(store, registry=PYTORCHHUB)
    assert sum(r.count for r in res) == 5

    with pytest.raises(ValueError):
        domain_distribution(store, 'upstream')


def test_creation_time_series(oracle):
    store, rows = oracle
    res = creation_time_series(store)
    assert sorted(set(r.month for r in res)) == [
        '2022-01', '2022-02', '2022-03', '2022-04', '2022-05']
    counts = collections.Counter((p.created_at[:7], d) for p, d, _ in rows)
    for row in res:
        assert row.count == counts[(row.month, row.domain)]
    assert sum(r.count for r in res) == 50
    # Zero-filled:
    assert all(r.count == 0 for r in res if r.month == '2022-03')
    domains = [r.domain for r in res if r.month == '2022-01']
    assert domains == [d for d in DOMAIN_TAGS if d in set(d for _, d, _ in rows)]


def test_parameter_median_series(oracle):
    store, rows = oracle
    values = collections.defaultdict(list)
    for p, d, md in rows:
        if md and md['parameter_count'] is not None:
            values[(p.created_at[:7], d)].append(md['parameter_count'])
    res = parameter_median_series(store)
    assert {(r.month, r.domain): (r.median, r.n) for r in res} == {
        k: (statistics.median(v), len(v)) for k, v in values.items()}
    assert [r.month for r in res] == sorted(r.month for r in res)


def test_metadata_availability(oracle):
    store, rows = oracle
    mds = [md for _, _, md in rows if md is not None]
    res = {r.field: r for r in metadata_availability(store)}
    assert len(res) == 19
    assert res['license'].available == sum(1 for md in mds if md['license'])
    assert res['license'].total == 25
    assert res['parameter_count'].proportion == pytest.approx(
        sum(1 for md in mds if md['parameter_count'] is not None) / 25)
    assert res['domain'].available == 5
    assert res['hardware'].available == 0


def test_empty_store(store):
    assert domain_distribution(store) == []
    assert creation_time_series(store) == []
    assert parameter_median_series(store) == []
    assert metadata_availability(store) == []


def test_ptm_domain():
    ptm = PtmPackage(HUGGINGFACE, 'x', tags=['image-classification'])
    assert ptm_domain(ptm) == 'CV'
    assert ptm_domain(ptm, {'domain': 'Audio'}) == 'Audio'
    assert ptm_domain(ptm, {'domain': 'Robotics'}) == 'CV'
    assert ptm_domain(PtmPackage(HUGGINGFACE, 'x')) == 'Other'


@pytest.mark.parametrize('name', REPORTS)
def test_report(oracle, tmp_path, name):
    store, _ = oracle
    rows = report(store, name)
    assert rows

    csv = write_report(name, rows, tmp_path / 'report.csv')
    assert len(csv.read_text(encoding='utf-8').splitlines()) == len(rows) + 1
    data = json.loads(write_report(name, rows, tmp_path / 'report.json').read_text(
        encoding='utf-8'))
    assert len(data) == len(rows)


def test_report_invalid(store, tmp_path):
    with pytest.raises(ValueError):
        report(store, 'trends')
    with pytest.raises(ValueError):
        write_report('domains', [], tmp_path / 'report.txt')
