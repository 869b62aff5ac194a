import json
import itertools

import pytest

from ptmchain import config
from ptmchain.models import HUGGINGFACE, PtmPackage, Repository, PtmAppLink, EXACT
from ptmchain.licenses import *
from ptmchain.scanner import discover_repositories, scan_corpus
from ptmchain.mapper import link
from ptmchain.store import ingest_registry_snapshot

MATRIX_HEADER = 'upstream,downstream,verdict,reason,provenance\n'


def _tokens(*categories):
    return sorted(
        lic.id for lic in config.load('licenses').values()
        if not categories or lic.category in categories)


@pytest.fixture
def flow_store(store):
    store.add_ptms([
        PtmPackage(HUGGINGFACE, 'p-mit', license_raw='MIT'),
        PtmPackage(HUGGINGFACE, 'p-apache', license_raw='apache-2.0'),
        PtmPackage(HUGGINGFACE, 'p-gpl', license_raw='GPL-3.0'),
        PtmPackage(HUGGINGFACE, 'p-rail', license_raw='creativeml-openrail-m'),
        PtmPackage(HUGGINGFACE, 'p-unknown'),
    ])
    store.add_repositories([
        Repository('r/mit', license_raw='MIT License'),
        Repository('r/apache', license_detected='apache-2.0'),
        Repository('r/none', license_detected='no-license'),
        Repository('r/multi', license_detected='multiple'),
        Repository('r/unknown'),
    ])
    store.add_links([
        PtmAppLink('github:' + repo, 'HuggingFace:' + ptm, ['app.py:1:x'], EXACT)
        for ptm, repo in [
            ('p-mit', 'r/mit'),
            ('p-apache', 'r/apache'),
            ('p-gpl', 'r/mit'),
            ('p-mit', 'r/none'),
            ('p-apache', 'r/none'),
            ('p-rail', 'r/mit'),
            ('p-mit', 'r/multi'),
            ('p-mit', 'r/apache'),
            # Pairs with an unrecorded license are not counted:
            ('p-unknown', 'r/mit'),
            ('p-mit', 'r/unknown'),
        ]])
    return store


@pytest.mark.parametrize(
    'raw,token,category',
    [
        ('MIT', 'mit', 'Permissive'),
        ('  Apache 2.0 ', 'apache-2.0', 'Permissive'),
        ('apache', 'apache-2.0', 'Permissive'),
        ('GPL-3.0', 'gpl-3.0-only', 'StrongCopyleft'),
        ('lgpl', 'lgpl-3.0-only', 'WeakCopyleft'),
        ('CC0-1.0', 'cc0-1.0', 'Public'),
        ('creativeml-openrail-m', 'creativeml-openrail-m', 'Rail'),
        ('llama2', 'llama2', 'Other'),
        ('my-own-license', 'my-own-license', 'Other'),
        (None, 'no-license', 'NoLicense'),
        ('unknown', 'no-license', 'NoLicense'),
        ('multiple', 'multiple', 'Multiple'),
    ]
)
def test_classify_license(raw, token, category):
    lic = classify_license(raw)
    assert (lic.spdx_like, lic.category) == (token, category)
    assert str(lic) == token


def test_check_compatibility_total():
    tokens = _tokens()
    for up, down in itertools.product(tokens, tokens):
        res = check_compatibility(classify_license(up), classify_license(down))
        assert res.verdict in (COMPATIBLE, INCOMPATIBLE, UNANALYZED)
        assert res.reason


def test_check_compatibility_identity():
    for token in _tokens('Permissive', 'WeakCopyleft', 'StrongCopyleft', 'Public', 'Rail'):
        lic = classify_license(token)
        assert check_compatibility(lic, lic).verdict == COMPATIBLE


def test_check_compatibility_copyleft_into_permissive():
    for up, down in itertools.product(_tokens('StrongCopyleft'), _tokens('Permissive')):
        res = check_compatibility(classify_license(up), classify_license(down))
        assert res.verdict == INCOMPATIBLE, (up, down)
        assert 'copyleft' in res.reason


def test_check_compatibility_unassessed():
    mit = classify_license('mit')
    for token in ['no-license', 'multiple', 'other', 'cc-by-nc-4.0']:
        lic = classify_license(token)
        assert check_compatibility(mit, lic).verdict == UNANALYZED
        assert check_compatibility(lic, mit).verdict == UNANALYZED
        assert check_compatibility(lic, lic).verdict == UNANALYZED
    res = check_compatibility(classify_license('creativeml-openrail-m'), mit)
    assert res.verdict == UNANALYZED
    assert 'not covered' in res.reason


def test_check_compatibility_matrix(tmp_path):
    fname = tmp_path / 'matrix.csv'
    fname.write_text(
        MATRIX_HEADER + 'mit,apache-2.0,Incompatible,test provision,\n', encoding='utf-8')
    matrix = load_matrix(fname)
    res = check_compatibility(classify_license('MIT'), classify_license('Apache'), matrix)
    assert res == CompatibilityVerdict(INCOMPATIBLE, 'test provision')
    assert check_compatibility(
        classify_license('gpl'), classify_license('mit'), matrix).verdict == UNANALYZED


def test_CompatibilityVerdict():
    with pytest.raises(ValueError):
        CompatibilityVerdict(INCOMPATIBLE)
    with pytest.raises(ValueError):
        CompatibilityVerdict('Maybe', 'x')


@pytest.mark.parametrize(
    'rows,msg',
    [
        ('mit,apache-2.0,compatible,,\n', 'missing reason'),
        ('mit,apache-2.0,maybe,r,\n', 'unknown verdict'),
        ('mit,apache-2.0,compatible,r,\nMIT,Apache,compatible,r,\n', 'duplicate cell'),
        ('mit,no-license,compatible,r,\n', 'not analyzable'),
        ('mit,llama2,compatible,r,\n', 'not analyzable'),
    ]
)
def test_load_matrix_invalid(tmp_path, rows, msg):
    fname = tmp_path / 'matrix.csv'
    fname.write_text(MATRIX_HEADER + rows, encoding='utf-8')
    with pytest.raises(MatrixError, match=msg):
        load_matrix(fname)


def test_load_matrix_missing_column(tmp_path):
    fname = tmp_path / 'matrix.csv'
    fname.write_text('upstream,downstream\nmit,apache-2.0\n', encoding='utf-8')
    with pytest.raises(MatrixError, match='missing column'):
        load_matrix(fname)


def test_default_matrix():
    matrix = load_matrix()
    assert matrix[('gpl-3.0-only', 'mit')].verdict == INCOMPATIBLE
    assert matrix[('mit', 'apache-2.0')].verdict == COMPATIBLE
    assert all(matrix.provenance.values())


@pytest.mark.parametrize(
    'repo,token',
    [
        ('acme/bert-demo', 'mit'),
        ('beta/sentiment-pipeline', 'gpl-3.0-only'),
        ('eta/diffusion', 'apache-2.0'),
        ('iota/hub', 'multiple'),
        ('lambda/no-python', 'no-license'),
    ]
)
def test_detect_repo_license(corpus_path, repo, token):
    assert detect_repo_license(corpus_path / repo).spdx_like == token


def test_detect_repo_license_other(tmp_path):
    (tmp_path / 'License.md').write_text('All rights reserved.', encoding='utf-8')
    assert detect_repo_license(tmp_path).spdx_like == 'other'

    with pytest.raises(ValueError):
        detect_repo_license(tmp_path / 'License.md')


def test_license_flows(flow_store):
    table = license_flows(flow_store)
    assert table.pairs == 8
    assert table.summary == dict(
        pairs=8, identical=0.25, incompatible=0.125, unanalyzed=0.5, no_license_downstream=0.25)
    assert [attr_tuple(row) for row in table.rows] == [
        ('apache-2.0', 'apache-2.0', 1, COMPATIBLE),
        ('apache-2.0', 'no-license', 1, UNANALYZED),
        ('creativeml-openrail-m', 'mit', 1, UNANALYZED),
        ('gpl-3.0-only', 'mit', 1, INCOMPATIBLE),
        ('mit', 'apache-2.0', 1, COMPATIBLE),
        ('mit', 'mit', 1, COMPATIBLE),
        ('mit', 'multiple', 1, UNANALYZED),
        ('mit', 'no-license', 1, UNANALYZED),
    ]


def test_license_flows_composition(store):
    store.add_ptms([
        PtmPackage(HUGGINGFACE, 'p-mit', license_raw='MIT'),
        PtmPackage(HUGGINGFACE, 'p-mit2', license_raw='mit'),
        PtmPackage(HUGGINGFACE, 'p-apache', license_raw='apache-2.0'),
        PtmPackage(HUGGINGFACE, 'p-gpl', license_raw='GPL-3.0'),
    ])
    store.add_repositories([
        Repository('r/mit', license_raw='MIT License'),
        Repository('r/gpl', license_raw='GPL-3.0'),
        Repository('r/none', license_detected='no-license'),
        Repository('r/none2', license_detected='no-license'),
    ])
    store.add_links([
        PtmAppLink('github:' + repo, 'HuggingFace:' + ptm, ['app.py:1:x'], EXACT)
        for ptm, repo in [
            ('p-mit', 'r/mit'),
            ('p-mit2', 'r/mit'),
            ('p-gpl', 'r/mit'),
            ('p-mit', 'r/none'),
            ('p-mit2', 'r/none2'),
            ('p-apache', 'r/none'),
            ('p-gpl', 'r/none2'),
            ('p-apache', 'r/gpl'),
        ]])
    table = license_flows(store)
    assert table.summary == dict(
        pairs=8, identical=0.25, incompatible=0.125, unanalyzed=0.5, no_license_downstream=0.5)
    assert [attr_tuple(row) for row in table.rows] == [
        ('mit', 'mit', 2, COMPATIBLE),
        ('mit', 'no-license', 2, UNANALYZED),
        ('apache-2.0', 'gpl-3.0-only', 1, COMPATIBLE),
        ('apache-2.0', 'no-license', 1, UNANALYZED),
        ('gpl-3.0-only', 'mit', 1, INCOMPATIBLE),
        ('gpl-3.0-only', 'no-license', 1, UNANALYZED),
    ]


def attr_tuple(row):
    return (row.ptm_license, row.repo_license, row.pair_count, row.verdict)


def test_license_flows_empty(store):
    table = license_flows(store)
    assert table.pairs == 0
    assert table.summary['identical'] is None


def test_write_flows(flow_store, tmp_path):
    table = license_flows(flow_store)
    csv = write_flows_csv(table, tmp_path / 'flows.csv')
    lines = csv.read_text(encoding='utf-8').splitlines()
    assert lines[0] == 'ptm_license,repo_license,pair_count,verdict'
    assert len(lines) == 9

    doc = json.loads(write_sankey(table, tmp_path / 'flows.json').read_text(encoding='utf-8'))
    assert sum(li['value'] for li in doc['links']) == 8
    names = [n['name'] for n in doc['nodes']]
    assert len(names) == len(set(names))
    assert names[doc['links'][3]['source']] == 'ptm:gpl-3.0-only'
    assert names[doc['links'][3]['target']] == 'repo:mit'
    assert doc['summary']['incompatible'] == 0.125


def test_license_flows_corpus(store, corpus_path, corpus_labels, registry_snapshot, sigset):
    ingest_registry_snapshot(store, registry_snapshot)
    scan_corpus(store, discover_repositories(corpus_path), sigset)
    link(store)
    table = license_flows(store)
    assert {
        k: getattr(table, k) for k in corpus_labels['licenses']} == corpus_labels['licenses']
