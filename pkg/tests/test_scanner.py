import os

import pytest

from ptmchain.models import DYNAMIC
from ptmchain.scanner import *
from ptmchain.signatures import anchors_for

INJECTED = '\n# from transformers import AutoModel\n# AutoModel.from_pretrained("gpt2")\n' \
           '"""import spacy\nspacy.load("en_core_web_sm")"""\n'


def _records(result):
    return [
        (r.file, r.line, r.signature_id, None if r.model_name == DYNAMIC else r.model_name.text)
        for r in result.records]


def _scan_all(corpus, sigset, **kw):
    return {
        repo.full_name: scan_repo(root, sigset, config=ScanConfig(**kw), repo_id=repo.id)
        for repo, root in discover_repositories(corpus)}


def test_prefilter():
    groups = [['spacy', 'load']]
    assert prefilter('import spacy\nspacy.load("x")', groups)
    assert not prefilter('import spacy', groups)
    assert not prefilter('', groups)
    assert not prefilter('import spacy\nspacy.load("x")', [])
    # Identifiers are NFKC-normalized by the parser.
    assert prefilter('import ｓpacy\nｓpacy.load("x")', groups)


@pytest.mark.parametrize(
    'source',
    [
        'import os, transformers\ntransformers.AutoModel.from_pretrained("gpt2")\n',
        'from transformers import AutoModel\nAutoModel.from_pretrained ("gpt2")\n',
        'from  transformers import AutoModel\nAutoModel.from_pretrained("gpt2")\n',
        'from transformers import (\n    AutoModel as M)\nM.from_pretrained(\n    "gpt2")\n',
        'import ｔransformers\nｔransformers.AutoModel.from_pretrained("gpt2")\n',
    ]
)
def test_prefilter_keeps_every_layout(tmp_path, sigset, source):
    from ptmchain.analyzer import scan_file

    records = scan_file('app.py', source, sigset)
    assert [r.model_name.text for r in records] == ['gpt2']
    assert prefilter(source, [g for gs in anchors_for(sigset).values() for g in gs])

    (tmp_path / 'app.py').write_text(source, encoding='utf-8')
    assert scan_repo(tmp_path, sigset).records == \
        scan_repo(tmp_path, sigset, config=ScanConfig(use_prefilter=False)).records


def test_ScanConfig():
    config = ScanConfig()
    assert config.excluded('.git')
    assert config.excluded('venv')
    assert not config.excluded('src')
    with pytest.raises(ValueError):
        ScanConfig(jobs=0)


def test_discover_repositories(corpus_path, corpus_labels):
    repos = discover_repositories(corpus_path)
    assert [r.full_name for r, _ in repos] == sorted(corpus_labels['repositories'])
    assert repos[0][0].id == 'local:acme/bert-demo'

    with pytest.raises(ValueError):
        discover_repositories(corpus_path / 'acme' / 'bert-demo' / 'app.py')


def test_scan_repo_matches_labels(corpus_path, corpus_labels, sigset):
    results = _scan_all(corpus_path, sigset)
    for name, labels in corpus_labels['repositories'].items():
        expected = [
            (r['file'], r['line'], r['signature_id'], r['model_name']) for r in labels['records']]
        assert _records(results[name]) == expected, name
        assert [p for p, _ in results[name].skipped] == labels['skipped'], name


def test_scan_repo_funnel(corpus_path, sigset):
    res = scan_repo(corpus_path / 'kappa' / 'vendored', sigset)
    # venv/ and hidden directories are never visited:
    assert res.files_seen == 2
    skipped = dict(res.skipped)
    assert skipped['legacy.py'] == 'not UTF-8 encoded'
    assert skipped['broken.py'].startswith('syntax error')
    assert res.repo_id == 'vendored'

    res = scan_repo(corpus_path / 'gamma' / 'commented', sigset)
    assert (res.files_seen, res.files_prefiltered, res.files_parsed) == (1, 1, 1)
    assert not res.records


def test_scan_repo_prefilter_is_safe(corpus_path, sigset):
    with_prefilter = _scan_all(corpus_path, sigset)
    without = _scan_all(corpus_path, sigset, use_prefilter=False)
    assert {k: _records(v) for k, v in with_prefilter.items()} == \
        {k: _records(v) for k, v in without.items()}


def test_scan_repo_ignores_injected_comments(corpus_copy, corpus_path, sigset):
    for dirpath, _, filenames in os.walk(str(corpus_copy)):
        for fname in filenames:
            if fname.endswith('.py'):
                with open(os.path.join(dirpath, fname), 'ab') as fp:
                    fp.write(INJECTED.encode('utf-8'))

    original = _scan_all(corpus_path, sigset)
    mutated = _scan_all(corpus_copy, sigset)
    for name, res in original.items():
        assert _records(mutated[name]) == _records(res), name
        assert mutated[name].skipped == res.skipped


def test_scan_repo_size_limit(corpus_path, sigset):
    res = scan_repo(corpus_path / 'acme' / 'bert-demo', sigset, config=ScanConfig(max_file_size=10))
    assert not res.records
    assert res.skipped == [('app.py', 'file larger than 10 bytes')]


@pytest.mark.skipif(not hasattr(os, 'symlink'), reason='no symlinks')
def test_scan_repo_symlinks(tmp_path, corpus_path, sigset):
    repo = tmp_path / 'repo'
    repo.mkdir()
    try:
        os.symlink(str(corpus_path / 'acme' / 'bert-demo' / 'app.py'), str(repo / 'app.py'))
        os.symlink(str(corpus_path / 'acme' / 'bert-demo'), str(repo / 'linked'))
    except OSError:  # pragma: no cover
        pytest.skip('symlinks not supported')
    res = scan_repo(repo, sigset)
    assert res.files_seen == 0


def test_scan_repo_invalid(tmp_path, sigset):
    with pytest.raises(ValueError):
        scan_repo(tmp_path / 'missing', sigset)


def test_scan_corpus(store, corpus_path, corpus_labels, sigset):
    counts = scan_corpus(store, discover_repositories(corpus_path), sigset)
    expected = dict(corpus_labels['scan'])
    assert sum(len(r.skipped) for r in store.scan_results()) == expected.pop('skipped_files')
    assert counts.__json__() == expected

    licenses = {r.full_name: r.license_detected for r in store.repositories()}
    assert licenses == {k: v['license'] for k, v in corpus_labels['repositories'].items()}

    # Rescanning replaces the previous results.
    scan_corpus(store, discover_repositories(corpus_path), sigset)
    assert store.count('usage_record') == expected['total_records']


def test_scan_corpus_parallel(tmp_path, corpus_path, sigset):
    from ptmchain.store import open_store

    res = []
    for jobs in [1, 4]:
        store = open_store(tmp_path / 'jobs{0}.sqlite'.format(jobs))
        counts = scan_corpus(store, discover_repositories(corpus_path), sigset, parallelism=jobs)
        res.append((counts, [(r.repo_id, _records(r)) for r in store.scan_results()]))
    assert res[0] == res[1]


def test_scan_corpus_failure(mocker, store, corpus_path, sigset):
    orig = scan_repo

    def scan(root, sigset, config=None, repo_id=None):
        if repo_id == 'local:acme/bert-demo':
            raise ValueError('boom')
        return orig(root, sigset, config=config, repo_id=repo_id)

    mocker.patch('ptmchain.scanner.scan_repo', scan)
    counts = scan_corpus(store, discover_repositories(corpus_path), sigset)
    assert counts.failures == 1
    assert counts.repos_scanned == 11


def test_scan_corpus_license_detection_failure(mocker, store, corpus_path, sigset):
    from ptmchain.licenses import detect_repo_license

    def detect(root):
        if root.name == 'bert-demo':
            raise PermissionError('LICENSE')
        return detect_repo_license(root)

    mocker.patch('ptmchain.scanner.detect_repo_license', detect)
    counts = scan_corpus(store, discover_repositories(corpus_path), sigset)
    assert counts.failures == 1
    assert counts.repos_scanned == 11
    assert 'local:acme/bert-demo' not in [r.repo_id for r in store.scan_results()]
