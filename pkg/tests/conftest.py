import json
import shutil
import pathlib

import pytest

from ptmchain.store import open_store, ingest_registry_snapshot
from ptmchain.signatures import default_catalog

TESTS_DIR = pathlib.Path(__file__).parent

# The corpus consists of application code, not of tests.
collect_ignore = ['fixtures']


@pytest.fixture(scope='session')
def fixtures_path():
    return TESTS_DIR / 'fixtures'


@pytest.fixture(scope='session')
def corpus_path(fixtures_path):
    return fixtures_path / 'corpus'


@pytest.fixture(scope='session')
def corpus_labels(fixtures_path):
    return json.loads((fixtures_path / 'corpus_labels.json').read_text(encoding='utf-8'))


@pytest.fixture(scope='session')
def registry_snapshot(fixtures_path):
    return fixtures_path / 'registry.jsonl'


@pytest.fixture(scope='session')
def repository_snapshot(fixtures_path):
    return fixtures_path / 'repositories.jsonl'


@pytest.fixture(scope='session')
def script_path(fixtures_path):
    return fixtures_path / 'extraction' / 'script.json'


@pytest.fixture(scope='session')
def truth_path(fixtures_path):
    return fixtures_path / 'extraction' / 'truth.json'


@pytest.fixture(scope='session')
def sigset():
    return default_catalog()


@pytest.fixture
def corpus_copy(tmp_path, corpus_path):
    """Corpus in an isolated directory, for tests modifying the repositories."""
    res = tmp_path / 'corpus'
    shutil.copytree(str(corpus_path), str(res))
    return res


@pytest.fixture
def store(tmp_path):
    return open_store(tmp_path / 'test.sqlite')


@pytest.fixture
def loaded_store(store, registry_snapshot):
    """Store with the PTM packages of the registry snapshot."""
    ingest_registry_snapshot(store, registry_snapshot)
    return store
