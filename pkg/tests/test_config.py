import pytest

from ptmchain.config import *


def test_load():
    licenses = load('licenses')
    assert licenses['mit'].category == 'Permissive'
    assert licenses.mit.title == 'MIT License'
    assert 'expat' in licenses['mit'].aliases
    with pytest.raises(AttributeError):
        _ = licenses.xyz

    with pytest.raises(ValueError):
        load('glossary')


def test_domains():
    domains = load('domains')
    assert list(domains) == ['NLP', 'CV', 'Audio', 'Multimodal', 'Other']
    assert domains['NLP'] < domains['CV']
    assert domains.get('Computer Vision') == domains['CV']
    assert domains.get(domains['Audio']).id == 'Audio'
    assert domains.get('Robotics') is None
    assert 'fill-mask' in domains['NLP'].tags


def test_metadata_fields():
    fields = load('metadata_fields')
    assert list(fields)[:3] == ['domain', 'task', 'libraries']
    assert len(fields) == 19
    assert all(f.kind in FIELD_KINDS and f.description for f in fields.values())


def test_field_groups():
    groups = load('field_groups')
    assert list(groups)[0] == 'classification'
    fields = [f for g in groups.values() for f in g.fields]
    # Each metadata field is requested in exactly one group:
    assert sorted(fields) == sorted(load('metadata_fields'))
    assert all(g.query for g in groups.values())
