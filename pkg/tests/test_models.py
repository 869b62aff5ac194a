import pytest

from ptmchain.models import *


def test_utc_timestamp():
    assert utc_timestamp(None) is None
    assert utc_timestamp('2022-07-11T14:19:02+02:00') == '2022-07-11T12:19:02Z'
    assert utc_timestamp('2022-07-11') == '2022-07-11T00:00:00Z'


def test_PtmPackage():
    ptm = PtmPackage(registry=HUGGINGFACE, name='gpt2', tags='text-generation')
    assert ptm.id == 'HuggingFace:gpt2'
    assert ptm.tags == ['text-generation']

    with pytest.raises(ValueError):
        PtmPackage(registry='ModelZoo', name='gpt2')

    with pytest.raises(ValueError):
        PtmPackage(registry=HUGGINGFACE, name='')

    with pytest.raises(ValueError):
        PtmPackage(registry=HUGGINGFACE, name='gpt2', downloads=-1)


def test_Repository():
    assert Repository(full_name='acme/app').id == 'github:acme/app'
    with pytest.raises(ValueError):
        Repository(full_name='acme')
    with pytest.raises(ValueError):
        Repository(full_name='acme/app/sub')


def test_PtmPtmLink():
    with pytest.raises(ValueError):
        PtmPtmLink(child_ptm_id='a', base_model_name='a', resolved_base_id='a')
    with pytest.raises(ValueError):
        PtmPtmLink(child_ptm_id='a', base_model_name='')


def test_UsageRecord():
    rec = UsageRecord('app.py', 3, 'spacy.import.load', ResolvedName('en_core_web_sm'), 'spacy')
    assert rec.id == 'app.py:3:spacy.import.load'
    assert not rec.is_dynamic
    assert UsageRecord('app.py', 4, 'spacy.import.load', DYNAMIC, 'spacy').is_dynamic
    assert str(DYNAMIC) == '<dynamic>'

    with pytest.raises(TypeError):
        UsageRecord('app.py', 3, 'spacy.import.load', 'en_core_web_sm', 'spacy')


def test_RepoScanResult_check():
    res = RepoScanResult('r', files_seen=1, files_prefiltered=2)
    with pytest.raises(AssertionError):
        res.check()
