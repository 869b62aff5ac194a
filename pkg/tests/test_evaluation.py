import pytest

from ptmchain.cards.schema import ExtractedMetadata
from ptmchain.cards.evaluation import *


def test_normalize_value():
    assert normalize_value('  Apache   License ', 'scalar') == 'apache license'
    assert normalize_value(None, 'scalar') == normalize_value('', 'scalar')
    assert normalize_value(None, 'list') == frozenset()
    assert normalize_value({'LR': ' 0.1'}, 'map') == frozenset([('lr', '0.1')])
    assert normalize_value([['F1', '0.5']], 'pairs') == frozenset([('f1', '0.5')])
    assert normalize_value(110, 'integer') == 110


def test_evaluate_accuracy():
    extracted = {
        'a': ExtractedMetadata(license='MIT', datasets=['Wikipedia', 'BookCorpus']),
        'b': {'license': '', 'parameter_count': '1.5B', 'task': 'ner'},
    }
    truth = {
        'a': {'license': 'mit', 'datasets': ['bookcorpus', 'wikipedia'], 'task': None},
        'b': {'license': None, 'parameter_count': 1500000000, 'task': 'summarization'},
    }
    res = evaluate_accuracy(extracted, truth)
    assert (res.matches, res.total) == (5, 6)
    assert res.accuracy == pytest.approx(5 / 6)
    assert res.per_field == {
        'task': (1, 2), 'license': (2, 2), 'datasets': (1, 1), 'parameter_count': (1, 1)}
    assert list(res.per_field) == ['task', 'license', 'datasets', 'parameter_count']
    assert res.__json__()['per_field']['task'] == {'matches': 1, 'total': 2}

    res = evaluate_accuracy(extracted, truth, fields=['task'])
    assert (res.matches, res.total) == (1, 2)


def test_evaluate_accuracy_empty():
    res = evaluate_accuracy({}, {})
    assert res.accuracy == 0.0
    assert res.__json__()['total'] == 0


def test_evaluate_accuracy_invalid():
    with pytest.raises(ValueError, match='id mismatch'):
        evaluate_accuracy({'a': {}}, {'b': {}})
    with pytest.raises(ValueError, match='unknown field'):
        evaluate_accuracy({'a': {}}, {'a': {'color': 'red'}})
