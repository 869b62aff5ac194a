"""
Accuracy of extracted metadata against manually labeled ground truth.

A field is compared for a model if the ground truth lists it. Matching rules:

- scalars: equality after trimming, lowercasing and collapsing whitespace; absent equals empty,
- integers: numeric equality,
- lists: set equality of normalized items,
- maps and metric/value pairs: set equality of normalized (key, value) pairs.
"""
import re
import typing
import collections

import attr

from .. import config
from .schema import ExtractedMetadata, coerce

__all__ = ['Accuracy', 'normalize_value', 'evaluate_accuracy']


def _norm(s) -> str:
    return re.sub(r'\s+', ' ', str(s).strip().lower()) if s is not None else ''


def normalize_value(value, kind: str):
    """
    >>> normalize_value([' PyTorch', 'transformers '], 'list') == {'pytorch', 'transformers'}
    True
    """
    if kind == 'scalar':
        return _norm(value)
    if kind == 'integer':
        return value if isinstance(value, int) else (_norm(value) or None)
    if kind == 'list':
        return frozenset(_norm(v) for v in value or [] if _norm(v))
    if kind == 'map':
        return frozenset((_norm(k), _norm(v)) for k, v in (value or {}).items())
    return frozenset(tuple(_norm(i) for i in pair) for pair in value or [])


@attr.s
class Accuracy(object):
    matches = attr.ib(default=0)
    total = attr.ib(default=0)
    #: field name -> [matches, total]
    per_field = attr.ib(default=attr.Factory(collections.OrderedDict))

    @property
    def accuracy(self) -> float:
        return self.matches / self.total if self.total else 0.0

    def __json__(self):
        return collections.OrderedDict([
            ('accuracy', self.accuracy),
            ('matches', self.matches),
            ('total', self.total),
            ('per_field', collections.OrderedDict(
                (k, {'matches': m, 'total': t}) for k, (m, t) in self.per_field.items())),
        ])


def _as_dict(md) -> dict:
    if isinstance(md, ExtractedMetadata):
        return md.asdict()
    return coerce(md or {})


def evaluate_accuracy(extracted: typing.Dict[str, typing.Union[ExtractedMetadata, dict]],
                      truth: typing.Dict[str, dict],
                      fields: typing.Optional[typing.Iterable[str]] = None) -> Accuracy:
    """
    :param extracted: Extracted metadata keyed by PTM id.
    :param truth: Ground truth field values keyed by PTM id.
    :param fields: Restrict the comparison to these fields.
    :raises ValueError: if the PTM ids on both sides differ.
    """
    if set(extracted) != set(truth):
        raise ValueError('id mismatch: {0}'.format(
            sorted(set(extracted).symmetric_difference(truth))))
    kinds = {k: f.kind for k, f in config.load('metadata_fields').items()}
    fields = set(fields) if fields is not None else None
    res, per_field = Accuracy(), collections.defaultdict(lambda: [0, 0])
    for ptm_id in sorted(truth):
        got, expected = _as_dict(extracted[ptm_id]), coerce(truth[ptm_id])
        for name, value in expected.items():
            if name not in kinds:
                raise ValueError('unknown field in ground truth: {0}'.format(name))
            if fields is not None and name not in fields:
                continue
            match = normalize_value(got.get(name), kinds[name]) == \
                normalize_value(value, kinds[name])
            per_field[name][0] += int(match)
            per_field[name][1] += 1
            res.matches += int(match)
            res.total += 1
    res.per_field = collections.OrderedDict(
        (name, tuple(per_field[name])) for name in kinds if name in per_field)
    return res
