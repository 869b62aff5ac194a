"""
Extracted model card metadata and validation of model responses against the metadata schema.

Responses are JSON objects. Before validation against `data/metadata_schema.json`, values are
coerced leniently: empty strings become absent values, numbers in text fields become strings,
numeric strings (with optional K/M/B/T suffix) in integer fields become integers.
"""
import re
import json
import typing
import decimal
import pathlib
import functools
import collections

import attr
import jsonschema

from .. import config

__all__ = [
    'SCHEMA_PATH', 'Violation', 'Provenance', 'ExtractedMetadata', 'field_names', 'is_empty',
    'validate_schema']

SCHEMA_PATH = pathlib.Path(__file__).parent.parent / 'data' / 'metadata_schema.json'

MULTIPLIERS = {'k': 10 ** 3, 'm': 10 ** 6, 'b': 10 ** 9, 't': 10 ** 12}
# Counts are stored as SQLite integers.
MAX_COUNT = 2 ** 63 - 1
TOO_DEEP = 'response is nested too deeply'


@attr.s(frozen=True)
class Violation(object):
    field = attr.ib()
    message = attr.ib()

    def __str__(self):
        return '{0}: {1}'.format(self.field or '<response>', self.message)


@attr.s
class Provenance(object):
    pipeline_mode = attr.ib()
    client_id = attr.ib()
    timestamp = attr.ib()
    #: Field groups whose responses failed validation.
    for_review = attr.ib(default=attr.Factory(list))


def _list(v):
    return list(v or [])


@attr.s
class ExtractedMetadata(object):
    """
    Metadata of one PTM; every field may be empty.
    """
    domain = attr.ib(default=None)
    task = attr.ib(default=None)
    libraries = attr.ib(default=attr.Factory(list), converter=_list)
    framework = attr.ib(default=None)
    license = attr.ib(default=None)
    datasets = attr.ib(default=attr.Factory(list), converter=_list)
    base_model = attr.ib(default=None)
    hyperparameters = attr.ib(default=attr.Factory(dict), converter=lambda v: dict(v or {}))
    parameter_count = attr.ib(default=None)
    hardware = attr.ib(default=None)
    limitations_biases = attr.ib(default=None)
    evaluation = attr.ib(
        default=attr.Factory(list), converter=lambda v: [tuple(p) for p in (v or [])])
    carbon_emitted = attr.ib(default=None)
    languages = attr.ib(default=attr.Factory(list), converter=_list)
    grants = attr.ib(default=None)
    demo = attr.ib(default=None)
    github_repo = attr.ib(default=None)
    papers = attr.ib(default=attr.Factory(list), converter=_list)
    input_output_format = attr.ib(default=None)
    provenance = attr.ib(default=None)

    @parameter_count.validator
    def _check_parameter_count(self, attribute, value):
        if value is not None and value < 0:
            raise ValueError('parameter_count must be non-negative')

    @classmethod
    def from_dict(cls, d, provenance=None):
        return cls(provenance=provenance, **{k: v for k, v in d.items() if k in field_names()})

    def asdict(self) -> collections.OrderedDict:
        """The field values, without provenance, in schema order."""
        res = collections.OrderedDict()
        for name in field_names():
            v = getattr(self, name)
            if name == 'evaluation':
                v = [list(p) for p in v]
            res[name] = v
        return res

    def non_empty(self) -> typing.List[str]:
        return [name for name in field_names() if not is_empty(getattr(self, name))]

    def merge(self, other: 'ExtractedMetadata', fields=None) -> 'ExtractedMetadata':
        """Fill empty fields of `self` from `other`; existing values win."""
        for name in fields or field_names():
            if is_empty(getattr(self, name)) and not is_empty(getattr(other, name)):
                setattr(self, name, getattr(other, name))
        return self


@functools.lru_cache(maxsize=1)
def field_names() -> typing.Tuple[str, ...]:
    return tuple(config.load('metadata_fields'))


def is_empty(value) -> bool:
    if value is None:
        return True
    if isinstance(value, str):
        return not value.strip()
    if isinstance(value, (list, tuple, dict, set)):
        return not value
    return False


@functools.lru_cache(maxsize=1)
def load_schema() -> dict:
    return json.loads(SCHEMA_PATH.read_text(encoding='utf-8'))


def strip_code_fences(text: str) -> str:
    """
    >>> strip_code_fences('```json\\n{}\\n```')
    '{}'
    """
    text = (text or '').strip()
    m = re.fullmatch(r'```[\w-]*\s*\n?(?P<body>.*?)\n?```', text, flags=re.DOTALL)
    return m.group('body').strip() if m else text


def parse_count(value):
    """
    >>> parse_count('110M')
    110000000
    """
    if isinstance(value, bool):
        return value
    if isinstance(value, float) and value.is_integer() and abs(value) <= MAX_COUNT:
        return int(value)
    if not isinstance(value, str):
        return value
    m = re.fullmatch(
        r'\s*(?P<num>-?[0-9][0-9_,]*(?:\.[0-9]+)?)\s*(?P<unit>[kmbtKMBT])?\s*', value)
    if not m or len(m.group('num')) > 32:
        return value
    num = decimal.Decimal(m.group('num').replace(',', '').replace('_', ''))
    num = int(round(num * MULTIPLIERS.get((m.group('unit') or '').lower(), 1)))
    return num if abs(num) <= MAX_COUNT else value


def _text(v):
    if isinstance(v, (int, float)) and not isinstance(v, bool):
        return str(v)
    if isinstance(v, str):
        return v.strip() or None
    return v


def _domain(v):
    v = _text(v)
    if isinstance(v, str):
        for domain in config.load('domains').values():
            if v.lower() in {domain.id.lower(), domain.name.lower()}:
                return domain.id
    return v


def coerce(obj: dict) -> dict:
    kinds = {k: f.kind for k, f in config.load('metadata_fields').items()}
    res = collections.OrderedDict()
    for k, v in obj.items():
        kind = kinds.get(k)
        if kind == 'scalar':
            v = _domain(v) if k == 'domain' else _text(v)
        elif kind == 'integer':
            v = parse_count(_text(v))
        elif kind == 'list':
            if isinstance(v, str):
                v = [v]
            if isinstance(v, list):
                v = [_text(i) for i in v if not is_empty(_text(i))]
        elif kind == 'map':
            if isinstance(v, dict):
                v = collections.OrderedDict((str(kk), _text(vv)) for kk, vv in v.items())
        elif kind == 'pairs':
            if isinstance(v, dict):
                v = [[str(kk), _text(vv)] for kk, vv in v.items()]
            elif isinstance(v, list):
                v = [
                    [_text(i.get('metric')), _text(i.get('value'))] if isinstance(i, dict)
                    else [_text(j) for j in i] if isinstance(i, list) else i for i in v]
        res[k] = v
    return res


def _violation(error) -> typing.List[Violation]:
    if error.validator == 'additionalProperties' and not error.path:
        unknown = sorted(set(error.instance) - set(error.schema.get('properties', {})))
        return [Violation(name, 'unknown field "{0}"'.format(name)) for name in unknown]
    field = error.path[0] if error.path else None
    if error.validator == 'minimum' and field == 'parameter_count':
        return [Violation(field, 'non-negative required')]
    return [Violation(field, error.message)]


def _loads(body):
    """
    Parse a JSON response, falling back to the outermost braces for objects embedded in text.
    """
    try:
        return json.loads(body)
    except ValueError:
        start, end = body.find('{'), body.rfind('}')
        if 0 <= start < end:
            return json.loads(body[start:end + 1])
        raise


def validate_schema(text: str) -> typing.Union[ExtractedMetadata, typing.List[Violation]]:
    """
    Parse and validate a model response.

    :return: `ExtractedMetadata` (without provenance) or a non-empty list of violations.
    """
    try:
        obj = _loads(strip_code_fences(text))
    except ValueError:
        return [Violation(None, 'response is not valid JSON')]
    except RecursionError:
        return [Violation(None, TOO_DEEP)]
    if not isinstance(obj, dict):
        return [Violation(None, 'response is not a JSON object')]
    try:
        obj = coerce(obj)
        validator = jsonschema.Draft7Validator(load_schema())
        violations = []
        for error in sorted(validator.iter_errors(obj), key=lambda e: [str(p) for p in e.path]):
            violations.extend(_violation(error))
    except RecursionError:
        return [Violation(None, TOO_DEEP)]
    if violations:
        return violations
    return ExtractedMetadata.from_dict(obj)
