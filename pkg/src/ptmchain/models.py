"""
Domain objects shared by the analysis stages and the store.
"""
import re
import typing
import datetime

import attr
from dateutil import parser

__all__ = [
    'HUGGINGFACE', 'PYTORCHHUB', 'REGISTRIES',
    'EXACT', 'CASE_INSENSITIVE', 'UNMATCHED', 'MATCH_STRENGTHS',
    'PtmPackage', 'Repository', 'PtmAppLink', 'PtmPtmLink',
    'ResolvedName', 'Dynamic', 'DYNAMIC', 'UsageRecord', 'RepoScanResult',
    'utc_timestamp',
]

HUGGINGFACE = 'HuggingFace'
PYTORCHHUB = 'PyTorchHub'
REGISTRIES = (HUGGINGFACE, PYTORCHHUB)

EXACT = 'Exact'
CASE_INSENSITIVE = 'CaseInsensitive'
UNMATCHED = 'Unmatched'
MATCH_STRENGTHS = (EXACT, CASE_INSENSITIVE)


def utc_timestamp(value) -> typing.Optional[str]:
    """
    Normalize a timestamp to the `YYYY-MM-DDTHH:MM:SSZ` form used in the store.

    >>> utc_timestamp('2023-01-05T10:00:00+02:00')
    '2023-01-05T08:00:00Z'
    """
    if value is None or value == '':
        return None
    if not isinstance(value, datetime.datetime):
        value = parser.isoparse(str(value))
    if value.tzinfo is None:
        value = value.replace(tzinfo=datetime.timezone.utc)
    return value.astimezone(datetime.timezone.utc).strftime('%Y-%m-%dT%H:%M:%SZ')


def _non_negative(instance, attribute, value):
    if value < 0:
        raise ValueError('{0} must be non-negative: {1}'.format(attribute.name, value))


def _non_empty(instance, attribute, value):
    if not value:
        raise ValueError('{0} must not be empty'.format(attribute.name))


def _tags(value):
    if value is None:
        return []
    if isinstance(value, str):
        return [value]
    return [str(v) for v in value]


@attr.s
class PtmPackage(object):
    """
    A pre-trained model package as listed in a model registry.
    """
    registry = attr.ib(validator=attr.validators.in_(REGISTRIES))
    name = attr.ib(validator=_non_empty)
    id = attr.ib(default=None)
    downloads = attr.ib(default=0, converter=int, validator=_non_negative)
    license_raw = attr.ib(default=None)
    tags = attr.ib(default=attr.Factory(list), converter=_tags)
    card = attr.ib(default=None)
    created_at = attr.ib(default=None, converter=utc_timestamp)
    snapshot_ref = attr.ib(default=None)
    #: Snapshot fields outside the schema, in input order.
    extra = attr.ib(default=attr.Factory(dict))

    def __attrs_post_init__(self):
        if self.id is None:
            self.id = '{0}:{1}'.format(self.registry, self.name)


@attr.s
class Repository(object):
    """
    An application repository, i.e. a potential downstream user of PTMs.
    """
    full_name = attr.ib()
    host = attr.ib(default='github')
    id = attr.ib(default=None)
    stars = attr.ib(default=0, converter=int, validator=_non_negative)
    license_raw = attr.ib(default=None)
    scanned_commit = attr.ib(default=None)
    #: Normalized license token detected from the repository's license files.
    license_detected = attr.ib(default=None)
    extra = attr.ib(default=attr.Factory(dict))

    @full_name.validator
    def _check_full_name(self, attribute, value):
        if not re.fullmatch(r'[^/]+/[^/]+', value or ''):
            raise ValueError('full_name must look like "owner/name": {0!r}'.format(value))

    def __attrs_post_init__(self):
        if self.id is None:
            self.id = '{0}:{1}'.format(self.host, self.full_name)


@attr.s
class PtmAppLink(object):
    repo_id = attr.ib()
    ptm_id = attr.ib()
    evidence = attr.ib(converter=list, validator=_non_empty)
    match_strength = attr.ib(validator=attr.validators.in_(MATCH_STRENGTHS))


@attr.s
class PtmPtmLink(object):
    child_ptm_id = attr.ib()
    base_model_name = attr.ib(validator=_non_empty)
    resolved_base_id = attr.ib(default=None)

    @resolved_base_id.validator
    def _check_resolved(self, attribute, value):
        if value is not None and value == self.child_ptm_id:
            raise ValueError('a PTM cannot be its own base model: {0}'.format(value))


@attr.s(frozen=True, hash=True)
class ResolvedName(object):
    """A model name known statically at a call site."""
    text = attr.ib(validator=_non_empty)

    def __str__(self):
        return self.text


@attr.s(frozen=True, hash=True)
class Dynamic(object):
    """Marks a model name that cannot be determined statically."""

    def __str__(self):
        return '<dynamic>'


DYNAMIC = Dynamic()


@attr.s(frozen=True, hash=True)
class UsageRecord(object):
    """
    A confirmed PTM-loading call site.
    """
    file = attr.ib()
    line = attr.ib()
    signature_id = attr.ib()
    model_name = attr.ib(validator=attr.validators.instance_of((ResolvedName, Dynamic)))
    library = attr.ib()
    hub = attr.ib(default=HUGGINGFACE)

    @property
    def id(self) -> str:
        """Stable identifier, unique within a repository."""
        return '{0}:{1}:{2}'.format(self.file, self.line, self.signature_id)

    @property
    def is_dynamic(self) -> bool:
        return isinstance(self.model_name, Dynamic)

    def sortkey(self):
        return (self.file, self.line, self.signature_id)


@attr.s
class RepoScanResult(object):
    """
    Funnel counters and findings of scanning one repository.
    """
    repo_id = attr.ib()
    files_seen = attr.ib(default=0)
    files_prefiltered = attr.ib(default=0)
    files_parsed = attr.ib(default=0)
    records = attr.ib(default=attr.Factory(list))
    #: List of `(path, reason)` pairs.
    skipped = attr.ib(default=attr.Factory(list))

    def check(self):
        assert self.files_parsed <= self.files_prefiltered <= self.files_seen, self
        files = set(r.file for r in self.records)
        assert not files.intersection(p for p, _ in self.skipped), self
