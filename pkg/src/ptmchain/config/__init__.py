import pathlib
import functools
import collections

import attr
from clldutils.misc import nfilter
from clldutils.inifile import INI

__all__ = [
    'LICENSE_CATEGORIES', 'FIELD_KINDS',
    'LicenseInfo', 'Domain', 'MetadataField', 'FieldGroup', 'Config', 'load']

LICENSE_CATEGORIES = (
    'Permissive', 'WeakCopyleft', 'StrongCopyleft', 'Public', 'Rail', 'NoLicense', 'Multiple',
    'Other')

FIELD_KINDS = ('scalar', 'list', 'map', 'pairs', 'integer')


def _lines(s):
    return nfilter(line.strip() for line in (s or '').split('\n'))


class ConfigObject(object):
    """
    Factory to turn INI file sections into instances of `@attr.s` classes.
    """
    @classmethod
    def from_section(cls, cfg, section, fname):
        fields = set(f.name for f in attr.fields(cls))
        kw = {'id': section}
        kw.update(cfg[section].items())
        res = cls(**{k: v for k, v in kw.items() if k in fields})
        res._fname = fname
        return res


@attr.s
class LicenseInfo(ConfigObject):
    """
    Classification of a normalized license token.
    """
    id = attr.ib()  #: normalized, SPDX-like token
    category = attr.ib(validator=attr.validators.in_(LICENSE_CATEGORIES))
    title = attr.ib(default=None)
    #: Alternative spellings, normalized like the token.
    aliases = attr.ib(default=attr.Factory(list), converter=_lines)


@functools.total_ordering
@attr.s(eq=False)
class Domain(ConfigObject):
    """
    Problem domain of PTMs, e.g. NLP or CV.
    """
    # The attribute which is used for ordering objects of this type must come first:
    ordinal = attr.ib(converter=int)
    id = attr.ib()
    name = attr.ib()
    #: Registry pipeline/task tags mapping to this domain.
    tags = attr.ib(default=attr.Factory(list), converter=_lines)

    def __lt__(self, other):
        return self.ordinal < other.ordinal

    def __eq__(self, other):
        return isinstance(other, Domain) and self.ordinal == other.ordinal

    def __hash__(self):
        return hash(self.id)


@attr.s
class MetadataField(ConfigObject):
    """
    A field of extracted model card metadata.
    """
    ordinal = attr.ib(converter=int)  #:
    id = attr.ib()  #:
    kind = attr.ib(validator=attr.validators.in_(FIELD_KINDS))  #:
    description = attr.ib()  #: used in prompts


@attr.s
class FieldGroup(ConfigObject):
    """
    Fields requested together in one cheap-mode request.
    """
    ordinal = attr.ib(converter=int)
    id = attr.ib()
    fields = attr.ib(converter=_lines)
    #: Retrieval query for selecting relevant card chunks.
    query = attr.ib(default='')


def get_ini(fname, **kw):
    fname = pathlib.Path(fname)
    if not fname.exists():
        fname = pathlib.Path(__file__).parent / fname.name
    if not fname.exists():
        raise FileNotFoundError(str(fname))
    return INI.from_file(fname, **kw)


class Config(collections.OrderedDict):
    """
    More convenient access to objects stored as sections in INI files

    Objects are accessible as values of a `dict`, keyed by section name, and as attributes.
    """
    @classmethod
    def from_ini(cls, fname, object_class):
        ini = get_ini(fname)
        d = collections.OrderedDict()
        for sec in ini.sections():
            obj = object_class.from_section(ini, sec, fname)
            d[obj.id] = obj
        if 'ordinal' in attr.fields_dict(object_class):
            d = collections.OrderedDict(sorted(d.items(), key=lambda i: i[1].ordinal))
        return cls(d)

    def __getattr__(self, item):
        if item in self:
            return self[item]
        raise AttributeError(item)

    def get(self, item, default=None):
        if isinstance(item, str) and item in self:
            return self[item]
        if isinstance(item, ConfigObject) and getattr(item, 'id', None) in self:
            return self[item.id]
        for obj in self.values():
            if getattr(obj, 'name', None) == item:
                return obj
        return default


OBJECT_CLASSES = {
    'licenses': LicenseInfo,
    'domains': Domain,
    'metadata_fields': MetadataField,
    'field_groups': FieldGroup,
}


@functools.lru_cache(maxsize=None)
def load(name: str) -> Config:
    """
    Load one of the INI files shipped with ptmchain, e.g. `load('domains')`.
    """
    if name not in OBJECT_CLASSES:
        raise ValueError('unknown config: {0}'.format(name))
    return Config.from_ini(
        pathlib.Path(__file__).parent / '{0}.ini'.format(name), OBJECT_CLASSES[name])
