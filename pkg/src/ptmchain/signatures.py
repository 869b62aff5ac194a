"""
Catalog of PTM-loading signatures.

A signature combines an import of a hub-access library with a call into that library that
loads a PTM, e.g. `from transformers import AutoModel` + `AutoModel.from_pretrained(...)`.
The catalog is a versioned JSON file; see `docs/signatures.rst` for the format.
"""
import json
import typing
import pathlib
import functools
import collections

import attr

from .models import REGISTRIES

__all__ = [
    'IMPORT_FORMS', 'CatalogError', 'ModelArg', 'Signature', 'SignatureSet',
    'default_catalog', 'load_signatures', 'dump_signatures', 'anchors_for']

#: `import lib [as x]` and `from lib[.sub] import name [as x]`
IMPORT_FORMS = ('import', 'from')

DEFAULT_CATALOG = pathlib.Path(__file__).parent / 'data' / 'signatures.json'


class CatalogError(ValueError):
    pass


@attr.s(frozen=True)
class ModelArg(object):
    """
    The parameter of a loading call which receives the model name.

    A parameter may be passed by position, by keyword or both ways.
    """
    position = attr.ib(default=None)
    keyword = attr.ib(default=None)

    @classmethod
    def from_json(cls, d, sid='?'):
        if not isinstance(d, dict) or set(d) - {'position', 'keyword'}:
            raise CatalogError('malformed slot descriptor in signature {0}'.format(sid))
        pos, kw = d.get('position'), d.get('keyword')
        if pos is None and not kw:
            raise CatalogError('slot descriptor without position or keyword in {0}'.format(sid))
        if pos is not None and (isinstance(pos, bool) or not isinstance(pos, int) or pos < 0):
            raise CatalogError('invalid slot position in signature {0}'.format(sid))
        if kw is not None and not (isinstance(kw, str) and kw.isidentifier()):
            raise CatalogError('invalid slot keyword in signature {0}'.format(sid))
        return cls(position=pos, keyword=kw)

    def __json__(self):
        return dict(position=self.position, keyword=self.keyword)


@attr.s(frozen=True)
class Signature(object):
    """
    One PTM-loading pattern of a hub-access library.
    """
    id = attr.ib()
    library = attr.ib()
    hub = attr.ib(validator=attr.validators.in_(REGISTRIES))
    import_forms = attr.ib(converter=tuple)
    callee_path = attr.ib()
    model_arg = attr.ib(validator=attr.validators.instance_of(ModelArg))
    textual_anchors = attr.ib(converter=tuple)
    #: For constructors standing for one particular model (e.g. `torchvision.models.resnet18`).
    implied_model = attr.ib(default=None)
    #: Whether `implied_model` requires an explicit (non-None) value in the model slot.
    weights_required = attr.ib(default=False)

    @property
    def callee_fq(self) -> str:
        """Library-qualified callee path, i.e. what an alias-resolved call must look like."""
        return '{0}.{1}'.format(self.library, self.callee_path)

    def check(self):
        if not self.id:
            raise CatalogError('signature without id')
        if not self.library:
            raise CatalogError('signature {0} without library'.format(self.id))
        if not self.callee_path:
            raise CatalogError('empty callee_path in signature {0}'.format(self.id))
        if not self.import_forms or set(self.import_forms) - set(IMPORT_FORMS):
            raise CatalogError('invalid import_forms in signature {0}'.format(self.id))
        if not self.textual_anchors or not all(
                isinstance(a, str) and a for a in self.textual_anchors):
            raise CatalogError('empty anchors in signature {0}'.format(self.id))
        # Anchors must survive any spacing or import layout of a matching call.
        if not all(a.isidentifier() for a in self.textual_anchors):
            raise CatalogError('anchors must be identifiers in signature {0}'.format(self.id))

    @classmethod
    def from_json(cls, d):
        sid = d.get('id') if isinstance(d, dict) else None
        if not sid:
            raise CatalogError('signature without id: {0}'.format(d))
        try:
            res = cls(
                id=sid,
                library=d.get('library'),
                hub=d.get('hub'),
                import_forms=d.get('import_forms') or [],
                callee_path=d.get('callee_path'),
                model_arg=ModelArg.from_json(d.get('model_arg'), sid),
                textual_anchors=d.get('textual_anchors') or [],
                implied_model=d.get('implied_model'),
                weights_required=bool(d.get('weights_required', False)),
            )
        except (TypeError, ValueError) as e:
            if isinstance(e, CatalogError):
                raise
            raise CatalogError('invalid signature {0}: {1}'.format(sid, e))
        res.check()
        return res

    def __json__(self):
        res = collections.OrderedDict([
            ('id', self.id),
            ('library', self.library),
            ('hub', self.hub),
            ('import_forms', list(self.import_forms)),
            ('callee_path', self.callee_path),
            ('model_arg', self.model_arg.__json__()),
            ('textual_anchors', list(self.textual_anchors)),
        ])
        if self.implied_model:
            res['implied_model'] = self.implied_model
            res['weights_required'] = self.weights_required
        return res


@attr.s(frozen=True)
class SignatureSet(object):
    """
    Immutable, validated collection of signatures.
    """
    signatures = attr.ib(converter=tuple)
    version = attr.ib(default='')

    def __attrs_post_init__(self):
        if not self.signatures:
            raise CatalogError('no signatures')
        ids = collections.Counter(s.id for s in self.signatures)
        dupes = sorted(k for k, v in ids.items() if v > 1)
        if dupes:
            raise CatalogError('duplicate signature id: {0}'.format(', '.join(dupes)))

    def __len__(self):
        return len(self.signatures)

    def __iter__(self):
        return iter(self.signatures)

    def __getitem__(self, sid) -> Signature:
        return self.by_id[sid]

    @functools.cached_property
    def by_id(self) -> typing.Dict[str, Signature]:
        return {s.id: s for s in self.signatures}

    @functools.cached_property
    def by_callee(self) -> typing.Dict[str, typing.List[Signature]]:
        res = collections.defaultdict(list)
        for s in self.signatures:
            res[s.callee_fq].append(s)
        return dict(res)

    @property
    def libraries(self) -> typing.List[str]:
        return sorted(set(s.library for s in self.signatures))

    def matching(self, callee_fq: str, import_form: str) -> typing.List[Signature]:
        return sorted(
            (s for s in self.by_callee.get(callee_fq, []) if import_form in s.import_forms),
            key=lambda s: s.id)

    def __json__(self):
        return collections.OrderedDict([
            ('version', self.version),
            ('signatures', [s.__json__() for s in self.signatures]),
        ])


def load_signatures(path=None) -> SignatureSet:
    """
    Load and validate a signature catalog.

    :param path: Path to a JSON catalog; defaults to the catalog shipped with the package.
    :raises CatalogError: if the catalog is empty or contains an invalid signature.
    """
    path = pathlib.Path(path or DEFAULT_CATALOG)
    text = path.read_text(encoding='utf-8')
    if not text.strip():
        raise CatalogError('no signatures')
    try:
        d = json.loads(text)
    except ValueError as e:
        raise CatalogError('invalid catalog {0}: {1}'.format(path, e))
    if isinstance(d, list):
        d = {'signatures': d}
    if not isinstance(d, dict):
        raise CatalogError('invalid catalog {0}'.format(path))
    return SignatureSet(
        signatures=[Signature.from_json(s) for s in d.get('signatures') or []],
        version=str(d.get('version', '')))


def dump_signatures(sigset: SignatureSet, path):
    pathlib.Path(path).write_text(
        json.dumps(sigset.__json__(), indent=2, ensure_ascii=False) + '\n', encoding='utf-8')


@functools.lru_cache(maxsize=1)
def default_catalog() -> SignatureSet:
    return load_signatures(DEFAULT_CATALOG)


def anchors_for(sigset: SignatureSet) -> typing.Dict[str, typing.List[typing.Tuple[str, ...]]]:
    """
    Anchor groups per library; each group lists substrings which must all occur in a file.
    """
    res = collections.OrderedDict()
    for sig in sigset:
        res.setdefault(sig.library, []).append(tuple(sig.textual_anchors))
    return res
