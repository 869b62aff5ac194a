"""
License classification, repository license detection and PTM-to-application compatibility.

Compatibility is looked up in an editable matrix file, keyed by the (upstream, downstream)
pair of normalized license tokens. Pairs involving "no license", multiple licenses or
licenses outside the classification table are never assessed.
"""
import re
import typing
import logging
import pathlib
import functools
import collections

import attr
from csvw import dsv
from clldutils import jsonlib

from . import config
from .models import PtmAppLink

__all__ = [
    'COMPATIBLE', 'INCOMPATIBLE', 'UNANALYZED', 'UNASSESSED_CATEGORIES',
    'MatrixError', 'LicenseClass', 'CompatibilityVerdict', 'Matrix', 'FlowRow', 'FlowTable',
    'normalize_token', 'classify_license', 'detect_repo_license', 'load_matrix',
    'check_compatibility', 'license_flows', 'write_flows_csv', 'write_sankey']

COMPATIBLE = 'Compatible'
INCOMPATIBLE = 'Incompatible'
UNANALYZED = 'Unanalyzed'
VERDICTS = (COMPATIBLE, INCOMPATIBLE, UNANALYZED)

NO_LICENSE = 'no-license'
MULTIPLE = 'multiple'
OTHER = 'other'
UNASSESSED_CATEGORIES = ('NoLicense', 'Multiple', 'Other')

#: Root-level file names (compared case-insensitively) which may hold a license text.
LICENSE_FILES = ('license', 'license.txt', 'license.md', 'copying', 'copying.txt')

FINGERPRINT_THRESHOLD = 0.9

DATA = pathlib.Path(__file__).parent / 'data'

log = logging.getLogger('ptmchain')


class MatrixError(ValueError):
    pass


@attr.s(frozen=True)
class LicenseClass(object):
    spdx_like = attr.ib()
    category = attr.ib(validator=attr.validators.in_(config.LICENSE_CATEGORIES))

    @property
    def analyzed(self) -> bool:
        return self.category not in UNASSESSED_CATEGORIES

    def __str__(self):
        return self.spdx_like


@attr.s(frozen=True)
class CompatibilityVerdict(object):
    verdict = attr.ib(validator=attr.validators.in_(VERDICTS))
    reason = attr.ib(default='')

    @reason.validator
    def _check_reason(self, attribute, value):
        if self.verdict == INCOMPATIBLE and not value:
            raise ValueError('an incompatibility must name the violated provision')


def normalize_token(raw) -> str:
    """
    >>> normalize_token('  Apache 2.0 ')
    'apache-2.0'
    """
    return re.sub(r'\s+', '-', (raw or '').strip().lower())


@functools.lru_cache(maxsize=1)
def _lookup() -> typing.Dict[str, LicenseClass]:
    res = {}
    for lic in config.load('licenses').values():
        cls = LicenseClass(lic.id, lic.category)
        for token in [lic.id] + [normalize_token(a) for a in lic.aliases]:
            res[token] = cls
    return res


def classify_license(raw) -> LicenseClass:
    """
    Classify a license token, e.g. from registry tags or a repository snapshot.

    >>> classify_license('Apache-2.0')
    LicenseClass(spdx_like='apache-2.0', category='Permissive')
    >>> classify_license('').category
    'NoLicense'
    """
    token = normalize_token(raw)
    if not token:
        return _lookup()[NO_LICENSE]
    return _lookup().get(token) or LicenseClass(token, 'Other')


#
# Detection from license files
#
def _words(text) -> str:
    return ' '.join(re.findall(r'[a-z0-9]+', text.lower()))


@functools.lru_cache(maxsize=1)
def reference_phrases() -> typing.Dict[str, typing.List[str]]:
    """Distinctive phrases per license token, read from `data/licenses/<token>.txt`."""
    res = collections.OrderedDict()
    for p in sorted((DATA / 'licenses').glob('*.txt'), key=lambda p: p.name):
        phrases = [_words(line) for line in p.read_text(encoding='utf-8').splitlines()]
        res[p.stem] = [ph for ph in phrases if ph]
    return res


def fingerprint(text: str) -> typing.Optional[str]:
    """
    The license token whose reference phrases best cover `text`, if above the threshold.
    """
    words = ' {0} '.format(_words(text))
    best, best_key = None, None
    for token, phrases in reference_phrases().items():
        if not phrases:
            continue
        score = sum(1 for ph in phrases if ' {0} '.format(ph) in words) / len(phrases)
        key = (score, len(phrases))
        if score >= FINGERPRINT_THRESHOLD and (best_key is None or key > best_key):
            best, best_key = token, key
    return best


def detect_repo_license(root) -> LicenseClass:
    """
    Detect the license of a repository from root-level license files.

    :raises ValueError: if `root` is not a directory.
    """
    root = pathlib.Path(root)
    if not root.is_dir():
        raise ValueError('not a directory: {0}'.format(root))
    candidates = sorted(
        (p for p in root.iterdir() if p.is_file() and p.name.lower() in LICENSE_FILES),
        key=lambda p: p.name)
    if not candidates:
        return classify_license(None)
    found = set()
    for p in candidates:
        try:
            token = fingerprint(p.read_text(encoding='utf-8', errors='replace'))
        except OSError as e:  # pragma: no cover
            log.warning('{0}: {1}'.format(p, e))
            continue
        if token:
            found.add(token)
        else:
            log.debug('{0}: unrecognized license text'.format(p))
    if len(found) > 1:
        return classify_license(MULTIPLE)
    if found:
        return classify_license(found.pop())
    return classify_license(OTHER)


#
# Compatibility
#
class Matrix(collections.OrderedDict):
    """
    Map of (upstream, downstream) token pairs to verdicts.
    """
    provenance = {}

    @classmethod
    def from_file(cls, fname):
        res, provenance = cls(), {}
        for i, row in enumerate(dsv.reader(fname, dicts=True), start=2):
            try:
                up, down = classify_license(row['upstream']), classify_license(row['downstream'])
                verdict = row['verdict'].strip().capitalize()
                reason = (row.get('reason') or '').strip()
            except (KeyError, AttributeError):
                raise MatrixError('{0}:{1}: missing column'.format(fname, i))
            for lic in [up, down]:
                if not lic.analyzed:
                    raise MatrixError('{0}:{1}: license not analyzable: {2}'.format(
                        fname, i, lic.spdx_like))
            if verdict not in (COMPATIBLE, INCOMPATIBLE):
                raise MatrixError('{0}:{1}: unknown verdict: {2}'.format(fname, i, verdict))
            if not reason:
                raise MatrixError('{0}:{1}: missing reason'.format(fname, i))
            key = (up.spdx_like, down.spdx_like)
            if key in res:
                raise MatrixError('{0}:{1}: duplicate cell {2}'.format(fname, i, key))
            res[key] = CompatibilityVerdict(verdict, reason)
            provenance[key] = row.get('provenance') or ''
        res.provenance = provenance
        return res


def load_matrix(fname=None) -> Matrix:
    """
    :raises MatrixError: if the matrix file is malformed.
    """
    return Matrix.from_file(pathlib.Path(fname or DATA / 'license_matrix.csv'))


@functools.lru_cache(maxsize=1)
def default_matrix() -> Matrix:
    return load_matrix()


def check_compatibility(upstream: LicenseClass,
                        downstream: LicenseClass,
                        matrix: typing.Optional[Matrix] = None) -> CompatibilityVerdict:
    for lic, side in [(upstream, 'upstream'), (downstream, 'downstream')]:
        if not lic.analyzed:
            return CompatibilityVerdict(
                UNANALYZED, '{0} license not assessed: {1}'.format(side, lic.category))
    if upstream.spdx_like == downstream.spdx_like:
        return CompatibilityVerdict(COMPATIBLE, 'identical licenses')
    matrix = default_matrix() if matrix is None else matrix
    return matrix.get(
        (upstream.spdx_like, downstream.spdx_like),
        CompatibilityVerdict(UNANALYZED, 'pair not covered by the compatibility matrix'))


#
# Flows
#
@attr.s(frozen=True)
class FlowRow(object):
    ptm_license = attr.ib()
    repo_license = attr.ib()
    pair_count = attr.ib()
    verdict = attr.ib()


@attr.s
class FlowTable(object):
    rows = attr.ib(default=attr.Factory(list))
    #: Number of links with both licenses recorded.
    pairs = attr.ib(default=0)
    identical = attr.ib(default=0)
    incompatible = attr.ib(default=0)
    unanalyzed = attr.ib(default=0)
    no_license_downstream = attr.ib(default=0)

    def proportion(self, count) -> typing.Optional[float]:
        return count / self.pairs if self.pairs else None

    @property
    def summary(self) -> dict:
        res = collections.OrderedDict([('pairs', self.pairs)])
        for key in ['identical', 'incompatible', 'unanalyzed', 'no_license_downstream']:
            res[key] = self.proportion(getattr(self, key))
        return res


def repo_license(repo) -> typing.Optional[LicenseClass]:
    if repo.license_detected is not None:
        return classify_license(repo.license_detected)
    if repo.license_raw is not None:
        return classify_license(repo.license_raw)
    return None


def license_flows(store,
                  matrix: typing.Optional[Matrix] = None,
                  links: typing.Optional[typing.Iterable[PtmAppLink]] = None) -> FlowTable:
    """
    Aggregate PTM-application links by (PTM license, repository license) pair.
    """
    ptms = {p.id: p for p in store.ptms()}
    repos = {r.id: r for r in store.repositories()}
    counts, verdicts = collections.Counter(), {}
    res = FlowTable()
    for link in (store.links() if links is None else links):
        ptm, repo = ptms.get(link.ptm_id), repos.get(link.repo_id)
        if ptm is None or repo is None or ptm.license_raw is None:
            continue
        down = repo_license(repo)
        if down is None:
            continue
        up = classify_license(ptm.license_raw)
        verdict = check_compatibility(up, down, matrix)
        res.pairs += 1
        if up.analyzed and up.spdx_like == down.spdx_like:
            res.identical += 1
        if verdict.verdict == INCOMPATIBLE:
            res.incompatible += 1
        elif verdict.verdict == UNANALYZED:
            res.unanalyzed += 1
        if down.category == 'NoLicense':
            res.no_license_downstream += 1
        key = (up.spdx_like, down.spdx_like)
        counts[key] += 1
        verdicts[key] = verdict.verdict
    res.rows = [
        FlowRow(up, down, n, verdicts[(up, down)])
        for (up, down), n in sorted(counts.items(), key=lambda i: (-i[1], i[0]))]
    return res


def write_flows_csv(table: FlowTable, fname) -> pathlib.Path:
    fname = pathlib.Path(fname)
    with dsv.UnicodeWriter(fname) as writer:
        writer.writerow([f.name for f in attr.fields(FlowRow)])
        writer.writerows([attr.astuple(row) for row in table.rows])
    return fname


def sankey(table: FlowTable) -> dict:
    """
    Nodes/links document as consumed by common Sankey plotting tools.
    """
    nodes = []
    for row in table.rows:
        for name in ['ptm:' + row.ptm_license, 'repo:' + row.repo_license]:
            if name not in nodes:
                nodes.append(name)
    return collections.OrderedDict([
        ('nodes', [{'name': n} for n in nodes]),
        ('links', [
            collections.OrderedDict([
                ('source', nodes.index('ptm:' + row.ptm_license)),
                ('target', nodes.index('repo:' + row.repo_license)),
                ('value', row.pair_count),
                ('verdict', row.verdict)]) for row in table.rows]),
        ('summary', table.summary),
    ])


def write_sankey(table: FlowTable, fname) -> pathlib.Path:
    fname = pathlib.Path(fname)
    jsonlib.dump(sankey(table), fname, indent=2)
    return fname
