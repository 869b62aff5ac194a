"""
Corpus scanner: search-then-verify over local repository trees.

A cheap substring pre-filter selects candidate files, which are then parsed and analyzed with
:func:`ptmchain.analyzer.scan_file`. Disabling the pre-filter must never change the result, i.e.
the pre-filter only removes files which cannot contain a usage record.
"""
import os
import typing
import logging
import pathlib
import unicodedata
import concurrent.futures

import attr
from tqdm import tqdm

from .models import Repository, RepoScanResult, UsageRecord
from .signatures import SignatureSet, anchors_for
from .analyzer import MAX_FILE_SIZE, FileSkipped, scan_file
from .licenses import detect_repo_license

__all__ = [
    'DEFAULT_EXCLUDE_DIRS', 'ScanConfig', 'CorpusCounts', 'prefilter', 'scan_repo',
    'discover_repositories', 'scan_corpus']

DEFAULT_EXCLUDE_DIRS = ('venv', 'site-packages', 'node_modules')

log = logging.getLogger('ptmchain')


@attr.s(frozen=True)
class ScanConfig(object):
    #: Directory names to skip anywhere in the tree; hidden directories are always skipped.
    exclude_dirs = attr.ib(default=DEFAULT_EXCLUDE_DIRS, converter=frozenset)
    extensions = attr.ib(default=('.py',), converter=tuple)
    max_file_size = attr.ib(default=MAX_FILE_SIZE)
    use_prefilter = attr.ib(default=True)
    jobs = attr.ib(default=1)

    @jobs.validator
    def _check_jobs(self, attribute, value):
        if value < 1:
            raise ValueError('parallelism must be at least 1')

    def excluded(self, dirname: str) -> bool:
        return dirname.startswith('.') or dirname in self.exclude_dirs


@attr.s(frozen=True)
class CorpusCounts(object):
    repos_scanned = attr.ib(default=0)
    repos_with_records = attr.ib(default=0)
    total_records = attr.ib(default=0)
    failures = attr.ib(default=0)

    def __json__(self):
        return attr.asdict(self)


def prefilter(text: str, groups: typing.Iterable[typing.Iterable[str]]) -> bool:
    """
    Whether all anchors of some group occur in `text`.

    Anchors are identifiers; non-ASCII text is NFKC-normalized the way the parser normalizes
    identifiers.

    >>> groups = [['diffusers', 'from_pretrained']]
    >>> prefilter('from diffusers import X\\nX.from_pretrained (n)', groups)
    True
    >>> prefilter('from diffusers import X', groups)
    False
    """
    if not text:
        return False
    if not text.isascii():
        text = unicodedata.normalize('NFKC', text)
    return any(all(anchor in text for anchor in group) for group in groups)


def iter_source_files(root: pathlib.Path, config: ScanConfig):
    """
    Candidate source files below `root`, in sorted order.

    Symbolic links, to directories or files, are never followed.
    """
    for dirpath, dirnames, filenames in os.walk(str(root), followlinks=False):
        dirnames[:] = sorted(
            d for d in dirnames
            if not config.excluded(d) and not os.path.islink(os.path.join(dirpath, d)))
        for fname in sorted(filenames):
            p = pathlib.Path(dirpath) / fname
            if p.suffix in config.extensions and not p.is_symlink() and p.is_file():
                yield p


def scan_repo(root,
              sigset: SignatureSet,
              config: typing.Optional[ScanConfig] = None,
              repo_id: typing.Optional[str] = None) -> RepoScanResult:
    """
    Scan one repository tree.

    Record file paths are relative to `root`, in POSIX notation.

    :raises ValueError: if `root` is not a readable directory.
    """
    config = config or ScanConfig()
    root = pathlib.Path(root)
    if not root.is_dir() or not os.access(str(root), os.R_OK | os.X_OK):
        raise ValueError('repository root is not a readable directory: {0}'.format(root))
    groups = [g for gs in anchors_for(sigset).values() for g in gs]
    res = RepoScanResult(repo_id=repo_id or root.name)

    for path in iter_source_files(root, config):
        relpath = path.relative_to(root).as_posix()
        res.files_seen += 1
        try:
            if config.max_file_size and path.stat().st_size > config.max_file_size:
                raise FileSkipped(
                    relpath, 'file larger than {0} bytes'.format(config.max_file_size))
            try:
                text = path.read_text(encoding='utf-8')
            except UnicodeDecodeError:
                raise FileSkipped(relpath, 'not UTF-8 encoded')
            except OSError as e:
                raise FileSkipped(relpath, 'unreadable: {0}'.format(e.strerror or e))
            if config.use_prefilter and not prefilter(text, groups):
                log.debug('{0}: no anchors'.format(relpath))
                continue
            res.files_prefiltered += 1
            records = scan_file(relpath, text, sigset, max_size=config.max_file_size)
        except FileSkipped as e:
            log.warning(str(e))
            res.skipped.append((relpath, e.reason))
            continue
        res.files_parsed += 1
        res.records.extend(records)

    res.records.sort(key=UsageRecord.sortkey)
    res.check()
    return res


def discover_repositories(corpus) -> typing.List[typing.Tuple[Repository, pathlib.Path]]:
    """
    Repositories laid out as `<corpus>/<owner>/<name>`, in sorted order.
    """
    corpus = pathlib.Path(corpus)
    if not corpus.is_dir():
        raise ValueError('corpus is not a directory: {0}'.format(corpus))
    res = []
    for owner in sorted(corpus.iterdir(), key=lambda p: p.name):
        if not owner.is_dir() or owner.name.startswith('.') or owner.is_symlink():
            continue
        for d in sorted(owner.iterdir(), key=lambda p: p.name):
            if d.is_dir() and not d.name.startswith('.') and not d.is_symlink():
                res.append((
                    Repository(full_name='{0}/{1}'.format(owner.name, d.name), host='local'),
                    d))
    return res


def _scan_one(repo_id, root, sigset, config):
    return scan_repo(root, sigset, config=config, repo_id=repo_id)


def scan_corpus(store,
                repos: typing.Iterable[typing.Tuple[Repository, pathlib.Path]],
                sigset: SignatureSet,
                parallelism: int = 1,
                config: typing.Optional[ScanConfig] = None) -> CorpusCounts:
    """
    Scan repositories concurrently and persist the results.

    Repositories are registered in the store first; rows from a repository snapshot with the
    same `full_name` are reused. Per-repository failures are logged and counted.
    """
    config = attr.evolve(config or ScanConfig(), jobs=parallelism)
    targets, failures = [], 0
    for repo, root in repos:
        try:
            repo.license_detected = detect_repo_license(root).spdx_like
        except Exception as e:  # noqa: E722
            failures += 1
            log.warning('{0}: license detection failed: {1}'.format(repo.full_name, e))
            continue
        targets.append((store.register_repository(repo), pathlib.Path(root)))
    targets.sort(key=lambda t: t[0])

    results = []
    with concurrent.futures.ThreadPoolExecutor(max_workers=config.jobs) as executor:
        futures = {
            executor.submit(_scan_one, repo_id, root, sigset, config): repo_id
            for repo_id, root in targets}
        for future in tqdm(
                concurrent.futures.as_completed(futures),
                total=len(futures),
                desc='scanning',
                disable=len(futures) < 2):
            repo_id = futures[future]
            try:
                results.append(future.result())
            except Exception as e:  # noqa: E722
                failures += 1
                log.warning('{0}: scan failed: {1}'.format(repo_id, e))

    results.sort(key=lambda r: r.repo_id)
    store.save_scan_results(results)
    counts = CorpusCounts(
        repos_scanned=len(results),
        repos_with_records=sum(1 for r in results if r.records),
        total_records=sum(len(r.records) for r in results),
        failures=failures)
    log.info('scanned {0.repos_scanned} repositories, {0.total_records} usage records'.format(
        counts))
    return counts
