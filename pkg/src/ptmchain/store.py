"""
Persistent SQLite store for PTMs, repositories, usage records and dependency links.

The schema mirrors the PTM supply-chain layout: tables for PTM packages and application
repositories, scan results with usage records, PTM-application and PTM-PTM links and extracted
model card metadata. DDL is declared with SQLAlchemy and documented in `docs/store.rst`.
"""
import os
import re
import json
import typing
import logging
import pathlib
import operator
import functools
import threading
import contextlib

import attr
import sqlalchemy as sa
import sqlalchemy.orm
from sqlalchemy.dialects.sqlite import insert as sqlite_insert
from csvw import dsv

from .models import (
    REGISTRIES, MATCH_STRENGTHS, PtmPackage, Repository, PtmAppLink, PtmPtmLink, UsageRecord,
    RepoScanResult, ResolvedName, DYNAMIC,
)

__all__ = [
    'SCHEMA_VERSION', 'DB_NAME', 'StoreError', 'Store', 'Selector',
    'open_store', 'ingest_registry_snapshot', 'ingest_repository_snapshot', 'query',
    'export_table']

SCHEMA_VERSION = '1'

DB_NAME = 'ptmchain.sqlite'

ENCODING = 'utf-8'

SQLALCHEMY_FUTURE = True

log = logging.getLogger('ptmchain')

registry = sa.orm.registry()


class StoreError(ValueError):
    pass


@registry.mapped
class Meta:
    """Key-value store for bookkeeping, e.g. the schema version."""

    __tablename__ = 'meta'

    key = sa.Column(sa.Text, primary_key=True)

    value = sa.Column(sa.Text, nullable=False)


@registry.mapped
class PtmPackageRow:
    """A model as listed in a registry snapshot."""

    __tablename__ = 'ptm_package'

    id = sa.Column(sa.Text, sa.CheckConstraint("id != ''"), primary_key=True)

    registry = sa.Column(
        sa.Text,
        sa.CheckConstraint('registry IN ({0})'.format(', '.join(
            "'{0}'".format(r) for r in REGISTRIES))),
        nullable=False)

    name = sa.Column(sa.Text, sa.CheckConstraint("name != ''"), nullable=False)

    downloads = sa.Column(sa.Integer, sa.CheckConstraint('downloads >= 0'), nullable=False)

    license_raw = sa.Column(sa.Text)

    tags = sa.Column(sa.JSON, nullable=False)

    card = sa.Column(sa.Text)

    # UTC, YYYY-MM-DDTHH:MM:SSZ
    created_at = sa.Column(sa.Text)

    snapshot_ref = sa.Column(sa.Text)

    # snapshot fields outside the schema, in input order
    blob = sa.Column(sa.JSON, nullable=False)

    __table_args__ = (sa.UniqueConstraint(registry, name),)


@registry.mapped
class RepositoryRow:
    """An application repository."""

    __tablename__ = 'repository'

    id = sa.Column(sa.Text, sa.CheckConstraint("id != ''"), primary_key=True)

    host = sa.Column(sa.Text, sa.CheckConstraint("host != ''"), nullable=False)

    full_name = sa.Column(
        sa.Text,
        sa.CheckConstraint("full_name LIKE '%_/_%' AND full_name NOT LIKE '%/%/%'"),
        nullable=False)

    stars = sa.Column(sa.Integer, sa.CheckConstraint('stars >= 0'), nullable=False)

    license_raw = sa.Column(sa.Text)

    scanned_commit = sa.Column(sa.Text)

    license_detected = sa.Column(sa.Text)

    blob = sa.Column(sa.JSON, nullable=False)

    __table_args__ = (sa.UniqueConstraint(host, full_name),)


@registry.mapped
class ScanResultRow:
    """Funnel counters of the latest scan of a repository."""

    __tablename__ = 'scan_result'

    repo_id = sa.Column(sa.ForeignKey('repository.id'), primary_key=True)

    files_seen = sa.Column(sa.Integer, nullable=False)

    files_prefiltered = sa.Column(sa.Integer, nullable=False)

    files_parsed = sa.Column(sa.Integer, nullable=False)

    # list of [path, reason] pairs
    skipped = sa.Column(sa.JSON, nullable=False)

    __table_args__ = (
        sa.CheckConstraint('files_parsed <= files_prefiltered'),
        sa.CheckConstraint('files_prefiltered <= files_seen'),
        sa.CheckConstraint('files_parsed >= 0'),
    )


@registry.mapped
class UsageRecordRow:
    """A confirmed PTM-loading call site."""

    __tablename__ = 'usage_record'

    pk = sa.Column(sa.Integer, primary_key=True)

    repo_id = sa.Column(sa.ForeignKey('scan_result.repo_id'), nullable=False)

    file = sa.Column(sa.Text, sa.CheckConstraint("file != ''"), nullable=False)

    line = sa.Column(sa.Integer, sa.CheckConstraint('line >= 1'), nullable=False)

    signature_id = sa.Column(sa.Text, nullable=False)

    library = sa.Column(sa.Text, nullable=False)

    hub = sa.Column(sa.Text, nullable=False)

    # NULL marks a dynamic model name
    model_name = sa.Column(sa.Text, sa.CheckConstraint("trim(model_name) != ''"))


@registry.mapped
class PtmAppLinkRow:
    """Application repository statically loading a PTM."""

    __tablename__ = 'ptm_app_link'

    repo_id = sa.Column(sa.ForeignKey('repository.id'), primary_key=True)

    ptm_id = sa.Column(sa.ForeignKey('ptm_package.id'), primary_key=True)

    match_strength = sa.Column(
        sa.Text,
        sa.CheckConstraint('match_strength IN ({0})'.format(', '.join(
            "'{0}'".format(s) for s in MATCH_STRENGTHS))),
        nullable=False)

    # usage record ids
    evidence = sa.Column(sa.JSON, sa.CheckConstraint("evidence != '[]'"), nullable=False)


@registry.mapped
class UnmatchedNameRow:
    """Resolved model names without counterpart in the PTM index."""

    __tablename__ = 'unmatched_name'

    pk = sa.Column(sa.Integer, primary_key=True)

    repo_id = sa.Column(sa.ForeignKey('repository.id'), nullable=False)

    hub = sa.Column(sa.Text, nullable=False)

    name = sa.Column(sa.Text, sa.CheckConstraint("name != ''"), nullable=False)

    evidence = sa.Column(sa.JSON, nullable=False)

    __table_args__ = (sa.UniqueConstraint(repo_id, hub, name),)


@registry.mapped
class ExtractedMetadataRow:
    """Structured metadata extracted from a model card."""

    __tablename__ = 'extracted_metadata'

    ptm_id = sa.Column(sa.ForeignKey('ptm_package.id'), primary_key=True)

    data = sa.Column(sa.JSON, nullable=False)

    pipeline_mode = sa.Column(sa.Text, nullable=False)

    client_id = sa.Column(sa.Text, nullable=False)

    timestamp = sa.Column(sa.Text, nullable=False)

    for_review = sa.Column(sa.JSON, nullable=False)


@registry.mapped
class PtmPtmLinkRow:
    """A PTM derived from an upstream base model."""

    __tablename__ = 'ptm_ptm_link'

    pk = sa.Column(sa.Integer, primary_key=True)

    child_ptm_id = sa.Column(sa.ForeignKey('ptm_package.id'), nullable=False)

    base_model_name = sa.Column(
        sa.Text, sa.CheckConstraint("base_model_name != ''"), nullable=False)

    resolved_base_id = sa.Column(sa.ForeignKey('ptm_package.id'))

    __table_args__ = (
        sa.UniqueConstraint(child_ptm_id, base_model_name),
        sa.CheckConstraint('resolved_base_id IS NULL OR resolved_base_id != child_ptm_id'),
    )


TABLES = [
    'ptm_package', 'repository', 'scan_result', 'usage_record', 'ptm_app_link',
    'unmatched_name', 'extracted_metadata', 'ptm_ptm_link']


def _enable_foreign_keys(dbapi_connection, connection_record):
    cursor = dbapi_connection.cursor()
    cursor.execute('PRAGMA foreign_keys = ON')
    cursor.close()


class Connectable:
    """SQLite database."""

    def __init__(self, filepath, *, future: bool = SQLALCHEMY_FUTURE):
        self.filepath = pathlib.Path(filepath)
        self._engine = sa.create_engine(
            f'sqlite:///{self.filepath}',
            future=future,
            json_serializer=functools.partial(json.dumps, ensure_ascii=False))
        sa.event.listen(self._engine, 'connect', _enable_foreign_keys)

    def connect(self, *, pragma_bulk_insert: bool = False):
        """Connect to engine, optionally apply SQLite PRAGMAs, return conn."""
        conn = self._engine.connect()
        if pragma_bulk_insert:
            conn.execute(sa.text('PRAGMA synchronous = OFF'))
        return conn

    @contextlib.contextmanager
    def execute(self, statement, *, closing: bool = True):
        """Connect to engine, execute ``statement``, return ``CursorResult``, close."""
        with self.connect() as conn:
            result = conn.execute(statement)
            manager = contextlib.closing if closing else contextlib.nullcontext
            with manager(result) as result:
                yield result


class Store(Connectable):
    """
    Handle on a store file.

    Reads may happen concurrently; all mutations go through :meth:`writer`, which serializes
    them with a lock owned by the handle.
    """

    def __init__(self, filepath):
        super().__init__(filepath)
        self._write_lock = threading.RLock()

    def __repr__(self):
        return '<Store {0}>'.format(self.filepath)

    @contextlib.contextmanager
    def writer(self, **kw):
        """Connection for a write transaction, committed on successful exit."""
        with self._write_lock, self.connect(**kw) as conn:
            try:
                yield conn
                conn.commit()
            except sa.exc.IntegrityError as e:
                raise StoreError('integrity violation: {0}'.format(e.orig)) from e

    def create(self):
        with self.writer() as conn:
            registry.metadata.create_all(conn)
            version = conn.execute(
                sa.select(Meta.value).where(Meta.key == 'schema_version')).scalar()
            if version is None:
                conn.execute(sa.insert(Meta).values(key='schema_version', value=SCHEMA_VERSION))
            elif version != SCHEMA_VERSION:
                raise StoreError('schema version mismatch: store has {0}, expected {1}'.format(
                    version, SCHEMA_VERSION))
        return self

    @staticmethod
    def table(name: str) -> sa.Table:
        if name not in TABLES:
            raise StoreError('unknown table: {0}'.format(name))
        return registry.metadata.tables[name]

    def count(self, table: str) -> int:
        with self.execute(sa.select(sa.func.count()).select_from(self.table(table))) as res:
            return res.scalar()

    def counts(self) -> typing.Dict[str, int]:
        return {name: self.count(name) for name in TABLES}

    #
    # PTMs and repositories
    #
    def add_ptms(self, ptms: typing.Iterable[PtmPackage]) -> int:
        n = 0
        with self.writer(pragma_bulk_insert=True) as conn:
            for ptm in ptms:
                upsert_ptm(conn, ptm)
                n += 1
        return n

    def ptms(self, registry_name=None) -> typing.List[PtmPackage]:
        stmt = sa.select(PtmPackageRow.__table__).order_by(PtmPackageRow.id)
        if registry_name:
            stmt = stmt.where(PtmPackageRow.registry == registry_name)
        with self.execute(stmt) as res:
            return [_ptm_from_row(row) for row in res.mappings()]

    def add_repositories(self, repos: typing.Iterable[Repository]) -> int:
        n = 0
        with self.writer() as conn:
            for repo in repos:
                upsert_repository(conn, repo)
                n += 1
        return n

    def register_repository(self, repo: Repository) -> str:
        """
        Make sure a repository row exists, keeping metadata of a previously ingested row.

        :return: the id of the repository row.
        """
        with self.writer() as conn:
            existing = conn.execute(
                sa.select(RepositoryRow.id).where(RepositoryRow.id == repo.id)).scalar()
            if existing is None:
                existing = conn.execute(
                    sa.select(RepositoryRow.id)
                    .where(RepositoryRow.full_name == repo.full_name)
                    .order_by(RepositoryRow.id)).scalar()
            if existing is None:
                upsert_repository(conn, repo)
                existing = repo.id
            if repo.license_detected is not None:
                conn.execute(
                    sa.update(RepositoryRow)
                    .where(RepositoryRow.id == existing)
                    .values(license_detected=repo.license_detected))
        return existing

    def repositories(self) -> typing.List[Repository]:
        stmt = sa.select(RepositoryRow.__table__).order_by(RepositoryRow.id)
        with self.execute(stmt) as res:
            return [_repository_from_row(row) for row in res.mappings()]

    #
    # Scan results
    #
    def save_scan_results(self, results: typing.Iterable[RepoScanResult]):
        """Replace scan results and usage records of the scanned repositories."""
        with self.writer(pragma_bulk_insert=True) as conn:
            for result in sorted(results, key=operator.attrgetter('repo_id')):
                result.check()
                conn.execute(
                    sa.delete(UsageRecordRow).where(UsageRecordRow.repo_id == result.repo_id))
                conn.execute(
                    sa.delete(ScanResultRow).where(ScanResultRow.repo_id == result.repo_id))
                conn.execute(sa.insert(ScanResultRow).values(
                    repo_id=result.repo_id,
                    files_seen=result.files_seen,
                    files_prefiltered=result.files_prefiltered,
                    files_parsed=result.files_parsed,
                    skipped=[list(s) for s in result.skipped]))
                records = sorted(result.records, key=UsageRecord.sortkey)
                if records:
                    conn.execute(sa.insert(UsageRecordRow), [dict(
                        repo_id=result.repo_id,
                        file=r.file,
                        line=r.line,
                        signature_id=r.signature_id,
                        library=r.library,
                        hub=r.hub,
                        model_name=None if r.is_dynamic else r.model_name.text,
                    ) for r in records])

    def scan_results(self) -> typing.List[RepoScanResult]:
        with self.connect() as conn:
            records = {}
            stmt = sa.select(UsageRecordRow.__table__).order_by(
                UsageRecordRow.repo_id, UsageRecordRow.file, UsageRecordRow.line,
                UsageRecordRow.signature_id)
            for row in conn.execute(stmt).mappings():
                records.setdefault(row['repo_id'], []).append(UsageRecord(
                    file=row['file'],
                    line=row['line'],
                    signature_id=row['signature_id'],
                    model_name=ResolvedName(row['model_name'])
                    if row['model_name'] is not None else DYNAMIC,
                    library=row['library'],
                    hub=row['hub'],
                ))
            res = []
            stmt = sa.select(ScanResultRow.__table__).order_by(ScanResultRow.repo_id)
            for row in conn.execute(stmt).mappings():
                res.append(RepoScanResult(
                    repo_id=row['repo_id'],
                    files_seen=row['files_seen'],
                    files_prefiltered=row['files_prefiltered'],
                    files_parsed=row['files_parsed'],
                    records=records.get(row['repo_id'], []),
                    skipped=[tuple(s) for s in row['skipped']],
                ))
        return res

    #
    # Links
    #
    def replace_links(self,
                      repo_ids: typing.Iterable[str],
                      links: typing.Iterable[PtmAppLink],
                      unmatched: typing.Iterable[typing.Tuple[str, str, str, typing.List[str]]]):
        """
        Replace all PTM-application links and unmatched names of the given repositories.

        :param unmatched: `(repo_id, hub, name, evidence)` tuples.
        """
        repo_ids = sorted(set(repo_ids))
        with self.writer() as conn:
            conn.execute(sa.delete(PtmAppLinkRow).where(PtmAppLinkRow.repo_id.in_(repo_ids)))
            conn.execute(
                sa.delete(UnmatchedNameRow).where(UnmatchedNameRow.repo_id.in_(repo_ids)))
            for link in sorted(links, key=operator.attrgetter('repo_id', 'ptm_id')):
                conn.execute(sa.insert(PtmAppLinkRow).values(
                    repo_id=link.repo_id,
                    ptm_id=link.ptm_id,
                    match_strength=link.match_strength,
                    evidence=list(link.evidence)))
            for repo_id, hub, name, evidence in sorted(unmatched):
                conn.execute(sa.insert(UnmatchedNameRow).values(
                    repo_id=repo_id, hub=hub, name=name, evidence=list(evidence)))

    def add_links(self, links: typing.Iterable[PtmAppLink]):
        with self.writer() as conn:
            for link in links:
                conn.execute(sa.insert(PtmAppLinkRow).values(
                    repo_id=link.repo_id,
                    ptm_id=link.ptm_id,
                    match_strength=link.match_strength,
                    evidence=list(link.evidence)))

    def links(self) -> typing.List[PtmAppLink]:
        stmt = sa.select(PtmAppLinkRow.__table__).order_by(
            PtmAppLinkRow.repo_id, PtmAppLinkRow.ptm_id)
        with self.execute(stmt) as res:
            return [PtmAppLink(**row) for row in res.mappings()]

    #
    # Model card metadata
    #
    def save_metadata(self, ptm_id: str, data: dict, provenance: dict):
        with self.writer() as conn:
            conn.execute(
                sa.delete(ExtractedMetadataRow).where(ExtractedMetadataRow.ptm_id == ptm_id))
            conn.execute(sa.insert(ExtractedMetadataRow).values(
                ptm_id=ptm_id,
                data=data,
                pipeline_mode=provenance['pipeline_mode'],
                client_id=provenance['client_id'],
                timestamp=provenance['timestamp'],
                for_review=list(provenance.get('for_review') or [])))

    def metadata(self) -> typing.List[typing.Tuple[str, dict, dict]]:
        """
        :return: `(ptm_id, data, provenance)` triples, ordered by PTM id.
        """
        stmt = sa.select(ExtractedMetadataRow.__table__).order_by(ExtractedMetadataRow.ptm_id)
        with self.execute(stmt) as res:
            return [
                (row['ptm_id'],
                 row['data'],
                 {k: row[k] for k in ['pipeline_mode', 'client_id', 'timestamp', 'for_review']})
                for row in res.mappings()]

    def replace_ptm_links(self, links: typing.Iterable[PtmPtmLink]) -> int:
        n = 0
        with self.writer() as conn:
            conn.execute(sa.delete(PtmPtmLinkRow))
            for link in sorted(links, key=operator.attrgetter('child_ptm_id', 'base_model_name')):
                conn.execute(sa.insert(PtmPtmLinkRow).values(**attr.asdict(link)))
                n += 1
        return n

    def ptm_links(self) -> typing.List[PtmPtmLink]:
        stmt = sa.select(
            PtmPtmLinkRow.child_ptm_id, PtmPtmLinkRow.base_model_name,
            PtmPtmLinkRow.resolved_base_id,
        ).order_by(PtmPtmLinkRow.child_ptm_id, PtmPtmLinkRow.base_model_name)
        with self.execute(stmt) as res:
            return [PtmPtmLink(**row) for row in res.mappings()]


def upsert_ptm(conn, ptm: PtmPackage):
    values = dict(
        id=ptm.id,
        registry=ptm.registry,
        name=ptm.name,
        downloads=ptm.downloads,
        license_raw=ptm.license_raw,
        tags=list(ptm.tags),
        card=ptm.card,
        created_at=ptm.created_at,
        snapshot_ref=ptm.snapshot_ref,
        blob=dict(ptm.extra))
    stmt = sqlite_insert(PtmPackageRow).values(**values)
    conn.execute(stmt.on_conflict_do_update(
        index_elements=['registry', 'name'],
        set_={k: v for k, v in values.items() if k not in {'id', 'registry', 'name'}}))


def upsert_repository(conn, repo: Repository):
    values = dict(
        id=repo.id,
        host=repo.host,
        full_name=repo.full_name,
        stars=repo.stars,
        license_raw=repo.license_raw,
        scanned_commit=repo.scanned_commit,
        license_detected=repo.license_detected,
        blob=dict(repo.extra))
    stmt = sqlite_insert(RepositoryRow).values(**values)
    conn.execute(stmt.on_conflict_do_update(
        index_elements=['host', 'full_name'],
        set_={k: v for k, v in values.items() if k not in {'id', 'host', 'full_name'}}))


def _ptm_from_row(row) -> PtmPackage:
    return PtmPackage(
        id=row['id'],
        registry=row['registry'],
        name=row['name'],
        downloads=row['downloads'],
        license_raw=row['license_raw'],
        tags=row['tags'],
        card=row['card'],
        created_at=row['created_at'],
        snapshot_ref=row['snapshot_ref'],
        extra=row['blob'])


def _repository_from_row(row) -> Repository:
    return Repository(
        id=row['id'],
        host=row['host'],
        full_name=row['full_name'],
        stars=row['stars'],
        license_raw=row['license_raw'],
        scanned_commit=row['scanned_commit'],
        license_detected=row['license_detected'],
        extra=row['blob'])


def open_store(path) -> Store:
    """
    Open (and create if necessary) the store at `path`.

    :param path: Path of the database file or of an existing directory, in which case the \
    database file is `ptmchain.sqlite` in this directory.
    """
    path = pathlib.Path(path)
    if path.is_dir():
        path = path / DB_NAME
    if path.exists():
        if not os.access(str(path), os.R_OK | os.W_OK):
            raise StoreError('store is not writable: {0}'.format(path))
    elif not (path.parent.is_dir() and os.access(str(path.parent), os.W_OK)):
        raise StoreError('cannot create store at {0}'.format(path))
    return Store(path).create()


#
# Snapshot ingestion
#
PTM_FIELDS = [
    'id', 'registry', 'name', 'downloads', 'license', 'tags', 'card', 'created_at',
    'snapshot_ref']
REPOSITORY_FIELDS = [
    'id', 'host', 'full_name', 'stars', 'license', 'scanned_commit', 'license_detected']


def iter_snapshot(lines, errors=None):
    """
    Parse newline-delimited JSON objects.

    Malformed lines are logged, appended to `errors` as `(lineno, message)` and skipped.
    """
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
            if not isinstance(obj, dict):
                raise ValueError('not an object')
        except ValueError as e:
            _report(errors, lineno, 'invalid JSON: {0}'.format(e))
            continue
        yield lineno, obj


def _report(errors, lineno, msg):
    log.warning('snapshot line {0}: {1}'.format(lineno, msg))
    if errors is not None:
        errors.append((lineno, msg))


def _lines(snapshot):
    if isinstance(snapshot, (str, pathlib.Path)):
        with pathlib.Path(snapshot).open(encoding=ENCODING) as fp:
            yield from fp
    else:
        yield from snapshot


def _split_known(obj, fields):
    known = {k: obj[k] for k in fields if k in obj}
    extra = {k: v for k, v in obj.items() if k not in fields}
    if 'license' in known:
        known['license_raw'] = known.pop('license')
    return known, extra


def ptm_from_snapshot(obj: dict) -> PtmPackage:
    for key in ['name', 'registry']:
        if not obj.get(key):
            raise ValueError('missing "{0}"'.format(key))
    known, extra = _split_known(obj, PTM_FIELDS)
    return PtmPackage(extra=extra, **known)


def ptm_to_snapshot(ptm: PtmPackage) -> dict:
    res = dict(
        id=ptm.id,
        registry=ptm.registry,
        name=ptm.name,
        downloads=ptm.downloads,
        license=ptm.license_raw,
        tags=ptm.tags,
        card=ptm.card,
        created_at=ptm.created_at,
        snapshot_ref=ptm.snapshot_ref)
    res.update(ptm.extra)
    return res


def repository_from_snapshot(obj: dict) -> Repository:
    if not obj.get('full_name'):
        raise ValueError('missing "full_name"')
    known, extra = _split_known(obj, REPOSITORY_FIELDS)
    return Repository(extra=extra, **known)


def repository_to_snapshot(repo: Repository) -> dict:
    res = dict(
        id=repo.id,
        host=repo.host,
        full_name=repo.full_name,
        stars=repo.stars,
        license=repo.license_raw,
        scanned_commit=repo.scanned_commit,
        license_detected=repo.license_detected)
    res.update(repo.extra)
    return res


def _ingest(store, snapshot, factory, errors):
    objs = []
    for lineno, obj in iter_snapshot(_lines(snapshot), errors=errors):
        try:
            objs.append((lineno, factory(obj)))
        except (ValueError, TypeError) as e:
            _report(errors, lineno, str(e))
    loaded = 0
    with store.writer(pragma_bulk_insert=True) as conn:
        for lineno, obj in objs:
            if isinstance(obj, PtmPackage):
                table, key, upsert = PtmPackageRow, ('registry', 'name'), upsert_ptm
            else:
                table, key, upsert = RepositoryRow, ('host', 'full_name'), upsert_repository
            # An id may not be reused for a different natural key.
            row = conn.execute(
                sa.select(*[getattr(table, k) for k in key]).where(table.id == obj.id)).first()
            if row is not None and tuple(row) != tuple(getattr(obj, k) for k in key):
                _report(errors, lineno, 'id {0} already used for {1}'.format(obj.id, tuple(row)))
                continue
            upsert(conn, obj)
            loaded += 1
    return loaded


def ingest_registry_snapshot(store: Store, snapshot, errors=None) -> int:
    """
    Load PTM packages from a registry snapshot.

    :param snapshot: Path of a JSON lines file or iterable of lines.
    :param errors: Optional list to collect `(lineno, message)` pairs for skipped records.
    :return: Number of loaded records; records with an existing `(registry, name)` are updated.
    """
    return _ingest(store, snapshot, ptm_from_snapshot, errors)


def ingest_repository_snapshot(store: Store, snapshot, errors=None) -> int:
    return _ingest(store, snapshot, repository_from_snapshot, errors)


#
# Queries
#
OPERATORS = {
    '=': operator.eq,
    '!=': operator.ne,
    '<': operator.lt,
    '<=': operator.le,
    '>': operator.gt,
    '>=': operator.ge,
    'like': lambda col, v: col.like(v),
}


@attr.s
class Selector(object):
    """
    Table plus conjunctive predicate, optionally joined to a table referenced by foreign key.

    >>> Selector.from_string('ptm_package where downloads >= 50').where
    [('downloads', '>=', 50)]
    """
    table = attr.ib()
    where = attr.ib(default=attr.Factory(list))
    join = attr.ib(default=None)

    @classmethod
    def from_string(cls, s):
        m = re.fullmatch(
            r'\s*(?P<table>\w+)(\s+join\s+(?P<join>\w+))?(\s+where\s+(?P<where>.+))?\s*',
            s,
            flags=re.IGNORECASE)
        if not m:
            raise StoreError('invalid selector: {0}'.format(s))
        where = []
        if m.group('where'):
            for clause in re.split(r'\s+AND\s+', m.group('where').strip(), flags=re.IGNORECASE):
                cm = re.fullmatch(r'([\w.]+)\s*(<=|>=|!=|=|<|>|\s+like\s+)\s*(.+)', clause.strip())
                if not cm:
                    raise StoreError('invalid predicate: {0}'.format(clause))
                value = cm.group(3).strip()
                if re.fullmatch(r'-?[0-9]+', value):
                    value = int(value)
                elif value[:1] in '"\'' and value[-1:] == value[:1] and len(value) > 1:
                    value = value[1:-1]
                where.append((cm.group(1), cm.group(2).strip().lower(), value))
        return cls(table=m.group('table'), where=where, join=m.group('join'))


def _column(tables, name):
    if '.' in name:
        tname, _, cname = name.partition('.')
        candidates = [t for t in tables if t.name == tname]
    else:
        cname, candidates = name, tables[:1]
    for t in candidates:
        if cname in t.c:
            return t.c[cname]
    raise StoreError('unknown field: {0}'.format(name))


def query(store: Store, selector: typing.Union[Selector, str]) -> typing.List[dict]:
    """
    Select rows, ordered by primary key.

    Columns of a joined table are keyed as `<table>.<column>`.
    """
    if isinstance(selector, str):
        selector = Selector.from_string(selector)
    table = store.table(selector.table)
    tables, columns = [table], list(table.c)
    stmt_from = table
    if selector.join:
        other = store.table(selector.join)
        if not any(fk.column.table is other for fk in table.foreign_keys):
            raise StoreError('{0} does not reference {1}'.format(table.name, other.name))
        tables.append(other)
        columns.extend(c.label('{0}.{1}'.format(other.name, c.name)) for c in other.c)
        stmt_from = table.join(other)
    stmt = sa.select(*columns).select_from(stmt_from)
    for field, op, value in selector.where:
        if op not in OPERATORS:
            raise StoreError('unknown operator: {0}'.format(op))
        stmt = stmt.where(OPERATORS[op](_column(tables, field), value))
    stmt = stmt.order_by(*table.primary_key.columns)
    with store.execute(stmt) as res:
        return [dict(row) for row in res.mappings()]


#
# Export
#
EXPORT_FORMATS = ('jsonl', 'csv')


def _export_rows(store, table):
    if table == 'ptm_package':
        return [ptm_to_snapshot(p) for p in store.ptms()]
    if table == 'repository':
        return [repository_to_snapshot(r) for r in store.repositories()]
    return query(store, Selector(table))


def _csv_value(v):
    if isinstance(v, (list, dict)):
        return json.dumps(v, ensure_ascii=False)
    return v


def export_table(store: Store, table: str, outdir, fmt: str = 'jsonl') -> pathlib.Path:
    """
    Write the rows of `table` to `<outdir>/<table>.<fmt>`.

    PTM and repository JSON lines use the snapshot format, i.e. they can be re-ingested.
    The CSV export of PTM-application links lists `repo, ptm, strength, evidence_count`.
    """
    if fmt not in EXPORT_FORMATS:
        raise ValueError('unknown export format: {0}'.format(fmt))
    store.table(table)
    fname = pathlib.Path(outdir) / '{0}.{1}'.format(table, fmt)
    rows = _export_rows(store, table)
    if fmt == 'jsonl':
        with fname.open('w', encoding=ENCODING) as fp:
            for row in rows:
                fp.write(json.dumps(row, ensure_ascii=False) + '\n')
        return fname

    if table == 'ptm_app_link':
        header = ['repo', 'ptm', 'strength', 'evidence_count']
        rows = [[r['repo_id'], r['ptm_id'], r['match_strength'], len(r['evidence'])]
                for r in rows]
    else:
        header = [c.name for c in store.table(table).c]
        if table in {'ptm_package', 'repository'}:
            header = [c if c != 'license_raw' else 'license' for c in header if c != 'blob']
            header.append('blob')
            rows = [[_csv_value(r.get(h)) for h in header[:-1]]
                    + [_csv_value({k: v for k, v in r.items() if k not in header})]
                    for r in rows]
        else:
            rows = [[_csv_value(r[h]) for h in header] for r in rows]
    with dsv.UnicodeWriter(fname, encoding=ENCODING) as writer:
        writer.writerow(header)
        writer.writerows(rows)
    return fname
