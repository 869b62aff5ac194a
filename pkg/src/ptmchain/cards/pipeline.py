"""
Model card metadata extraction pipelines.

- `cheap`: the card is split into chunks; for each field group, the most relevant chunks that
  fit into the token budget are sent along with a prompt requesting the group's fields.
- `accurate`: the whole card is sent in one request, if it fits into the (large) token limit,
  otherwise the cheap pipeline is used as fallback.
"""
import typing
import logging
import datetime
import concurrent.futures

import attr
from tqdm import tqdm

from .. import config
from ..models import PtmPackage, utc_timestamp
from .chunking import MIN_CHUNK_TOKENS, estimate_tokens, split_markdown
from .retrieval import Scorer, retrieve
from .prompts import assemble_prompt
from .clients import Client, ClientError
from .schema import ExtractedMetadata, Provenance, validate_schema

__all__ = [
    'CHEAP', 'ACCURATE', 'CHEAP_FALLBACK', 'DEFAULT_BUDGET', 'DEFAULT_LIMIT', 'PipelineError',
    'ExtractionCounts', 'extract_cheap', 'extract_accurate', 'extract_card', 'extract_all']

CHEAP = 'cheap'
ACCURATE = 'accurate'
CHEAP_FALLBACK = 'cheap-fallback'

DEFAULT_BUDGET = 4096
DEFAULT_LIMIT = 128000

log = logging.getLogger('ptmchain')


class PipelineError(RuntimeError):
    pass


def _now():
    return utc_timestamp(datetime.datetime.now(datetime.timezone.utc))


def _request(client: Client, prompt: str) -> str:
    attempts = max(client.max_retries, 0) + 1
    for attempt in range(1, attempts + 1):
        try:
            return client.complete(prompt)
        except ClientError as e:
            log.warning('{0}: attempt {1} of {2} failed: {3}'.format(
                client.id, attempt, attempts, e))
    raise PipelineError('{0}: no response after {1} attempts'.format(client.id, attempts))


def _normalized(card: typing.Optional[str]) -> str:
    return (card or '').replace('\r\n', '\n').replace('\r', '\n')


def extract_cheap(card: str,
                  client: Client,
                  budget: int = DEFAULT_BUDGET,
                  model_name: str = 'model',
                  tags: typing.Iterable[str] = (),
                  scorer: typing.Optional[Scorer] = None,
                  now: typing.Callable[[], str] = _now) -> ExtractedMetadata:
    """
    Extract metadata with one request per field group, each within `budget` estimated tokens.

    :raises PipelineError: if the prompt alone exceeds the budget or the client fails.
    """
    tags = list(tags)
    chunks = split_markdown(_normalized(card), max(MIN_CHUNK_TOKENS, budget // 8))
    res, for_review = ExtractedMetadata(), []
    for group in config.load('field_groups').values():
        bundle = assemble_prompt(model_name, tags, CHEAP, fields=group.fields)
        if estimate_tokens(bundle.render('')) > budget:
            raise PipelineError('prompt for field group {0} exceeds the budget of {1}'.format(
                group.id, budget))
        selected = []
        if chunks:
            query = ' '.join([group.query] + group.fields)
            for chunk in retrieve(query, chunks, len(chunks), scorer=scorer):
                candidate = sorted(selected + [chunk], key=lambda c: c.index)
                if estimate_tokens(bundle.render(''.join(c.text for c in candidate))) <= budget:
                    selected = candidate
        prompt = bundle.render(''.join(c.text for c in selected))
        if estimate_tokens(prompt) > budget:
            raise PipelineError('prompt for field group {0} exceeds the budget of {1}'.format(
                group.id, budget))
        result = validate_schema(_request(client, prompt))
        if isinstance(result, list):
            log.warning('{0}: field group {1} failed validation: {2}'.format(
                model_name, group.id, '; '.join(str(v) for v in result)))
            for_review.append(group.id)
            continue
        res.merge(result, fields=group.fields)
    res.provenance = Provenance(CHEAP, client.id, now(), for_review)
    return res


def extract_accurate(card: str,
                     client: Client,
                     limit: int = DEFAULT_LIMIT,
                     model_name: str = 'model',
                     tags: typing.Iterable[str] = (),
                     budget: int = DEFAULT_BUDGET,
                     scorer: typing.Optional[Scorer] = None,
                     now: typing.Callable[[], str] = _now) -> ExtractedMetadata:
    """
    Extract metadata with a single request for the whole card.

    Cards exceeding `limit` are processed with :func:`extract_cheap`, recorded as
    `cheap-fallback` in the provenance.
    """
    tags = list(tags)
    prompt = assemble_prompt(model_name, tags, ACCURATE).render(_normalized(card))
    if estimate_tokens(prompt) > limit:
        log.info('{0}: card exceeds {1} tokens, falling back to cheap mode'.format(
            model_name, limit))
        res = extract_cheap(
            card, client, budget=budget, model_name=model_name, tags=tags, scorer=scorer, now=now)
        res.provenance.pipeline_mode = CHEAP_FALLBACK
        return res
    result = validate_schema(_request(client, prompt))
    if isinstance(result, list):
        log.warning('{0}: response failed validation: {1}'.format(
            model_name, '; '.join(str(v) for v in result)))
        result = ExtractedMetadata()
        for_review = list(config.load('field_groups'))
    else:
        for_review = []
    result.provenance = Provenance(ACCURATE, client.id, now(), for_review)
    return result


def extract_card(ptm: PtmPackage, client: Client, mode: str = CHEAP, **kw) -> ExtractedMetadata:
    if mode == CHEAP:
        kw.pop('limit', None)
        return extract_cheap(ptm.card, client, model_name=ptm.name, tags=ptm.tags, **kw)
    if mode == ACCURATE:
        return extract_accurate(ptm.card, client, model_name=ptm.name, tags=ptm.tags, **kw)
    raise ValueError('unknown mode: {0}'.format(mode))


@attr.s
class ExtractionCounts(object):
    extracted = attr.ib(default=0)
    failed = attr.ib(default=0)
    for_review = attr.ib(default=0)

    def __json__(self):
        return attr.asdict(self)


def extract_all(store,
                client: Client,
                mode: str = CHEAP,
                max_ptms: typing.Optional[int] = None,
                jobs: int = 1,
                ptm_filter: typing.Optional[typing.Callable[[PtmPackage], bool]] = None,
                **kw) -> ExtractionCounts:
    """
    Extract metadata for all PTMs with a model card and persist it.

    :param max_ptms: Maximal number of PTMs to process.
    :param kw: Keyword arguments passed into :func:`extract_card`.
    """
    ptms = [p for p in store.ptms() if p.card and (ptm_filter is None or ptm_filter(p))]
    if max_ptms is not None:
        ptms = ptms[:max_ptms]
    counts = ExtractionCounts()
    with concurrent.futures.ThreadPoolExecutor(max_workers=jobs) as executor:
        futures = {executor.submit(extract_card, p, client, mode, **kw): p for p in ptms}
        results = {}
        for future in tqdm(
                concurrent.futures.as_completed(futures),
                total=len(futures),
                desc='extracting',
                disable=len(futures) < 2):
            ptm = futures[future]
            try:
                results[ptm.id] = future.result()
            except PipelineError as e:
                counts.failed += 1
                log.warning('{0}: extraction failed: {1}'.format(ptm.id, e))
    for ptm_id, md in sorted(results.items()):
        store.save_metadata(ptm_id, md.asdict(), attr.asdict(md.provenance))
        counts.extracted += 1
        if md.provenance.for_review:
            counts.for_review += 1
    return counts
