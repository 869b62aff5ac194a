"""
Ranking of card chunks for a retrieval query.
"""
import re
import typing

from whoosh import scoring
from whoosh.fields import Schema, TEXT, NUMERIC
from whoosh.filedb.filestore import RamStorage
from whoosh.qparser import MultifieldParser, OrGroup

from .chunking import CardChunk

__all__ = ['Scorer', 'TermOverlapScorer', 'WhooshScorer', 'retrieve']


def terms(text: str) -> typing.Set[str]:
    return set(re.findall(r'[a-z0-9]+', text.lower()))


class Scorer(object):
    name = None

    def scores(self, query: str, chunks: typing.Sequence[CardChunk]) -> typing.List[float]:
        raise NotImplementedError()  # pragma: no cover


class TermOverlapScorer(Scorer):
    """
    Fraction of query terms occurring in the chunk text or its header path.
    """
    name = 'overlap'

    def scores(self, query, chunks):
        q = terms(query)
        if not q:
            return [0.0 for _ in chunks]
        return [
            len(q & terms(' '.join(list(c.header_path) + [c.text]))) / len(q) for c in chunks]


class WhooshScorer(Scorer):
    """
    BM25F scores from an in-memory whoosh index over the chunks.
    """
    name = 'bm25f'

    def scores(self, query, chunks):
        if not chunks or not terms(query):
            return [0.0 for _ in chunks]
        schema = Schema(pos=NUMERIC(stored=True), text=TEXT, headers=TEXT)
        index_ = RamStorage().create_index(schema)
        writer = index_.writer()
        for i, chunk in enumerate(chunks):
            writer.add_document(pos=i, text=chunk.text, headers=' '.join(chunk.header_path))
        writer.commit()
        res = [0.0 for _ in chunks]
        qp = MultifieldParser(['text', 'headers'], schema=schema, group=OrGroup)
        q = qp.parse(' '.join(sorted(terms(query))))
        with index_.searcher(weighting=scoring.BM25F()) as searcher:
            for hit in searcher.search(q, limit=None):
                res[hit['pos']] = hit.score
        return res


def retrieve(query: str,
             chunks: typing.Sequence[CardChunk],
             k: int,
             scorer: typing.Optional[Scorer] = None) -> typing.List[CardChunk]:
    """
    The `k` best chunks for `query`, best first; ties are broken by document order.
    """
    if k < 1:
        raise ValueError('k must be at least 1')
    scores = (scorer or TermOverlapScorer()).scores(query, chunks)
    ranked = sorted(range(len(chunks)), key=lambda i: (-scores[i], i))
    return [chunks[i] for i in ranked[:k]]
