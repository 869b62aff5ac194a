"""
Header-aware splitting of model card markdown into token-bounded chunks.

Chunks are lossless: concatenating the chunk texts in order reproduces the card (with
newlines normalized to `\\n`).
"""
import re
import math
import typing

import attr
from langchain_text_splitters import RecursiveCharacterTextSplitter

__all__ = ['MIN_CHUNK_TOKENS', 'CardChunk', 'estimate_tokens', 'split_markdown']

MIN_CHUNK_TOKENS = 64

HEADER_PATTERN = re.compile(r'^ {0,3}(?P<level>#{1,6})(?:[ \t]+(?P<title>.*?))?[ \t#]*$')
FENCE_PATTERN = re.compile(r'^ {0,3}(```|~~~)')


def estimate_tokens(text: str) -> int:
    """
    Approximate number of model tokens, computed as ceil(words * 4/3).

    >>> estimate_tokens('one two three')
    4
    """
    return math.ceil(len(text.split()) * 4 / 3)


@attr.s(frozen=True)
class CardChunk(object):
    text = attr.ib()
    #: Titles of the enclosing markdown headers, outermost first.
    header_path = attr.ib(default=(), converter=tuple)
    token_estimate = attr.ib(default=None)
    #: Position of the chunk in the card.
    index = attr.ib(default=0)

    def __attrs_post_init__(self):
        if self.token_estimate is None:
            object.__setattr__(self, 'token_estimate', estimate_tokens(self.text))


def iter_sections(text: str) -> typing.Iterator[typing.Tuple[typing.Tuple[str, ...], str]]:
    """
    Split markdown at ATX headers outside of fenced code blocks.

    :return: Generator of `(header_path, section_text)` pairs.
    """
    stack, lines, path, fence = [], [], (), None
    for line in text.splitlines(keepends=True):
        stripped = line.rstrip('\n')
        m = FENCE_PATTERN.match(stripped)
        if m:
            if fence is None:
                fence = m.group(1)
            elif m.group(1) == fence:
                fence = None
        header = HEADER_PATTERN.match(stripped) if fence is None and not m else None
        if header:
            if lines:
                yield path, ''.join(lines)
                lines = []
            level = len(header.group('level'))
            while stack and stack[-1][0] >= level:
                stack.pop()
            stack.append((level, (header.group('title') or '').strip()))
            path = tuple(title for _, title in stack)
        lines.append(line)
    if lines:
        yield path, ''.join(lines)


def _word_split(text: str, max_tokens: int) -> typing.List[str]:
    # Greedy split at word starts; each piece keeps its trailing whitespace.
    pieces, current, words = [], '', 0
    max_words = max_tokens * 3 // 4
    for m in re.finditer(r'\s*\S+\s*|\s+', text):
        n = len(m.group().split())
        if current and words + n > max_words:
            pieces.append(current)
            current, words = '', 0
        current += m.group()
        words += n
    if current:
        pieces.append(current)
    return pieces


def split_markdown(card: str, max_tokens: int) -> typing.List[CardChunk]:
    """
    Split a card at header boundaries, then at paragraph, line and word boundaries.

    Every chunk's token estimate is at most `max_tokens`.
    """
    if max_tokens < MIN_CHUNK_TOKENS:
        raise ValueError('max_tokens must be at least {0}'.format(MIN_CHUNK_TOKENS))
    text = (card or '').replace('\r\n', '\n').replace('\r', '\n')
    if not text:
        return []
    splitter = RecursiveCharacterTextSplitter(
        chunk_size=max_tokens,
        chunk_overlap=0,
        length_function=estimate_tokens,
        separators=['\n\n', '\n', ' ', ''],
        keep_separator=True,
        strip_whitespace=False,
    )
    res = []
    for path, section in iter_sections(text):
        if estimate_tokens(section) <= max_tokens:
            parts = [section]
        else:
            parts = []
            for part in splitter.split_text(section):
                if estimate_tokens(part) <= max_tokens:
                    parts.append(part)
                else:
                    parts.extend(_word_split(part, max_tokens))
            if ''.join(parts) != section:  # pragma: no cover
                parts = _word_split(section, max_tokens)
        for part in parts:
            res.append(CardChunk(text=part, header_path=path, index=len(res)))
    return res
