import random

import pytest

from ptmchain.cards.chunking import *
from ptmchain.cards.chunking import iter_sections

WORDS = ['model', 'the', 'bert', 'trained', 'on', 'data', '*bold*', '`code`', 'x' * 80, '|', '-']


def _random_card(rng):
    parts = []
    for _ in range(rng.randint(0, 12)):
        kind = rng.choice(['header', 'paragraph', 'paragraph', 'fence', 'list', 'blank'])
        if kind == 'header':
            parts.append('{0} {1}\n'.format('#' * rng.randint(1, 6), rng.choice(WORDS)))
        elif kind == 'paragraph':
            n = rng.choice([3, 30, 300, 1500])
            words = [rng.choice(WORDS) for _ in range(rng.randint(1, n))]
            lines, line = [], []
            for w in words:
                line.append(w)
                if rng.random() < 0.1:
                    lines.append(' '.join(line))
                    line = []
            lines.append(' '.join(line))
            parts.append('\n'.join(lines) + rng.choice(['\n', '\n\n', '\r\n', '']))
        elif kind == 'fence':
            parts.append('```python\n# not a header\nx = 1\n```\n')
        elif kind == 'list':
            parts.append(''.join(
                '- item {0}\n'.format(i) for i in range(rng.randint(1, 50))))
        else:
            parts.append(rng.choice(['\n', '  \n', '\t\n\n']))
    return ''.join(parts)


def test_estimate_tokens():
    assert estimate_tokens('') == 0
    assert estimate_tokens('a b c d') == 6
    assert estimate_tokens('a\nb\t c') == 4


def test_split_markdown_random_cards():
    rng = random.Random(42)
    for i in range(1000):
        card = _random_card(rng)
        max_tokens = rng.choice([MIN_CHUNK_TOKENS, 100, 512])
        chunks = split_markdown(card, max_tokens)
        assert ''.join(c.text for c in chunks) == card.replace('\r\n', '\n'), i
        assert all(c.token_estimate <= max_tokens for c in chunks), i
        assert [c.index for c in chunks] == list(range(len(chunks)))


def test_split_markdown_headers():
    card = 'intro\n# A\nx\n## B\n```\n# code\n```\ny\n### C\nz\n# D\n'
    chunks = split_markdown(card, 512)
    assert [(c.header_path, c.text) for c in chunks] == [
        ((), 'intro\n'),
        (('A',), '# A\nx\n'),
        (('A', 'B'), '## B\n```\n# code\n```\ny\n'),
        (('A', 'B', 'C'), '### C\nz\n'),
        (('D',), '# D\n'),
    ]


def test_split_markdown_long_section():
    card = '# Title\n\n' + '\n\n'.join(' '.join(['word'] * 40) for _ in range(20))
    chunks = split_markdown(card, MIN_CHUNK_TOKENS)
    assert len(chunks) > 1
    assert all(c.header_path == ('Title',) for c in chunks)
    assert ''.join(c.text for c in chunks) == card


def test_split_markdown_edge_cases():
    assert split_markdown('', 100) == []
    assert split_markdown(None, 100) == []
    with pytest.raises(ValueError):
        split_markdown('text', MIN_CHUNK_TOKENS - 1)


def test_iter_sections():
    assert list(iter_sections('#no header\n#### \n')) == [
        ((), '#no header\n'), (('',), '#### \n')]
    assert [p for p, _ in iter_sections('# A #\n~~~\n# x\n~~~\n')] == [('A',)]
