import json

import pytest

from ptmchain.cards.prompts import *
from ptmchain.cards.prompts import TEMPLATE_DIR, domain_and_task
from ptmchain.cards.chunking import estimate_tokens


@pytest.mark.parametrize(
    'tags,expected',
    [
        (['transformers', 'fill-mask'], ('NLP', 'fill-mask')),
        (['NLP'], ('NLP', None)),
        (['image-classification', 'text-generation'], ('CV', 'image-classification')),
        (['pytorch'], (None, None)),
        (None, (None, None)),
    ]
)
def test_domain_and_task(tags, expected):
    assert domain_and_task(tags) == expected


def test_assemble_prompt_accurate():
    bundle = assemble_prompt('gpt2', ['text-generation'])
    assert bundle.domain_task_prompts is None
    assert '"gpt2"' in bundle.language_prompt
    assert len(bundle.fields) == 19
    prompt = bundle.render('- license: mit')
    assert 'the pre-trained model "gpt2"' in prompt
    assert '{}' in bundle.metadata_prompt
    assert prompt.endswith('{0}\n- license: mit'.format(CONTEXT_MARKER))
    assert '{0}\ndomain\ntask\n'.format(FIELDS_MARKER) in prompt
    schema = json.loads(bundle.schema_text.partition('\n')[2])
    assert schema['properties']['license']['description']


def test_assemble_prompt_cheap():
    bundle = assemble_prompt('resnet50', [], mode='cheap', fields=['license', 'datasets'])
    assert bundle.language_prompt is None
    assert 'text-classification' in bundle.domain_task_prompts
    assert bundle.fields == ['license', 'datasets']
    schema = json.loads(bundle.schema_text.partition('\n')[2])
    assert list(schema['properties']) == ['license', 'datasets']
    assert all('description' not in p for p in schema['properties'].values())
    # The full prompt keeps the descriptions:
    assert estimate_tokens(bundle.render('')) < estimate_tokens(
        assemble_prompt('resnet50', []).render(''))


def test_assemble_prompt_invalid(tmp_path):
    with pytest.raises(ValueError):
        assemble_prompt('', [])
    with pytest.raises(ValueError):
        assemble_prompt('gpt2', [], mode='expensive')

    (tmp_path / 'prefix.txt').write_text(
        (TEMPLATE_DIR / 'prefix.txt').read_text(encoding='utf-8'), encoding='utf-8')
    with pytest.raises(TemplateError, match='metadata'):
        assemble_prompt('gpt2', [], template_dir=tmp_path)


def test_assemble_prompt_custom_templates(tmp_path):
    for name in ['metadata', 'schema', 'domain_task', 'language']:
        (tmp_path / '{0}.txt'.format(name)).write_text(
            (TEMPLATE_DIR / '{0}.txt'.format(name)).read_text(encoding='utf-8'),
            encoding='utf-8')
    (tmp_path / 'prefix.txt').write_text('Model: {model_name}', encoding='utf-8')
    assert assemble_prompt('gpt2', [], template_dir=tmp_path).prefix == 'Model: gpt2'
