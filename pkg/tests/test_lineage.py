from ptmchain.cards.lineage import *

PROVENANCE = dict(pipeline_mode='cheap', client_id='test:mock', timestamp='2024-01-01T00:00:00Z')


def test_base_model_name():
    assert base_model_name(' "bert-base-uncased" ') == 'bert-base-uncased'
    assert base_model_name('https://www.huggingface.co/org/model/') == 'org/model'
    assert base_model_name(None) == ''


def test_derive_ptm_ptm_links(loaded_store):
    for ptm_id, base in [
        ('HuggingFace:gpt2', 'https://huggingface.co/bert-base-uncased'),
        ('HuggingFace:facebook/bart-large-cnn', 'BERT-BASE-UNCASED'),
        ('HuggingFace:sentence-transformers/all-MiniLM-L6-v2', 'nreimers/MiniLM-L6-H384-uncased'),
        ('HuggingFace:openai/whisper-large', 'openai/whisper-large'),
        ('HuggingFace:bert-base-uncased', None),
    ]:
        loaded_store.save_metadata(ptm_id, {'base_model': base}, PROVENANCE)

    assert derive_ptm_ptm_links(loaded_store) == 4
    assert [(li.child_ptm_id, li.base_model_name, li.resolved_base_id)
            for li in loaded_store.ptm_links()] == [
        ('HuggingFace:facebook/bart-large-cnn', 'BERT-BASE-UNCASED',
         'HuggingFace:bert-base-uncased'),
        ('HuggingFace:gpt2', 'bert-base-uncased', 'HuggingFace:bert-base-uncased'),
        ('HuggingFace:openai/whisper-large', 'openai/whisper-large', None),
        ('HuggingFace:sentence-transformers/all-MiniLM-L6-v2',
         'nreimers/MiniLM-L6-H384-uncased', None),
    ]

    # Links are replaced, not accumulated:
    assert derive_ptm_ptm_links(loaded_store) == 4
    assert len(loaded_store.ptm_links()) == 4
