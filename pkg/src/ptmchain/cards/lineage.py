"""
PTM-to-PTM dependencies, derived from the `base_model` of extracted metadata.
"""
import re
import logging

from ..models import PtmPtmLink
from ..mapper import PtmIndex, Unresolvable

__all__ = ['base_model_name', 'derive_ptm_ptm_links']

log = logging.getLogger('ptmchain')


def base_model_name(value) -> str:
    """
    >>> base_model_name('https://huggingface.co/bert-base-uncased')
    'bert-base-uncased'
    """
    value = (value or '').strip().strip('\'"`').strip()
    return re.sub(r'^https?://(www\.)?huggingface\.co/', '', value).strip('/')


def derive_ptm_ptm_links(store) -> int:
    """
    Replace all PTM-PTM links by links derived from extracted metadata.

    The base model is resolved in the registry of the derived PTM; a PTM naming itself as base
    model yields an unresolved link.

    :return: Number of links.
    """
    ptms = {p.id: p for p in store.ptms()}
    index = PtmIndex(ptms.values())
    links = []
    for ptm_id, data, _ in store.metadata():
        name = base_model_name(data.get('base_model'))
        if not name or ptm_id not in ptms:
            continue
        try:
            resolved = index.resolve(name, ptms[ptm_id].registry).matched_ptm
        except Unresolvable:  # pragma: no cover
            continue
        if resolved == ptm_id:
            log.warning('{0}: base model refers to the model itself'.format(ptm_id))
            resolved = None
        links.append(PtmPtmLink(
            child_ptm_id=ptm_id, base_model_name=name, resolved_base_id=resolved))
    return store.replace_ptm_links(links)
