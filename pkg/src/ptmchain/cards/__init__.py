"""
Extraction of structured metadata from model cards.
"""
from .chunking import CardChunk, estimate_tokens, split_markdown  # noqa: F401
from .retrieval import TermOverlapScorer, WhooshScorer, retrieve  # noqa: F401
from .prompts import TemplateError, PromptBundle, assemble_prompt  # noqa: F401
from .clients import (  # noqa: F401
    ClientError, EchoClient, EmptyClient, ScriptedClient, LiveClient, get_client,
)
from .schema import ExtractedMetadata, Provenance, Violation, validate_schema  # noqa: F401
from .pipeline import (  # noqa: F401
    PipelineError, extract_cheap, extract_accurate, extract_card, extract_all,
)
from .evaluation import Accuracy, evaluate_accuracy  # noqa: F401
from .lineage import derive_ptm_ptm_links  # noqa: F401
