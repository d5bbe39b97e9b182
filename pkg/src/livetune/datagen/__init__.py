"""Data generation pipelines: directives in, candidate training sets out."""

from .backtranslation import backtranslate, parse_score
from .clients import (
    FixtureSearch,
    FixtureTeacher,
    HttpSearch,
    HttpTeacher,
    SearchClient,
    TeacherClient,
    make_search,
    make_teacher,
    prompt_key,
)
from .dedupe import dedupe_and_diversify, jaccard, tokens
from .documents import (
    SUPPORTED_FORMATS,
    chunk_text,
    extract_pdf_text,
    extract_text,
    ingest_document,
    strip_html,
)
from .self_instruct import generate_self_instruct, parse_numbered_blocks
from .types import (
    SOURCES,
    DocumentChunk,
    ExtractedPassage,
    TrainingExample,
    TrainingSet,
)
from .websearch import augment_from_web, leading_sentences, search_and_extract

__all__ = [
    "SOURCES",
    "SUPPORTED_FORMATS",
    "DocumentChunk",
    "ExtractedPassage",
    "FixtureSearch",
    "FixtureTeacher",
    "HttpSearch",
    "HttpTeacher",
    "SearchClient",
    "TeacherClient",
    "TrainingExample",
    "TrainingSet",
    "augment_from_web",
    "backtranslate",
    "chunk_text",
    "dedupe_and_diversify",
    "extract_pdf_text",
    "extract_text",
    "generate_self_instruct",
    "ingest_document",
    "jaccard",
    "leading_sentences",
    "make_search",
    "make_teacher",
    "parse_numbered_blocks",
    "parse_score",
    "prompt_key",
    "search_and_extract",
    "strip_html",
    "tokens",
]
