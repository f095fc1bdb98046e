"""Two-stage retrieve-then-rerank engine for matching short social-media
claims to the scientific papers they implicitly cite."""

__version__ = "0.1.0"

from .augment import ALL_MODES, GENERATION_PROMPTS, RewriteTable, augment_query, augment_queryset, load_rewrites
from .bm25 import Bm25Params, InvertedIndex, bm25_score, build_index, load_index, retrieve, save_index
from .corpus import (
    Corpus,
    Document,
    Query,
    QuerySet,
    document_text,
    load_corpus,
    load_queries,
    make_corpus,
    save_corpus,
    save_queries,
)
from .dense import EmbeddingStore, cosine, dense_retrieve, load_embeddings, save_embeddings
from .evaluation import (
    EvalReport,
    Run,
    mrr_at_k,
    read_predictions,
    read_run,
    reciprocal_rank,
    write_predictions,
    write_run,
)
from .experiment import ExperimentConfig, ExperimentReport, config_from_dict, load_config, run_experiment
from .ranking import RankedList, rank_entries
from .rerank import (
    ExternalScorer,
    ScoreRequest,
    ScoreResponse,
    Scorer,
    lexical_overlap_score,
    rerank,
    score_external,
)
from .textprep import PreprocessConfig, default_stopwords, load_stopwords, preprocess, stopword_hash
