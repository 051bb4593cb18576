"""In-memory end-to-end run, shared by the CLI and the acceptance tests."""

import logging
from dataclasses import dataclass

import numpy as np

from . import brown, separation
from .config import config_hash, validate_against_vocabulary
from .corpus import Corpus, encode, ingest, load_stopwords
from .embeddings import build_similarity_cache, train_skipgram
from .tmodel import (TopicModel, compute_priors, fold_in, run_gibbs)
from .tmodel.sampler import make_rng

log = logging.getLogger(__name__)


@dataclass
class PipelineResult:
    corpus: Corpus
    embeddings: object
    cache: object
    clusters: object
    separator: object
    pi: np.ndarray
    priors: object
    state: object
    summary: object
    model: TopicModel


def prepare(texts, config, params) -> Corpus:
    return ingest(texts, language=config.language_tag, min_count=params.min_count,
                  keep=config.all_seed_words())


def train_separator(corpus, config, clusters, params):
    instances = separation.bootstrap_instances(corpus, config, clusters)
    return separation.train_maxent(instances, l2=params.maxent_l2,
                                   max_iter=params.maxent_max_iter, tol=params.maxent_tol)


def train_topics(corpus, config, params, cache, clusters, separator, *, use_numba=None,
                 callback=None):
    pi = separation.corpus_pi(corpus, clusters, separator)
    priors = compute_priors(corpus, cache, params)
    summary, state = run_gibbs(corpus, priors, pi, params, use_numba=use_numba,
                               callback=callback)
    model = TopicModel.from_run(corpus.vocab, config, priors, state, summary, cache,
                                params.sampler_mode, config_hash(config, params))
    return pi, priors, state, summary, model


def run(texts, config, params, *, corpus=None, embeddings=None, clusters=None,
        use_numba=None, callback=None) -> PipelineResult:
    """Full unsupervised run; precomputed stages may be passed in and are reused."""
    if corpus is None:
        corpus = prepare(texts, config, params)
    validate_against_vocabulary(config, corpus.vocab)
    if embeddings is None:
        embeddings = train_skipgram(corpus, params, use_numba=use_numba)
    cache = build_similarity_cache(embeddings, config, corpus.vocab, params.similarity_floor)
    if clusters is None:
        clusters = brown.brown_cluster(corpus, params.num_brown_clusters,
                                       use_numba=use_numba)
    separator = train_separator(corpus, config, clusters, params)
    pi, priors, state, summary, model = train_topics(
        corpus, config, params, cache, clusters, separator, use_numba=use_numba,
        callback=callback)
    return PipelineResult(corpus, embeddings, cache, clusters, separator, pi, priors,
                          state, summary, model)


def classify_texts(texts, model, clusters, separator, vocab, params, *,
                   language="en", use_numba=None):
    """Fold in each text (one sentence each) and return the ``FoldInResult`` list.

    Sentence ``i`` uses its own random stream, so results do not depend on
    batch composition or order.
    """
    stop = load_stopwords(language)
    out = []
    for i, text in enumerate(texts):
        tokens = encode(text, vocab, stop)
        pi = separation.sentence_pi(tokens, clusters, separator)
        out.append(fold_in(tokens, model, pi, params, rng=make_rng(params.rng_seed, 1, i),
                           use_numba=use_numba))
    return out
