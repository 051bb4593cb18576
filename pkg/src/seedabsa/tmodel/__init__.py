"""Seeded aspect/polarity topic model: priors, Gibbs sampler, fold-in."""

from .model import (UNCLASSIFIABLE, FoldInResult, TopicModel, classify_aspect,
                    classify_polarity, fold_in, load_model, save_model, top_words,
                    write_classification, write_top_words)
from .priors import CLASS_NAMES, PriorSet, compute_priors, document_priors
from .sampler import (PosteriorSummary, SamplerState, gibbs_sweep, init_state,
                      point_estimates, run_chain, run_gibbs, token_conditionals)

__all__ = [
    "UNCLASSIFIABLE", "FoldInResult", "TopicModel", "classify_aspect",
    "classify_polarity", "fold_in", "load_model", "save_model", "top_words",
    "write_classification", "write_top_words", "CLASS_NAMES", "PriorSet",
    "compute_priors", "document_priors", "PosteriorSummary", "SamplerState",
    "gibbs_sweep", "init_state", "point_estimates", "run_chain", "run_gibbs",
    "token_conditionals",
]
