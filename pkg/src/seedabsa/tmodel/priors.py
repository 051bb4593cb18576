"""Seed-biased Dirichlet hyperparameters."""

from dataclasses import dataclass
from typing import Optional

import numpy as np

# word classes of the topic-word counts
A, P, N = 0, 1, 2
CLASS_NAMES = ("A", "P", "N")


@dataclass
class PriorSet:
    """``alpha`` (D, T), ``delta`` (D, 2) and ``beta`` (3, T, V).

    ``beta[A]`` is topic specific; ``beta[P]`` and ``beta[N]`` repeat the
    same per-word row for every topic.
    """
    alpha: np.ndarray
    delta: np.ndarray
    beta: np.ndarray
    alpha_base: float
    delta_base: float
    beta_base: float
    beta_sum: Optional[np.ndarray] = None   # (3, T), filled in if omitted

    def __post_init__(self):
        if self.beta_sum is None:
            self.beta_sum = self.beta.sum(axis=2)

    @property
    def num_topics(self):
        return self.beta.shape[1]


def document_priors(tokens, sim, alpha_base, delta_base):
    """``(alpha_d, delta_d)`` for one document of token ids.

    Both are the document's summed similarity to each seed set, normalized
    and scaled to the base concentration.
    """
    tot = sim[np.asarray(tokens, dtype=np.int64)].sum(axis=0)
    a = tot[:-2]
    q = tot[-2:]
    return a / a.sum() * alpha_base, q / q.sum() * delta_base


def compute_priors(corpus, cache, params):
    """Priors for every sentence of ``corpus`` from a similarity cache."""
    sim = cache.sim
    V, T = sim.shape[0], sim.shape[1] - 2
    if V != len(corpus.vocab):
        raise ValueError("similarity cache does not match the vocabulary")
    words, ptr = corpus.flat()
    D = len(ptr) - 1
    # per-document sums of similarity rows
    tot = np.add.reduceat(sim[words], ptr[:-1], axis=0) if D else np.zeros((0, T + 2))
    a, q = tot[:, :T], tot[:, T:]
    alpha = a / a.sum(axis=1, keepdims=True) * params.alpha_base
    delta = q / q.sum(axis=1, keepdims=True) * params.delta_base
    beta = np.empty((3, T, V))
    beta[A] = sim[:, :T].T * params.beta_base
    beta[P] = (sim[:, T] * params.beta_base)[None, :]
    beta[N] = (sim[:, T + 1] * params.beta_base)[None, :]
    return PriorSet(alpha, delta, beta, float(params.alpha_base),
                    float(params.delta_base), float(params.beta_base))
