"""Collapsed Gibbs sampling for the seeded aspect/polarity topic model."""

import logging
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .. import _accel
from ..errors import ModelError
from . import kernels
from .priors import A, N, P, PriorSet

log = logging.getLogger(__name__)

MODES = {"as-written": kernels.AS_WRITTEN, "derived": kernels.DERIVED}


def _mode_code(mode):
    try:
        return MODES[mode]
    except KeyError:
        raise ModelError(f"unknown sampler mode {mode!r}") from None


def make_rng(seed, *stream):
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), *stream])))


@dataclass
class SamplerState:
    """Assignments and count matrices of one chain.

    ``y`` is 0 for an aspect-term and 1 for an opinion word, ``v`` is 0 for
    positive and 1 for negative.  ``v`` keeps its last value while ``y`` is 0
    and is then not counted anywhere.
    """
    words: np.ndarray
    doc: np.ndarray
    z: np.ndarray
    y: np.ndarray
    v: np.ndarray
    nw: np.ndarray     # (3, T, V)
    nsum: np.ndarray   # (3, T)
    ndt: np.ndarray    # (D, T)
    ndq: np.ndarray    # (D, 2)
    pi: np.ndarray     # (Ntok, 2)
    rng: Optional[np.random.Generator] = None

    @property
    def num_topics(self):
        return self.ndt.shape[1]

    def token_class(self):
        return np.where(self.y == 0, A, 1 + self.v)

    def recount(self):
        """Count matrices rebuilt from the assignments."""
        T, V = self.nw.shape[1], self.nw.shape[2]
        D = self.ndt.shape[0]
        c = self.token_class()
        nw = np.zeros_like(self.nw)
        np.add.at(nw, (c, self.z, self.words), 1)
        ndt = np.zeros((D, T), dtype=self.ndt.dtype)
        np.add.at(ndt, (self.doc, self.z), 1)
        ndq = np.zeros((D, 2), dtype=self.ndq.dtype)
        o = self.y == 1
        np.add.at(ndq, (self.doc[o], self.v[o]), 1)
        return nw, nw.sum(axis=2), ndt, ndq

    def check(self):
        """Raise ``ModelError`` unless stored counts equal a full recount."""
        nw, nsum, ndt, ndq = self.recount()
        for name, a, b in (("nw", self.nw, nw), ("nsum", self.nsum, nsum),
                           ("ndt", self.ndt, ndt), ("ndq", self.ndq, ndq)):
            if not np.array_equal(a, b):
                raise ModelError(f"count matrix {name} is inconsistent with assignments")

    def copy(self):
        return SamplerState(*(getattr(self, f).copy() for f in
                              ("words", "doc", "z", "y", "v", "nw", "nsum", "ndt",
                               "ndq", "pi")), rng=None)


def init_state(words, doc_ptr, pi, num_topics, vocab_size, rng):
    """Random start: uniform z, y drawn from pi, uniform v."""
    words = np.ascontiguousarray(words, dtype=np.int64)
    D = len(doc_ptr) - 1
    doc = np.repeat(np.arange(D, dtype=np.int64), np.diff(doc_ptr))
    n = len(words)
    z = rng.integers(0, num_topics, size=n).astype(np.int64)
    y = (rng.random(n) < pi[:, 1]).astype(np.int64)
    v = rng.integers(0, 2, size=n).astype(np.int64)
    state = SamplerState(words, doc, z, y, v,
                         np.zeros((3, num_topics, vocab_size), dtype=np.int64),
                         np.zeros((3, num_topics), dtype=np.int64),
                         np.zeros((D, num_topics), dtype=np.int64),
                         np.zeros((D, 2), dtype=np.int64),
                         np.ascontiguousarray(pi, dtype=np.float64), rng)
    state.nw, state.nsum, state.ndt, state.ndq = state.recount()
    return state


def gibbs_sweep(state, priors, mode="as-written", *, use_numba=None, u=None,
                frozen=False, word_counts=None):
    """Resample every token once, in corpus order.

    ``word_counts`` overrides the topic-word counts (with ``frozen``) when
    folding in new text against a trained model.
    """
    if u is None:
        u = state.rng.random((len(state.words), 3))
    nw, nsum = (state.nw, state.nsum) if word_counts is None else word_counts
    kernels.sweep(_accel.pick(use_numba), state.words, state.doc, state.z, state.y,
                  state.v, nw, nsum, state.ndt, state.ndq, priors.alpha,
                  priors.delta, priors.beta, priors.beta_sum, state.pi, u,
                  _mode_code(mode), bool(frozen))
    return state


def token_conditionals(state, priors, i, mode="as-written"):
    """Unnormalized conditionals of token ``i`` with its own counts removed.

    Returns ``(pz, py, pv)``: ``pz[t]`` for the topic step, ``py[t] =
    (p_A, p_O)`` and ``pv[t] = (p_P, p_N)`` for the switch and polarity steps
    given that topic ``t`` was drawn.
    """
    code = _mode_code(mode)
    s = state.copy()
    w, d, t0 = s.words[i], s.doc[i], s.z[i]
    c = A if s.y[i] == 0 else 1 + s.v[i]
    s.ndt[d, t0] -= 1
    if s.y[i] == 1:
        s.ndq[d, s.v[i]] -= 1
    s.nw[c, t0, w] -= 1
    s.nsum[c, t0] -= 1
    bsum = priors.beta_sum
    r = (s.nw[:, :, w] + priors.beta[:, :, w]) / (s.nsum + bsum)
    if code == kernels.AS_WRITTEN:
        pz = r[A] * r[P] * r[N] * (s.ndt[d] + priors.alpha[d])
    else:
        pz = r[c] * (s.ndt[d] + priors.alpha[d])
    pv = np.stack([r[P] * (s.ndq[d, 0] + priors.delta[d, 0]),
                   r[N] * (s.ndq[d, 1] + priors.delta[d, 1])], axis=1)
    p_a = s.pi[i, 0] * r[A]
    if code == kernels.AS_WRITTEN:
        p_o = s.pi[i, 1] * (r[P] if s.v[i] == 0 else r[N])
    else:
        den = s.ndq[d].sum() + priors.delta[d].sum()
        p_o = s.pi[i, 1] * (pv[:, 0] / den + pv[:, 1] / den)
    return pz, np.stack([p_a, p_o], axis=1), pv


@dataclass
class PosteriorSummary:
    theta: np.ndarray    # (D, T)
    omega: np.ndarray    # (D, 2)
    phi: np.ndarray      # (3, T, V)
    num_samples: int

    @property
    def phi_A(self):
        return self.phi[A]

    @property
    def phi_P(self):
        return self.phi[P]

    @property
    def phi_N(self):
        return self.phi[N]


def point_estimates(state, priors):
    """Smoothed ``(theta, omega, phi)`` of the current state."""
    ndt = state.ndt
    theta = (ndt + priors.alpha) / (ndt.sum(axis=1, keepdims=True) + priors.alpha_base)
    omega = (state.ndq + priors.delta) / (state.ndq.sum(axis=1, keepdims=True)
                                          + priors.delta_base)
    phi = (state.nw + priors.beta) / (state.nsum + priors.beta_sum)[:, :, None]
    return theta, omega, phi


def is_sample_iteration(it, burn_in, lag):
    """``it`` counts sweeps from 1; the first kept state is ``burn_in + lag``."""
    return it > burn_in and (it - burn_in) % lag == 0


def run_chain(state, priors, *, iterations, burn_in, lag, mode="as-written",
              use_numba=None, callback: Optional[Callable] = None):
    """Run ``iterations`` sweeps and average lagged point estimates."""
    acc = None
    count = 0
    for it in range(1, iterations + 1):
        gibbs_sweep(state, priors, mode, use_numba=use_numba)
        if callback is not None:
            callback(it, state)
        if is_sample_iteration(it, burn_in, lag):
            est = point_estimates(state, priors)
            acc = est if acc is None else tuple(a + e for a, e in zip(acc, est))
            count += 1
    if count == 0:
        raise ModelError("no samples were collected (burn_in/lag too large)")
    theta, omega, phi = (a / count for a in acc)
    return PosteriorSummary(theta, omega, phi, count)


def run_gibbs(corpus, priors: PriorSet, pi, params, *, use_numba=None, callback=None):
    """Initialize a chain from ``params.rng_seed`` and run it to completion.

    Returns ``(summary, final_state)``.
    """
    words, ptr = corpus.flat()
    rng = make_rng(params.rng_seed, 0)
    state = init_state(words, ptr, pi, priors.num_topics, len(corpus.vocab), rng)
    log.info("gibbs: %d tokens, %d documents, T=%d, mode=%s, %d iterations",
             len(words), len(ptr) - 1, priors.num_topics, params.sampler_mode,
             params.iterations)
    summary = run_chain(state, priors, iterations=params.iterations,
                        burn_in=params.burn_in, lag=params.lag,
                        mode=params.sampler_mode, use_numba=use_numba,
                        callback=callback)
    return summary, state
