"""Trained-model container, fold-in, classification and report files."""

import json
import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Optional

import numpy as np

from ..errors import ModelError
from .priors import CLASS_NAMES, PriorSet, document_priors
from .sampler import (PosteriorSummary, SamplerState, gibbs_sweep, is_sample_iteration,
                      make_rng)

log = logging.getLogger(__name__)

DUMP_FORMAT = "seedabsa-model"
DUMP_VERSION = 1
POLARITIES = ("positive", "negative")


@dataclass
class TopicModel:
    """What a finished run keeps: final topic-word counts, priors, estimates."""
    terms: list
    aspects: list
    nw: np.ndarray        # (3, T, V) final-state counts
    beta: np.ndarray      # (3, T, V)
    sim: np.ndarray       # (V, T + 2) similarity cache
    phi: np.ndarray       # (3, T, V) averaged estimates
    num_samples: int
    alpha_base: float
    delta_base: float
    mode: str
    config_hash: str = ""
    theta: Optional[np.ndarray] = None
    omega: Optional[np.ndarray] = None

    @classmethod
    def from_run(cls, vocab, config, priors: PriorSet, state: SamplerState,
                 summary: PosteriorSummary, cache, mode, config_hash=""):
        return cls(list(vocab.terms), list(config.aspect_names), state.nw.copy(),
                   priors.beta.copy(), cache.sim.copy(), summary.phi,
                   summary.num_samples, priors.alpha_base, priors.delta_base, mode,
                   config_hash, summary.theta, summary.omega)

    @property
    def num_topics(self):
        return len(self.aspects)

    @cached_property
    def nsum(self):
        return self.nw.sum(axis=2)

    @cached_property
    def beta_sum(self):
        return self.beta.sum(axis=2)

    @property
    def index(self):
        return {t: i for i, t in enumerate(self.terms)}


# -- fold-in ------------------------------------------------------------------

@dataclass
class FoldInResult:
    theta: Optional[np.ndarray]
    omega: Optional[np.ndarray]
    num_tokens: int

    @property
    def classifiable(self):
        return self.theta is not None


UNCLASSIFIABLE = FoldInResult(None, None, 0)


def fold_in(tokens, model: TopicModel, pi, params, *, rng=None, use_numba=None):
    """Estimate ``(theta, omega)`` of one new sentence of in-vocabulary ids.

    A short chain resamples only the sentence's own tokens; the trained
    topic-word counts stay fixed.
    """
    tokens = np.asarray(tokens, dtype=np.int64)
    if len(tokens) == 0:
        return UNCLASSIFIABLE
    if rng is None:
        rng = make_rng(params.rng_seed, 1)
    T = model.num_topics
    alpha_d, delta_d = document_priors(tokens, model.sim, model.alpha_base,
                                       model.delta_base)
    priors = PriorSet(alpha_d[None, :], delta_d[None, :], model.beta, model.alpha_base,
                      model.delta_base, 0.0, model.beta_sum)
    n = len(tokens)
    pi = np.ascontiguousarray(pi, dtype=np.float64).reshape(n, 2)
    z = rng.integers(0, T, size=n).astype(np.int64)
    y = (rng.random(n) < pi[:, 1]).astype(np.int64)
    v = rng.integers(0, 2, size=n).astype(np.int64)
    ndt = np.bincount(z, minlength=T).astype(np.int64)[None, :]
    ndq = np.bincount(v[y == 1], minlength=2).astype(np.int64)[None, :]
    state = SamplerState(tokens, np.zeros(n, dtype=np.int64), z, y, v, model.nw,
                         model.nsum, ndt, ndq, pi, rng)
    counts = (model.nw, model.nsum)
    theta = np.zeros(T)
    omega = np.zeros(2)
    kept = 0
    for it in range(1, params.foldin_iterations + 1):
        gibbs_sweep(state, priors, model.mode, use_numba=use_numba, frozen=True,
                    word_counts=counts)
        if is_sample_iteration(it, params.foldin_burn_in, params.foldin_lag):
            theta += (state.ndt[0] + alpha_d) / (n + model.alpha_base)
            omega += (state.ndq[0] + delta_d) / (state.ndq[0].sum() + model.delta_base)
            kept += 1
    if kept == 0:
        raise ModelError("fold-in collected no samples")
    return FoldInResult(theta / kept, omega / kept, n)


# -- decisions ----------------------------------------------------------------

def argmax_with_tie(p):
    """``(index, tied)``: lowest index among the maxima, and whether it was shared."""
    p = np.asarray(p)
    best = p.max()
    hits = np.flatnonzero(p == best)
    return int(hits[0]), len(hits) > 1


def classify_aspect(result: FoldInResult, aspects):
    if not result.classifiable:
        raise ModelError("sentence is unclassifiable")
    k, tie = argmax_with_tie(result.theta)
    return aspects[k], tie


def classify_polarity(result: FoldInResult):
    if not result.classifiable:
        raise ModelError("sentence is unclassifiable")
    k, tie = argmax_with_tie(result.omega)
    return POLARITIES[k], tie


def top_words(model: TopicModel, topic, word_class, k):
    """Top ``k`` ``(term, probability)`` pairs of one phi row, ties by term id."""
    if k < 1:
        raise ModelError("k must be at least 1")
    if isinstance(topic, str):
        if topic not in model.aspects:
            raise ModelError(f"unknown aspect {topic!r}")
        topic = model.aspects.index(topic)
    if not 0 <= topic < model.num_topics:
        raise ModelError(f"unknown topic index {topic}")
    if word_class not in CLASS_NAMES:
        raise ModelError(f"unknown word class {word_class!r}")
    row = model.phi[CLASS_NAMES.index(word_class), topic]
    order = np.lexsort((np.arange(len(row)), -row))[:k]
    return [(model.terms[i], float(row[i])) for i in order]


# -- files --------------------------------------------------------------------

def _dump_doc(model: TopicModel):
    return {
        "format": DUMP_FORMAT,
        "version": DUMP_VERSION,
        "config_hash": model.config_hash,
        "mode": model.mode,
        "aspects": model.aspects,
        "terms": model.terms,
        "alpha_base": model.alpha_base,
        "delta_base": model.delta_base,
        "num_samples": model.num_samples,
        "counts": model.nw.tolist(),
        "beta": model.beta.tolist(),
        "similarity": model.sim.tolist(),
        "phi": model.phi.tolist(),
    }


def save_model(model: TopicModel, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(_dump_doc(model), fh, ensure_ascii=False, separators=(",", ":"))
        fh.write("\n")


def load_model(path) -> TopicModel:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, ValueError) as exc:
        raise ModelError(f"cannot read model dump {path}: {exc}") from exc
    if doc.get("format") != DUMP_FORMAT:
        raise ModelError(f"{path} is not a model dump")
    if doc.get("version") != DUMP_VERSION:
        raise ModelError(f"{path}: unsupported dump version {doc.get('version')}")
    return TopicModel(doc["terms"], doc["aspects"],
                      np.array(doc["counts"], dtype=np.int64),
                      np.array(doc["beta"], dtype=np.float64),
                      np.array(doc["similarity"], dtype=np.float64),
                      np.array(doc["phi"], dtype=np.float64),
                      int(doc["num_samples"]), float(doc["alpha_base"]),
                      float(doc["delta_base"]), doc["mode"], doc["config_hash"])


def write_top_words(model: TopicModel, path, k=10):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("aspect\tclass\trank\tterm\tprob\n")
        for t, name in enumerate(model.aspects):
            for cls in CLASS_NAMES:
                for rank, (term, p) in enumerate(top_words(model, t, cls, k), start=1):
                    fh.write(f"{name}\t{cls}\t{rank}\t{term}\t{p:.6g}\n")


def write_classification(rows, aspects, path):
    """``rows`` are ``(sentence_id, FoldInResult)`` pairs."""
    with open(path, "w", encoding="utf-8") as fh:
        head = ["sentence_id", "aspect", "polarity"]
        head += [f"theta_{a}" for a in aspects] + ["omega_positive", "omega_negative",
                                                   "tie"]
        fh.write("\t".join(head) + "\n")
        for sid, res in rows:
            if not res.classifiable:
                cells = [sid, "UNCLASSIFIABLE", "UNCLASSIFIABLE"]
                cells += [""] * (len(aspects) + 2) + [""]
            else:
                asp, tie_a = classify_aspect(res, aspects)
                pol, tie_p = classify_polarity(res)
                ties = ",".join(x for x, f in (("aspect", tie_a), ("polarity", tie_p)) if f)
                cells = [sid, asp, pol] + [f"{x:.6f}" for x in res.theta]
                cells += [f"{x:.6f}" for x in res.omega] + [ties]
            fh.write("\t".join(cells) + "\n")
