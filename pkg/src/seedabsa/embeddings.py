"""Skip-gram word embeddings and seed-set similarity.

Training is skip-gram with negative sampling over the token-id sentences of
a corpus.  Randomness comes from the classic word2vec linear congruential
generator so the numba kernel and the numpy fallback consume exactly the
same random stream.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import _accel
from .errors import EmbeddingError

log = logging.getLogger(__name__)

_LCG_MUL = 25214903917
_LCG_ADD = 11
_MASK64 = (1 << 64) - 1
TABLE_SIZE = 1_000_000
MIN_LR_FRACTION = 1e-4


class EmbeddingTable:
    """Dense vectors for a set of terms, with unit-normalized copies cached."""

    def __init__(self, terms, vectors, loss_history=()):
        vectors = np.asarray(vectors, dtype=np.float64)
        if vectors.ndim != 2 or vectors.shape[0] != len(terms):
            raise EmbeddingError("vectors must be a (len(terms), d) matrix")
        if vectors.shape[1] < 1:
            raise EmbeddingError("embedding dimension must be positive")
        if not np.all(np.isfinite(vectors)):
            raise EmbeddingError("non-finite embedding component")
        self.terms = list(terms)
        self.vectors = vectors
        self.index = {t: i for i, t in enumerate(self.terms)}
        norms = np.linalg.norm(vectors, axis=1)
        self._norms = norms
        safe = np.where(norms > 0, norms, 1.0)
        self.unit = vectors / safe[:, None]
        self.loss_history = list(loss_history)

    @property
    def dim(self):
        return self.vectors.shape[1]

    def __len__(self):
        return len(self.terms)

    def __contains__(self, term):
        return term in self.index

    def vector(self, term):
        return self.vectors[self.index[term]]


def cosine(u, v) -> float:
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise EmbeddingError(f"dimension mismatch: {u.shape} vs {v.shape}")
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu == 0 or nv == 0:
        raise EmbeddingError("cosine of a zero-norm vector")
    return float(np.clip(np.dot(u, v) / (nu * nv), -1.0, 1.0))


def _max_cosine(unit_rows, seed_units):
    """Row-wise max cosine of unit vectors against unit seed vectors.

    Shared by the direct lookup and the cache so both round identically.
    """
    best = np.full(unit_rows.shape[0], -np.inf)
    for s in seed_units:
        best = np.maximum(best, (unit_rows * s).sum(axis=1))
    return np.clip(best, -1.0, 1.0)


def _usable(table, term):
    return term in table.index and table._norms[table.index[term]] > 0


def seed_similarity(table: EmbeddingTable, word: str, seeds, floor: float = 0.001) -> float:
    """Max cosine between ``word`` and the in-table seeds, clamped at ``floor``.

    Words absent from the table get ``floor``.
    """
    present = [s for s in seeds if _usable(table, s)]
    if not present:
        raise EmbeddingError(f"no seed of {sorted(seeds)} has an embedding")
    if not _usable(table, word):
        return floor
    if word in seeds:
        return 1.0
    row = table.unit[[table.index[word]]]
    best = _max_cosine(row, table.unit[[table.index[s] for s in present]])[0]
    return float(max(best, floor))


@dataclass
class SimilarityCache:
    """``sim[w, j]`` for vocabulary term ``w`` and seed set ``j``.

    Columns are the T aspects in configuration order, then positive,
    then negative.
    """
    sim: np.ndarray
    columns: list = field(default_factory=list)

    @property
    def num_topics(self):
        return self.sim.shape[1] - 2

    @property
    def aspects(self):
        return self.sim[:, :-2]

    @property
    def positive(self):
        return self.sim[:, -2]

    @property
    def negative(self):
        return self.sim[:, -1]


def build_similarity_cache(table: EmbeddingTable, config, vocab, floor: float = 0.001) -> SimilarityCache:
    terms = vocab.terms if hasattr(vocab, "terms") else list(vocab)
    index = {t: i for i, t in enumerate(terms)}
    seed_sets = config.seed_sets()
    names = config.aspect_names + ["positive", "negative"]
    V = len(terms)
    rows = np.array([table.index.get(t, -1) for t in terms], dtype=np.int64)
    known = rows >= 0
    known[known] = table._norms[rows[known]] > 0
    unit = np.zeros((V, table.dim))
    unit[known] = table.unit[rows[known]]

    sim = np.full((V, len(seed_sets)), floor, dtype=np.float64)
    for j, seeds in enumerate(seed_sets):
        idx = [table.index[s] for s in seeds if _usable(table, s)]
        if not idx:
            raise EmbeddingError(f"no seed of {names[j]} {seeds} has an embedding")
        col = np.where(known, np.maximum(_max_cosine(unit, table.unit[idx]), floor), floor)
        for s in seeds:
            k = index.get(s)
            if k is not None and known[k]:
                col[k] = 1.0
        sim[:, j] = col
    return SimilarityCache(sim, names)


# -- training -----------------------------------------------------------------

def _unigram_table(freqs, size=TABLE_SIZE, power=0.75):
    weights = np.asarray(freqs, dtype=np.float64) ** power
    cdf = np.cumsum(weights) / weights.sum()
    points = (np.arange(size, dtype=np.float64) + 0.5) / size
    return np.searchsorted(cdf, points, side="right").clip(0, len(freqs) - 1).astype(np.int64)


@_accel.njit
def _sgns_range_numba(words, doc_ptr, d0, d1, syn0, syn1, table, window, negative,
                      lr0, done0, total, state):
    dim = syn0.shape[1]
    neu1e = np.zeros(dim)
    loss = 0.0
    pairs = 0
    done = done0
    ntable = table.shape[0]
    mul = np.uint64(_LCG_MUL)
    add = np.uint64(_LCG_ADD)
    state = np.uint64(state)
    for d in range(d0, d1):
        start = doc_ptr[d]
        stop = doc_ptr[d + 1]
        for pos in range(start, stop):
            frac = 1.0 - done / (total + 1.0)
            if frac < MIN_LR_FRACTION:
                frac = MIN_LR_FRACTION
            lr = lr0 * frac
            done += 1
            w = words[pos]
            state = state * mul + add
            b = np.int64((state >> np.uint64(16)) % np.uint64(window))
            lo = pos - window + b
            hi = pos + window - b
            if lo < start:
                lo = start
            if hi > stop - 1:
                hi = stop - 1
            for cpos in range(lo, hi + 1):
                if cpos == pos:
                    continue
                c = words[cpos]
                for k in range(dim):
                    neu1e[k] = 0.0
                for j in range(negative + 1):
                    if j == 0:
                        target = c
                        label = 1.0
                    else:
                        state = state * mul + add
                        target = table[np.int64((state >> np.uint64(16)) % np.uint64(ntable))]
                        if target == c:
                            continue
                        label = 0.0
                    f = 0.0
                    for k in range(dim):
                        f += syn0[w, k] * syn1[target, k]
                    sig = 1.0 / (1.0 + math.exp(-f))
                    if label == 1.0:
                        loss -= math.log(max(sig, 1e-300))
                    else:
                        loss -= math.log(max(1.0 - sig, 1e-300))
                    g = (label - sig) * lr
                    for k in range(dim):
                        neu1e[k] += g * syn1[target, k]
                    for k in range(dim):
                        syn1[target, k] += g * syn0[w, k]
                for k in range(dim):
                    syn0[w, k] += neu1e[k]
                pairs += 1
    return loss, pairs, state


def _sgns_range_numpy(words, doc_ptr, d0, d1, syn0, syn1, table, window, negative,
                      lr0, done0, total, state):
    loss = 0.0
    pairs = 0
    done = done0
    ntable = table.shape[0]
    state = int(state)
    for d in range(d0, d1):
        start, stop = int(doc_ptr[d]), int(doc_ptr[d + 1])
        for pos in range(start, stop):
            lr = lr0 * max(1.0 - done / (total + 1.0), MIN_LR_FRACTION)
            done += 1
            w = words[pos]
            state = (state * _LCG_MUL + _LCG_ADD) & _MASK64
            b = (state >> 16) % window
            lo = max(pos - window + b, start)
            hi = min(pos + window - b, stop - 1)
            l1 = syn0[w]
            for cpos in range(lo, hi + 1):
                if cpos == pos:
                    continue
                c = words[cpos]
                neu1e = np.zeros_like(l1)
                for j in range(negative + 1):
                    if j == 0:
                        target, label = c, 1.0
                    else:
                        state = (state * _LCG_MUL + _LCG_ADD) & _MASK64
                        target = table[(state >> 16) % ntable]
                        if target == c:
                            continue
                        label = 0.0
                    f = float(np.dot(l1, syn1[target]))
                    sig = 1.0 / (1.0 + math.exp(-f))
                    loss -= math.log(max(sig if label else 1.0 - sig, 1e-300))
                    g = (label - sig) * lr
                    neu1e += g * syn1[target]
                    syn1[target] += g * l1
                l1 += neu1e
                pairs += 1
    return loss, pairs, state


@_accel.njit(parallel=True, cache=False)
def _sgns_hogwild(words, doc_ptr, bounds, syn0, syn1, table, window, negative, lr0,
                  done0, total, states):
    nchunks = bounds.shape[0] - 1
    losses = np.zeros(nchunks)
    npairs = np.zeros(nchunks, dtype=np.int64)
    for i in _accel.prange(nchunks):
        # each worker sees a proportional share of the learning-rate schedule
        loss, pairs, st = _sgns_range_numba(words, doc_ptr, bounds[i], bounds[i + 1],
                                            syn0, syn1, table, window, negative, lr0,
                                            done0, total, states[i])
        losses[i] = loss
        npairs[i] = pairs
        states[i] = st
    return losses.sum(), npairs.sum()


def train_skipgram(corpus, params, *, use_numba=None, init_vectors=None) -> EmbeddingTable:
    """Train skip-gram negative-sampling vectors for every vocabulary term.

    Deterministic for a fixed ``params.rng_seed`` when ``params.workers == 1``.
    With more workers (numba only) threads update shared weights without
    locking, which is faster but not reproducible.
    """
    dim, window, negative = params.embedding_dims, params.window, params.negative_samples
    epochs = params.epochs
    if dim < 1:
        raise EmbeddingError("embedding dimension must be positive")
    if window < 1 or negative < 1 or epochs < 1:
        raise EmbeddingError("window, negative_samples and epochs must be positive")
    words, doc_ptr = corpus.flat()
    n_tokens = len(words)
    if n_tokens == 0:
        raise EmbeddingError("empty corpus")
    if n_tokens < window:
        raise EmbeddingError(f"corpus has {n_tokens} tokens, fewer than window {window}")
    V = len(corpus.vocab)
    rng = np.random.default_rng(params.rng_seed)
    if init_vectors is None:
        syn0 = (rng.random((V, dim)) - 0.5) / dim
    else:
        syn0 = np.array(init_vectors, dtype=np.float64)
    syn1 = np.zeros((V, dim))
    freqs = np.bincount(words, minlength=V)
    table = _unigram_table(np.maximum(freqs, 1))
    total = epochs * n_tokens
    state = int(params.rng_seed) & _MASK64
    numba_path = _accel.pick(use_numba)
    workers = params.workers if numba_path else 1
    history = []
    words = np.ascontiguousarray(words, dtype=np.int64)
    doc_ptr = np.ascontiguousarray(doc_ptr, dtype=np.int64)
    for epoch in range(epochs):
        done0 = epoch * n_tokens
        if workers > 1:
            bounds = np.linspace(0, len(doc_ptr) - 1, workers + 1).astype(np.int64)
            states = np.array([(state + 7919 * (i + 1)) & _MASK64 for i in range(workers)],
                              dtype=np.uint64)
            loss, pairs = _sgns_hogwild(words, doc_ptr, bounds, syn0, syn1, table, window,
                                        negative, params.learning_rate, done0, total, states)
            state = int(states[0])
        else:
            kernel = _sgns_range_numba if numba_path else _sgns_range_numpy
            loss, pairs, state = kernel(words, doc_ptr, 0, len(doc_ptr) - 1, syn0, syn1,
                                        table, window, negative, params.learning_rate,
                                        done0, total, np.uint64(state) if numba_path else state)
            state = int(state)
        history.append(float(loss) / max(int(pairs), 1))
        log.info("skip-gram epoch %d: mean pair loss %.4f", epoch + 1, history[-1])
    if not np.all(np.isfinite(syn0)):
        raise EmbeddingError("training diverged (non-finite vectors)")
    return EmbeddingTable(corpus.vocab.terms, syn0, history)


# -- file format --------------------------------------------------------------

def save_embeddings(table: EmbeddingTable, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{len(table)} {table.dim}\n")
        for term, vec in zip(table.terms, table.vectors):
            fh.write(term + " " + " ".join(repr(float(x)) for x in vec) + "\n")


def load_embeddings(path) -> EmbeddingTable:
    try:
        with open(path, encoding="utf-8") as fh:
            header = fh.readline().split()
            if len(header) != 2:
                raise EmbeddingError(f"{path}: first line must be 'V d'")
            n, d = int(header[0]), int(header[1])
            terms, rows = [], []
            for lineno, line in enumerate(fh, start=2):
                parts = line.rstrip("\n").split(" ")
                if not line.strip():
                    continue
                if len(parts) != d + 1:
                    raise EmbeddingError(f"{path}:{lineno}: expected {d} components")
                terms.append(parts[0])
                rows.append([float(x) for x in parts[1:]])
    except (OSError, ValueError) as exc:
        raise EmbeddingError(f"cannot read embeddings {path}: {exc}") from exc
    if len(terms) != n:
        raise EmbeddingError(f"{path}: header says {n} vectors, found {len(terms)}")
    return EmbeddingTable(terms, np.array(rows).reshape(n, d))
