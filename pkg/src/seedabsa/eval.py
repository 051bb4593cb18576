"""Classification metrics, baselines, balanced sampling and separation scoring."""

import json
import logging
import math
from collections import Counter
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import sparse

from .corpus import tokenize
from .errors import EvaluationError

log = logging.getLogger(__name__)

NB_VOCAB_CAP = 80_000


@dataclass
class ConfusionMatrix:
    labels: list
    counts: np.ndarray    # counts[gold, predicted]

    @property
    def total(self):
        return int(self.counts.sum())

    @property
    def accuracy(self):
        return float(np.trace(self.counts)) / self.total if self.total else 0.0


def confusion(predictions, golds, labels=None):
    predictions, golds = list(predictions), list(golds)
    if len(predictions) != len(golds):
        raise EvaluationError(
            f"length mismatch: {len(predictions)} predictions, {len(golds)} golds")
    if labels is None:
        labels = sorted(set(golds) | set(predictions))
    pos = {lab: i for i, lab in enumerate(labels)}
    m = np.zeros((len(labels), len(labels)), dtype=np.int64)
    for p, g in zip(predictions, golds):
        if p not in pos or g not in pos:
            raise EvaluationError(f"unknown label {p if p not in pos else g!r}")
        m[pos[g], pos[p]] += 1
    return ConfusionMatrix(list(labels), m)


def _f1(p, r):
    return 2 * p * r / (p + r) if p + r > 0 else 0.0


@dataclass
class EvalReport:
    accuracy: float
    per_class: dict          # label -> {"precision", "recall", "f1", "support"}
    macro_precision: float
    macro_recall: float
    macro_f1: float
    confusion: list
    labels: list
    baselines: dict = field(default_factory=dict)
    subset: Optional[str] = None

    def to_dict(self):
        return asdict(self)


def score(predictions, golds, labels=None) -> EvalReport:
    """Accuracy and per-class / macro precision, recall and F1."""
    cm = confusion(predictions, golds, labels)
    per = {}
    for k, lab in enumerate(cm.labels):
        tp = cm.counts[k, k]
        pred = cm.counts[:, k].sum()
        gold = cm.counts[k, :].sum()
        p = tp / pred if pred else 0.0
        r = tp / gold if gold else 0.0
        per[lab] = {"precision": float(p), "recall": float(r), "f1": float(_f1(p, r)),
                    "support": int(gold)}
    n = len(cm.labels)
    mp = sum(v["precision"] for v in per.values()) / n if n else 0.0
    mr = sum(v["recall"] for v in per.values()) / n if n else 0.0
    return EvalReport(cm.accuracy, per, mp, mr, _f1(mp, mr), cm.counts.tolist(),
                      list(cm.labels))


def balanced_subsets(items: Sequence, labels: Sequence, per_class=100, num_subsets=5,
                     rng_seed=0):
    """``num_subsets`` lists of indices, each with exactly ``per_class`` per label.

    Within a subset sampling is without replacement; subsets are drawn
    independently of each other.
    """
    if len(items) != len(labels):
        raise EvaluationError("items and labels differ in length")
    by = {}
    for i, lab in enumerate(labels):
        by.setdefault(lab, []).append(i)
    short = {lab: len(ix) for lab, ix in by.items() if len(ix) < per_class}
    if short:
        raise EvaluationError(
            f"not enough sentences for {per_class} per class: {short}")
    rng = np.random.default_rng(rng_seed)
    out = []
    for _ in range(num_subsets):
        idx = []
        for lab in sorted(by):
            pool = np.array(by[lab])
            idx.extend(pool[rng.choice(len(pool), size=per_class, replace=False)].tolist())
        out.append(idx)
    return out


# -- baselines ----------------------------------------------------------------

def majority_baseline(train_labels, test_items):
    if not len(train_labels):
        raise EvaluationError("empty training set")
    counts = Counter(train_labels)
    best = max(counts.values())
    label = min(lab for lab, c in counts.items() if c == best)
    return [label] * len(test_items)


class TfidfNaiveBayes:
    """Multinomial Naive Bayes over tf-idf weighted bag-of-words vectors.

    tf is the raw count, idf is ``log(N / df)``, rows are L2-normalized and
    the vocabulary keeps the ``vocab_cap`` most frequent training terms.
    """

    def __init__(self, smoothing=1.0, vocab_cap=NB_VOCAB_CAP, stopwords=frozenset()):
        self.smoothing = smoothing
        self.vocab_cap = vocab_cap
        self.stopwords = frozenset(stopwords)

    def _tokens(self, text):
        return [t for t in tokenize(text) if t not in self.stopwords]

    def _counts(self, texts):
        rows, cols, vals = [], [], []
        for r, text in enumerate(texts):
            c = Counter(self.index[t] for t in self._tokens(text) if t in self.index)
            for k, n in sorted(c.items()):
                rows.append(r)
                cols.append(k)
                vals.append(n)
        return sparse.csr_matrix((np.array(vals, dtype=np.float64), (rows, cols)),
                                 shape=(len(texts), len(self.index)))

    def _tfidf(self, X):
        X = X.multiply(self.idf[None, :]).tocsr()
        norms = np.sqrt(np.asarray(X.multiply(X).sum(axis=1)).ravel())
        norms[norms == 0] = 1.0
        return sparse.diags(1.0 / norms) @ X

    def fit(self, texts, labels):
        if not len(texts):
            raise EvaluationError("empty training set")
        if len(texts) != len(labels):
            raise EvaluationError("texts and labels differ in length")
        freq = Counter()
        for text in texts:
            freq.update(self._tokens(text))
        kept = sorted(freq.items(), key=lambda kv: (-kv[1], kv[0]))[:self.vocab_cap]
        self.terms = sorted(t for t, _ in kept)
        self.index = {t: i for i, t in enumerate(self.terms)}
        counts = self._counts(texts)
        df = np.asarray((counts > 0).sum(axis=0)).ravel()
        n = counts.shape[0]
        self.idf = np.log(n / np.maximum(df, 1))
        X = self._tfidf(counts)
        self.classes = sorted(set(labels))
        y = np.array([self.classes.index(lab) for lab in labels])
        Y = sparse.csr_matrix((np.ones(n), (y, np.arange(n))), shape=(len(self.classes), n))
        fc = np.asarray((Y @ X).todense()) + self.smoothing
        self.log_prob = np.log(fc / fc.sum(axis=1, keepdims=True))
        prior = np.bincount(y, minlength=len(self.classes)) / n
        self.log_prior = np.log(prior)
        return self

    def decision(self, texts):
        X = self._tfidf(self._counts(texts))
        return np.asarray(X @ self.log_prob.T) + self.log_prior[None, :]

    def predict(self, texts):
        # argmax keeps the first (lowest sorted) class on ties
        return [self.classes[k] for k in np.argmax(self.decision(texts), axis=1)]


def naive_bayes_baseline(train_texts, train_labels, test_texts, **kw):
    return TfidfNaiveBayes(**kw).fit(train_texts, train_labels).predict(test_texts)


def kfold_indices(n, k=10, rng_seed=0):
    """``k`` (train, test) index splits after one seeded shuffle."""
    if not 2 <= k <= n:
        raise EvaluationError(f"need 2 <= k <= n, got k={k}, n={n}")
    perm = np.random.default_rng(rng_seed).permutation(n)
    folds = np.array_split(perm, k)
    return [(np.concatenate([f for j, f in enumerate(folds) if j != i]), folds[i])
            for i in range(k)]


def cross_validate(texts, labels, method, k=10, rng_seed=0):
    """Mean accuracy of ``method(train_texts, train_labels, test_texts)``."""
    texts, labels = list(texts), list(labels)
    accs = []
    for tr, te in kfold_indices(len(texts), k, rng_seed):
        pred = method([texts[i] for i in tr], [labels[i] for i in tr],
                      [texts[i] for i in te])
        gold = [labels[i] for i in te]
        accs.append(sum(p == g for p, g in zip(pred, gold)) / len(gold))
    return float(np.mean(accs)), accs


# -- separation ---------------------------------------------------------------

def load_lexicon(path):
    """One word per line; blank lines and ``;`` comments skipped."""
    try:
        with open(path, encoding="utf-8", errors="replace") as fh:
            return [w.strip().lower() for w in fh
                    if w.strip() and not w.lstrip().startswith(";")]
    except OSError as exc:
        raise EvaluationError(f"cannot read lexicon {path}: {exc}") from exc


@dataclass
class SeparationScore:
    aspect_terms: float      # share of gold aspect-term occurrences with y = A
    opinion_words: float     # share of lexicon-word occurrences with y = O
    aspect_occurrences: int
    opinion_occurrences: int
    type_aspect_terms: float  # share of gold terms whose majority assignment is A
    type_opinion_words: float


def separation_score(words, y, vocab, lexicon, aspect_terms) -> SeparationScore:
    """Occurrence-level (and type-level) agreement of the switch assignments.

    ``words`` and ``y`` are per-token arrays of a sampler state.
    """
    lex = sorted({vocab[w] for w in lexicon if w in vocab})
    asp = sorted({vocab[w] for w in aspect_terms if w in vocab})
    if not lex:
        raise EvaluationError("no lexicon word occurs in the vocabulary")
    if not asp:
        raise EvaluationError("no gold aspect term occurs in the vocabulary")
    words, y = np.asarray(words), np.asarray(y)
    m_o = np.isin(words, lex)
    m_a = np.isin(words, asp)
    V = len(vocab)
    o_count = np.bincount(words[y == 1], minlength=V)
    all_count = np.bincount(words, minlength=V)

    def type_share(ids, want_o):
        ids = [i for i in ids if all_count[i] > 0]
        if not ids:
            return 0.0
        frac = o_count[ids] / all_count[ids]
        return float(np.mean(frac > 0.5 if want_o else frac < 0.5))

    return SeparationScore(
        float(np.mean(y[m_a] == 0)) if m_a.any() else 0.0,
        float(np.mean(y[m_o] == 1)) if m_o.any() else 0.0,
        int(m_a.sum()), int(m_o.sum()),
        type_share(asp, False), type_share(lex, True))


# -- reports ------------------------------------------------------------------

def _clean(x):
    if isinstance(x, float) and not math.isfinite(x):
        return None
    if isinstance(x, dict):
        return {k: _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    return x


def write_json(obj, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(_clean(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_report_tsv(report: EvalReport, path, name="model"):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("system\tclass\tprecision\trecall\tf1\tsupport\n")
        for lab in report.labels:
            v = report.per_class[lab]
            fh.write(f"{name}\t{lab}\t{v['precision']:.6f}\t{v['recall']:.6f}\t"
                     f"{v['f1']:.6f}\t{v['support']}\n")
        fh.write(f"{name}\tmacro\t{report.macro_precision:.6f}\t{report.macro_recall:.6f}"
                 f"\t{report.macro_f1:.6f}\t{sum(v['support'] for v in report.per_class.values())}\n")
        fh.write(f"{name}\taccuracy\t{report.accuracy:.6f}\t\t\t\n")


def separation_from_counts(nw, vocab, lexicon, aspect_terms) -> SeparationScore:
    """Separation score from final topic-word counts ``nw[class, topic, word]``.

    Gives the same occurrence-level shares as ``separation_score`` on the
    state the counts were taken from.
    """
    nw = np.asarray(nw)
    V = nw.shape[2]
    per_word = nw.sum(axis=1)            # (3, V)
    total = per_word.sum(axis=0)
    opinion = per_word[1] + per_word[2]
    words = np.repeat(np.arange(V), total)
    # within each word's run of occurrences the aspect-term ones come first
    start = np.repeat(np.cumsum(total) - total, total)
    y = ((np.arange(len(words)) - start) >= np.repeat(total - opinion, total)).astype(np.int64)
    return separation_score(words, y, vocab, lexicon, aspect_terms)
