"""Aspect-term / opinion-word switch.

Occurrences of aspect seeds are taken as aspect-term examples and
occurrences of polarity seeds as opinion-word examples.  Each example is
described only by the Brown clusters of its neighbours at offsets -2, -1,
+1 and +2, so the classifier learns the contexts in which each word class
appears rather than the seed words themselves.  A two-class maximum entropy
model over those features then gives every token occurrence a probability
pair ``(pi_A, pi_O)``.
"""

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize, sparse

from .errors import ConvergenceError, SeparationError

log = logging.getLogger(__name__)

OFFSETS = (-2, -1, 1, 2)
PAD = "<pad>"
CLASSES = ("A", "O")
MODEL_FORMAT = "seedabsa-maxent"
MODEL_VERSION = 1


def feature_name(offset, path):
    return f"{offset:+d}:{path}"


def context_features(tokens, i, clusters):
    """Position-tagged cluster features of the occurrence ``tokens[i]``."""
    out = []
    n = len(tokens)
    for off in OFFSETS:
        j = i + off
        path = clusters.path_of(tokens[j]) if 0 <= j < n else PAD
        out.append(feature_name(off, path))
    return out


@dataclass(frozen=True)
class TrainingInstance:
    label: str
    features: tuple
    sentence: int
    position: int


def bootstrap_instances(corpus, config, clusters):
    """One instance per seed occurrence: aspect seeds are A, polarity seeds O."""
    if len(clusters.term_cluster) != len(corpus.vocab):
        raise SeparationError("cluster assignment does not cover the vocabulary")
    vocab = corpus.vocab
    label_of = {}
    for s in config.aspect_seed_words():
        if s in vocab:
            label_of[vocab[s]] = "A"
    for s in config.polarity_seed_words():
        if s in vocab:
            label_of[vocab[s]] = "O"
    out = []
    for si, sent in enumerate(corpus.sentences):
        toks = sent.tokens
        for i, w in enumerate(toks):
            lab = label_of.get(int(w))
            if lab is not None:
                out.append(TrainingInstance(lab, tuple(context_features(toks, i, clusters)),
                                            si, i))
    n_a = sum(1 for x in out if x.label == "A")
    if n_a == 0:
        raise SeparationError("no aspect-term instances")
    if n_a == len(out):
        raise SeparationError("no opinion-word instances")
    return out


@dataclass
class SeparationModel:
    """Per-class weights ``weights[f] = (lambda_A, lambda_O)`` plus biases."""
    features: list
    weights: np.ndarray
    bias: np.ndarray
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64).reshape(-1, 2)
        self.bias = np.asarray(self.bias, dtype=np.float64).reshape(2)
        self.index = {f: i for i, f in enumerate(self.features)}
        if not (np.all(np.isfinite(self.weights)) and np.all(np.isfinite(self.bias))):
            raise SeparationError("non-finite weights")

    @classmethod
    def zero(cls):
        return cls([], np.zeros((0, 2)), np.zeros(2))

    def scores(self, features):
        s = self.bias.copy()
        for f in features:
            k = self.index.get(f)
            if k is not None:
                s += self.weights[k]
        return s

    def pi(self, features):
        return _softmax2(self.scores(features)[None, :])[0]


def _softmax2(scores):
    # stable two-class softmax; rows sum to one to rounding
    d = scores[:, 1] - scores[:, 0]
    p_a = np.where(d >= 0, np.exp(-np.abs(d)) / (1.0 + np.exp(-np.abs(d))),
                   1.0 / (1.0 + np.exp(-np.abs(d))))
    return np.stack([p_a, 1.0 - p_a], axis=1)


def _design(instances, index):
    rows, cols = [], []
    for r, inst in enumerate(instances):
        for f in inst.features:
            k = index.get(f)
            if k is not None:
                rows.append(r)
                cols.append(k)
    data = np.ones(len(rows))
    return sparse.csr_matrix((data, (rows, cols)), shape=(len(instances), len(index)))


def _objective(theta, X, Y, l2):
    """Negative penalized log-likelihood and its gradient.

    ``theta`` packs the (F, 2) weights followed by the two biases.
    """
    F = X.shape[1]
    W = theta[:2 * F].reshape(F, 2)
    b = theta[2 * F:]
    S = X @ W + b
    m = S.max(axis=1, keepdims=True)
    lse = m[:, 0] + np.log(np.exp(S - m).sum(axis=1))
    nll = float(lse.sum() - (S * Y).sum())
    P = np.exp(S - lse[:, None])
    R = P - Y
    gW = X.T @ R + l2 * W
    gb = R.sum(axis=0)
    f = nll + 0.5 * l2 * float((W * W).sum())
    return f, np.concatenate([np.asarray(gW).ravel(), gb])


def train_maxent(instances, *, l2=1.0, max_iter=1000, tol=1e-6):
    """Fit the L2-penalized two-class MaxEnt model with L-BFGS.

    The bias terms are not penalized.  Raises ``ConvergenceError`` when the
    optimizer hits ``max_iter`` with a gradient norm above ``tol``.
    """
    if not instances:
        raise SeparationError("no training instances")
    labels = np.array([CLASSES.index(x.label) for x in instances])
    if len(np.unique(labels)) < 2:
        raise SeparationError("both classes must be represented")
    features = sorted({f for x in instances for f in x.features})
    index = {f: i for i, f in enumerate(features)}
    X = _design(instances, index)
    Y = np.zeros((len(instances), 2))
    Y[np.arange(len(instances)), labels] = 1.0
    theta0 = np.zeros(2 * len(features) + 2)
    f0, _ = _objective(theta0, X, Y, l2)
    res = optimize.minimize(_objective, theta0, args=(X, Y, l2), jac=True,
                            method="L-BFGS-B",
                            options={"maxiter": max_iter, "gtol": tol, "ftol": 1e-15})
    fval, grad = _objective(res.x, X, Y, l2)
    gnorm = float(np.linalg.norm(grad))
    if res.nit >= max_iter and gnorm > tol:
        raise ConvergenceError(f"MaxEnt did not converge in {max_iter} iterations",
                               gnorm)
    F = len(features)
    counts = np.bincount(labels, minlength=2)
    info = {"instances_A": int(counts[0]), "instances_O": int(counts[1]),
            "objective": fval, "objective_at_zero": f0, "grad_norm": gnorm,
            "iterations": int(res.nit)}
    log.info("maxent: %d features, %d/%d instances, |g|=%.2e after %d iterations",
             F, counts[0], counts[1], gnorm, res.nit)
    return SeparationModel(features, res.x[:2 * F].reshape(F, 2), res.x[2 * F:], info)


def predict_pi(tokens, i, clusters, model):
    """``(pi_A, pi_O)`` for occurrence ``i`` of a token sequence."""
    return model.pi(context_features(tokens, i, clusters))


def sentence_pi(tokens, clusters, model):
    """``(n, 2)`` array of switch probabilities for every token of a sentence."""
    n = len(tokens)
    if n == 0:
        return np.zeros((0, 2))
    S = np.tile(model.bias, (n, 1))
    for i in range(n):
        for f in context_features(tokens, i, clusters):
            k = model.index.get(f)
            if k is not None:
                S[i] += model.weights[k]
    return _softmax2(S)


def corpus_pi(corpus, clusters, model):
    """Switch probabilities for every token, in ``corpus.flat()`` order."""
    parts = [sentence_pi(s.tokens, clusters, model) for s in corpus.sentences]
    return np.concatenate(parts) if parts else np.zeros((0, 2))


def save_model(model, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# {MODEL_FORMAT} {MODEL_VERSION}\n")
        fh.write("classes\t" + "\t".join(CLASSES) + "\n")
        fh.write(f"features\t{len(model.features)}\n")
        fh.write(f"bias\t{float(model.bias[0])!r}\t{float(model.bias[1])!r}\n")
        for f, (a, o) in zip(model.features, model.weights):
            fh.write(f"{f}\t{float(a)!r}\t{float(o)!r}\n")


def load_model(path):
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise SeparationError(f"cannot read separation model {path}: {exc}") from exc
    if not lines or not lines[0].startswith(f"# {MODEL_FORMAT} "):
        raise SeparationError(f"{path} is not a separation model")
    try:
        if lines[1].split("\t")[1:] != list(CLASSES):
            raise SeparationError(f"{path}: unexpected classes line")
        count = int(lines[2].split("\t")[1])
        bias = [float(x) for x in lines[3].split("\t")[1:3]]
        feats, weights = [], []
        for line in lines[4:4 + count]:
            f, a, o = line.split("\t")
            feats.append(f)
            weights.append((float(a), float(o)))
    except (IndexError, ValueError) as exc:
        raise SeparationError(f"{path}: malformed model file ({exc})") from exc
    if len(feats) != count:
        raise SeparationError(f"{path}: expected {count} features, found {len(feats)}")
    return SeparationModel(feats, np.array(weights).reshape(-1, 2), bias)
