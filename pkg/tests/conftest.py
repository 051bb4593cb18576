import os
import time
from dataclasses import dataclass
from importlib import resources

import numpy as np
import pytest

from seedabsa import brown, pipeline, synthetic
from seedabsa.config import RunParameters
from seedabsa.embeddings import train_skipgram
from seedabsa.tmodel import classify_aspect, classify_polarity

_CRITERIA = []


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(_CRITERIA):
        terminalreporter.write_line(line[1])


@pytest.fixture
def criterion():
    """Record one acceptance line, print it, and fail the test if it failed."""
    def record(number, title, ok, detail):
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {title} ({detail})"
        _CRITERIA.append((number, line))
        print(line)
        assert ok, line
    return record


def data_path(name):
    return str(resources.files("seedabsa") / "data" / name)


@pytest.fixture(scope="session")
def demo():
    names = ("reviews", "gold", "config", "lexicon", "aspect_terms")
    files = {"reviews": "demo_reviews.txt", "gold": "demo_gold.tsv",
             "config": "demo_config.txt", "lexicon": "demo_lexicon.txt",
             "aspect_terms": "demo_aspect_terms.txt"}
    out = {n: data_path(files[n]) for n in names}
    for p in out.values():
        assert os.path.exists(p), p
    return out


@dataclass
class SyntheticBase:
    data: synthetic.SyntheticCorpus
    params: RunParameters
    corpus: object
    embeddings: object
    clusters: object
    seconds: float

    @property
    def texts(self):
        return [s.text for s in self.data.sentences]


@dataclass
class SyntheticOutcome:
    config: object
    result: pipeline.PipelineResult
    folded: list
    aspect_accuracy: float
    polarity_accuracy: float
    seconds: float


def run_synthetic(base, config):
    """Train on the shared fixture stages with ``config`` and fold every sentence back in."""
    t0 = time.perf_counter()
    res = pipeline.run(None, config, base.params, corpus=base.corpus,
                       embeddings=base.embeddings, clusters=base.clusters)
    folded = pipeline.classify_texts(base.texts, res.model, res.clusters, res.separator,
                                     res.corpus.vocab, base.params)
    gold = base.data.sentences
    acc_a = np.mean([classify_aspect(r, config.aspect_names)[0] == g.aspect
                     for r, g in zip(folded, gold)])
    acc_p = np.mean([classify_polarity(r)[0] == g.polarity for r, g in zip(folded, gold)])
    return SyntheticOutcome(config, res, folded, float(acc_a), float(acc_p),
                            time.perf_counter() - t0)


@pytest.fixture(scope="session")
def synthetic_base():
    t0 = time.perf_counter()
    data = synthetic.generate(2000, rng_seed=0)
    params = RunParameters().with_defaults(3)
    corpus = pipeline.prepare(data.sentences, synthetic.seed_config(0), params)
    emb = train_skipgram(corpus, params)
    clusters = brown.brown_cluster(corpus, params.num_brown_clusters)
    return SyntheticBase(data, params, corpus, emb, clusters, time.perf_counter() - t0)


@pytest.fixture(scope="session")
def synthetic_outcome(synthetic_base):
    return run_synthetic(synthetic_base, synthetic.seed_config(0))
