import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from seedabsa import pipeline
from seedabsa.config import AspectSpec, RunParameters, SeedConfiguration
from seedabsa.corpus import Corpus, Sentence, Vocabulary
from seedabsa.embeddings import SimilarityCache
from seedabsa.errors import ModelError
from seedabsa.tmodel import (UNCLASSIFIABLE, FoldInResult, PriorSet, TopicModel,
                             classify_aspect, classify_polarity, compute_priors, fold_in,
                             gibbs_sweep, init_state, load_model, run_gibbs, save_model,
                             token_conditionals, top_words, write_classification,
                             write_top_words)
from seedabsa.tmodel.priors import A, N, P
from seedabsa.tmodel.sampler import is_sample_iteration, make_rng, point_estimates


def toy_corpus(docs, V):
    vocab = Vocabulary([f"w{i}" for i in range(V)], [5] * V)
    return Corpus([Sentence(np.array(d, dtype=np.int64)) for d in docs], vocab)


def test_alpha_from_similarity():
    corpus = toy_corpus([[0]], 1)
    cache = SimilarityCache(np.array([[0.4, 0.1, 0.3, 0.2]]))
    pr = compute_priors(corpus, cache, RunParameters().with_defaults(2))
    np.testing.assert_allclose(pr.alpha[0], [0.8 * 25, 0.2 * 25])
    np.testing.assert_allclose(pr.delta[0], [0.6 * 25, 0.4 * 25])


def test_equal_similarity_gives_uniform_alpha():
    corpus = toy_corpus([[0, 1, 1]], 2)
    cache = SimilarityCache(np.array([[0.3] * 5, [0.7] * 5]))
    pr = compute_priors(corpus, cache, RunParameters().with_defaults(3))
    np.testing.assert_allclose(pr.alpha[0], [50 / 9] * 3)


def random_setup(seed, D=6, V=7, T=3):
    rng = np.random.default_rng(seed)
    docs = [list(rng.integers(0, V, rng.integers(1, 6))) for _ in range(D)]
    corpus = toy_corpus(docs, V)
    cache = SimilarityCache(rng.uniform(0.001, 1.0, (V, T + 2)))
    p = RunParameters(iterations=30, burn_in=10, lag=5).with_defaults(T)
    pi = rng.uniform(0.05, 0.95, corpus.num_tokens)
    return corpus, cache, p, np.stack([pi, 1 - pi], axis=1)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 100_000))
def test_prior_normalization_and_beta_layout(seed):
    corpus, cache, p, _ = random_setup(seed)
    pr = compute_priors(corpus, cache, p)
    assert np.all(pr.alpha > 0) and np.all(pr.delta > 0) and np.all(pr.beta > 0)
    np.testing.assert_allclose(pr.alpha.sum(axis=1), p.alpha_base, rtol=0, atol=1e-9)
    np.testing.assert_allclose(pr.delta.sum(axis=1), p.delta_base, rtol=0, atol=1e-9)
    np.testing.assert_allclose(pr.beta[A], cache.aspects.T * p.beta_base)
    for c, col in ((P, cache.positive), (N, cache.negative)):
        assert np.all(pr.beta[c] == pr.beta[c][0])
        np.testing.assert_allclose(pr.beta[c][0], col * p.beta_base)


def start(corpus, pi, T, seed=0):
    words, ptr = corpus.flat()
    return init_state(words, ptr, pi, T, len(corpus.vocab), make_rng(seed))


def test_init_state_counts_and_single_topic():
    corpus, cache, p, pi = random_setup(1)
    state = start(corpus, pi, 3)
    state.check()
    assert np.array_equal(state.ndt.sum(axis=1), [len(s) for s in corpus.sentences])
    one = start(corpus, pi, 1)
    assert np.all(one.z == 0)


@pytest.mark.parametrize("mode", ["as-written", "derived"])
def test_backends_follow_identical_chains(mode):
    corpus, cache, p, pi = random_setup(2, D=20, V=12)
    pr = compute_priors(corpus, cache, p)
    a = start(corpus, pi, 3, seed=4)
    b = a.copy()
    rng = np.random.default_rng(0)
    for _ in range(40):
        u = rng.random((len(a.words), 3))
        gibbs_sweep(a, pr, mode, use_numba=True, u=u)
        gibbs_sweep(b, pr, mode, use_numba=False, u=u)
        for f in ("z", "y", "v", "nw", "nsum", "ndt", "ndq"):
            assert np.array_equal(getattr(a, f), getattr(b, f)), f
    a.check()
    assert np.array_equal(a.ndq.sum(axis=1),
                          np.bincount(a.doc, weights=a.y, minlength=len(corpus)))


def test_biased_beta_pulls_topic():
    # topic 3 concentrates its aspect prior on word 0, the others on word 1
    probs = []
    for bias in (1.0, 10.0, 100.0, 10_000.0):
        corpus = toy_corpus([[0, 1]], 2)
        beta = np.full((3, 4, 2), 0.1)
        beta[A, 3, 0] = 0.1 * bias
        beta[A, :3, 1] = 0.1 * bias
        pr = PriorSet(np.full((1, 4), 0.5), np.full((1, 2), 1.0), beta, 2.0, 2.0, 0.1)
        state = start(corpus, np.array([[0.5, 0.5]] * 2), 4)
        state.y[:] = 0
        state.nw, state.nsum, state.ndt, state.ndq = state.recount()
        pz, _, _ = token_conditionals(state, pr, 0, "derived")
        probs.append(pz[3] / pz.sum())
    assert all(b > a for a, b in zip(probs, probs[1:]))
    assert probs[-1] > 0.99


@pytest.mark.parametrize("mode", ["as-written", "derived"])
def test_symmetric_setting_gives_uniform_topics(mode):
    corpus = toy_corpus([[0, 0, 0]], 1)
    pr = PriorSet(np.full((1, 2), 0.5), np.full((1, 2), 0.5), np.full((3, 2, 1), 0.3),
                  1.0, 1.0, 0.3)
    state = start(corpus, np.array([[0.5, 0.5]] * 3), 2)
    state.z[:] = [0, 1, 0]
    state.y[:] = 0
    state.nw, state.nsum, state.ndt, state.ndq = state.recount()
    pz, _, _ = token_conditionals(state, pr, 2, mode)
    assert pz[0] == pytest.approx(pz[1], rel=1e-14)


def test_run_gibbs_sample_count_and_determinism():
    corpus, cache, _, pi = random_setup(3)
    p = RunParameters().with_defaults(3)
    pr = compute_priors(corpus, cache, p)
    one, s1 = run_gibbs(corpus, pr, pi, p)
    two, s2 = run_gibbs(corpus, pr, pi, p)
    assert one.num_samples == 40
    assert sum(is_sample_iteration(i, 100, 10) for i in range(1, 501)) == 40
    for f in ("theta", "omega", "phi"):
        assert np.array_equal(getattr(one, f), getattr(two, f))
        rows = getattr(one, f).sum(axis=-1)
        np.testing.assert_allclose(rows, 1.0, atol=1e-9)
    assert np.array_equal(s1.z, s2.z)


def test_single_topic_theta_is_one():
    corpus, _, _, pi = random_setup(4, T=1)
    cache = SimilarityCache(np.random.default_rng(0).uniform(0.01, 1, (7, 3)))
    p = RunParameters(iterations=20, burn_in=5, lag=5).with_defaults(1)
    summary, _ = run_gibbs(corpus, compute_priors(corpus, cache, p), pi, p)
    np.testing.assert_allclose(summary.theta, 1.0)


def test_unknown_mode():
    corpus, cache, p, pi = random_setup(5)
    state = start(corpus, pi, 3)
    with pytest.raises(ModelError):
        gibbs_sweep(state, compute_priors(corpus, cache, p), "fast")


def tiny_model(phi_a_row, T=3):
    V = len(phi_a_row)
    phi = np.full((3, T, V), 1.0 / V)
    phi[A, 0] = phi_a_row
    return TopicModel([f"w{i}" for i in range(V)], ["food", "service", "ambience"][:T],
                      np.zeros((3, T, V), dtype=np.int64), np.full((3, T, V), 0.01),
                      np.full((V, T + 2), 0.5), phi, 1, 10.0, 10.0, "as-written")


def test_top_words():
    model = tiny_model([0.1, 0.4, 0.2, 0.2, 0.1])
    assert top_words(model, 0, "A", 1) == [("w1", 0.4)]
    full = top_words(model, "food", "A", 99)
    assert [t for t, _ in full] == ["w1", "w2", "w3", "w0", "w4"]
    for bad in ((5, "A", 1), ("drinks", "A", 1), (0, "X", 1), (0, "A", 0)):
        with pytest.raises(ModelError):
            top_words(model, *bad)


def test_classification_rules():
    res = FoldInResult(np.array([0.7, 0.2, 0.1]), np.array([0.5, 0.5]), 3)
    assert classify_aspect(res, ["food", "service", "ambience"]) == ("food", False)
    assert classify_polarity(res) == ("positive", True)
    tied = FoldInResult(np.array([0.4, 0.4, 0.2]), np.array([0.2, 0.8]), 3)
    assert classify_aspect(tied, ["food", "service", "ambience"]) == ("food", True)
    assert classify_polarity(tied) == ("negative", False)
    with pytest.raises(ModelError):
        classify_aspect(UNCLASSIFIABLE, ["food"])


def test_fold_in_edge_cases():
    model = tiny_model([0.2] * 5, T=1)
    p = RunParameters().with_defaults(1)
    assert fold_in([], model, np.zeros((0, 2)), p) is UNCLASSIFIABLE
    res = fold_in([0, 3, 3], model, np.full((3, 2), 0.5), p)
    np.testing.assert_allclose(res.theta, [1.0])
    assert res.omega.sum() == pytest.approx(1.0)


def test_dump_round_trip_and_reports(tmp_path):
    corpus, cache, p, pi = random_setup(6)
    pr = compute_priors(corpus, cache, p)
    summary, state = run_gibbs(corpus, pr, pi, p)
    config = SeedConfiguration(tuple(AspectSpec(n, (f"w{i}",)) for i, n in
                                     enumerate(["food", "service", "ambience"])),
                               frozenset({"w4"}), frozenset({"w5"}))
    model = TopicModel.from_run(corpus.vocab, config, pr, state, summary, cache, "as-written")
    save_model(model, tmp_path / "m.json")
    back = load_model(tmp_path / "m.json")
    save_model(back, tmp_path / "m2.json")
    assert (tmp_path / "m.json").read_bytes() == (tmp_path / "m2.json").read_bytes()
    assert json.loads((tmp_path / "m.json").read_text())["format"] == "seedabsa-model"
    write_top_words(model, tmp_path / "top.tsv", k=4)
    lines = (tmp_path / "top.tsv").read_text().splitlines()
    assert lines[0] == "aspect\tclass\trank\tterm\tprob"
    assert len(lines) == 1 + 3 * 3 * 4
    rows = [("a", fold_in([0, 1], model, pi[:2], p)), ("b", UNCLASSIFIABLE)]
    write_classification(rows, model.aspects, tmp_path / "c.tsv")
    out = [r.split("\t") for r in (tmp_path / "c.tsv").read_text().splitlines()]
    assert out[0][:3] == ["sentence_id", "aspect", "polarity"] and len(out[0]) == 9
    assert out[2][1] == "UNCLASSIFIABLE"


# -- synthetic fixture ----------------------------------------------------------

def test_fold_in_reproduces_training_theta(synthetic_outcome):
    theta = synthetic_outcome.result.summary.theta
    folded = synthetic_outcome.folded
    assert len(folded) == len(theta)
    tv = np.array([0.5 * np.abs(r.theta - theta[i]).sum() for i, r in enumerate(folded)])
    assert np.percentile(tv, 99) <= 0.15
    assert tv.mean() <= 0.15


def test_planted_terms_lead_aspect_lists(synthetic_base, synthetic_outcome):
    model = synthetic_outcome.result.model
    for name, planted in synthetic_base.data.aspect_terms.items():
        top = [w for w, _ in top_words(model, name, "A", 5)]
        assert set(top) <= set(planted), (name, top)


def test_planted_sentence(synthetic_base, synthetic_outcome):
    res = synthetic_outcome.result
    folded = pipeline.classify_texts(["The waiter was rude and the staff was horrible."],
                                     res.model, res.clusters, res.separator,
                                     res.corpus.vocab, synthetic_base.params)[0]
    assert classify_aspect(folded, res.model.aspects)[0] == "service"
    assert classify_polarity(folded)[0] == "negative"


def test_domain_cluster_count(synthetic_base):
    assert synthetic_base.clusters.num_clusters == min(200, len(synthetic_base.corpus.vocab))


def test_point_estimates_are_distributions(synthetic_outcome):
    res = synthetic_outcome.result
    for est in point_estimates(res.state, res.priors):
        np.testing.assert_allclose(est.sum(axis=-1), 1.0, atol=1e-9)
