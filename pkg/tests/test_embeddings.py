import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from seedabsa.config import AspectSpec, RunParameters, SeedConfiguration
from seedabsa.corpus import ingest
from seedabsa.embeddings import (EmbeddingTable, build_similarity_cache, cosine,
                                 load_embeddings, save_embeddings, seed_similarity,
                                 train_skipgram)
from seedabsa.errors import EmbeddingError


def small_params(**kw):
    base = dict(embedding_dims=20, window=2, epochs=5, negative_samples=5, min_count=1)
    base.update(kw)
    return RunParameters(**base).with_defaults(2)


def shared_context_corpus(n=300, seed=0):
    """``a`` and ``b`` share contexts; ``c`` lives in disjoint ones."""
    rng = np.random.default_rng(seed)
    left, right = ["l1", "l2", "l3"], ["r1", "r2", "r3"]
    other_l, other_r = ["m1", "m2", "m3"], ["s1", "s2", "s3"]
    lines = []
    for _ in range(n):
        lines.append(f"{rng.choice(left)} {rng.choice(['a', 'b'])} {rng.choice(right)}.")
        lines.append(f"{rng.choice(other_l)} c {rng.choice(other_r)}.")
    return ingest(lines, min_count=1, stopwords=())


def test_cosine_examples():
    v = np.array([0.3, -1.2, 2.0])
    assert cosine(v, v) == pytest.approx(1.0)
    assert cosine([1, 0], [0, 1]) == 0.0
    assert cosine([1, 0], [-1, 0]) == -1.0
    with pytest.raises(EmbeddingError):
        cosine([0, 0], [1, 0])
    with pytest.raises(EmbeddingError):
        cosine([1, 0, 0], [1, 0])


def test_seed_similarity_examples():
    table = EmbeddingTable(["w", "s1", "s2", "seed"],
                           [[1.0, 0.0], [0.3, np.sqrt(1 - 0.09)], [0.5, np.sqrt(0.75)],
                            [0.0, 1.0]])
    assert seed_similarity(table, "seed", {"seed"}) == 1.0
    assert seed_similarity(table, "w", {"s1", "s2"}) == pytest.approx(0.5)
    assert seed_similarity(table, "unknown", {"s1"}) == 0.001
    assert seed_similarity(table, "w", {"seed"}) == 0.001     # cosine 0 clamps to floor
    with pytest.raises(EmbeddingError):
        seed_similarity(table, "w", {"nowhere"})


def _config(aspects, pos, neg):
    return SeedConfiguration(tuple(AspectSpec(n, tuple(s)) for n, s in aspects),
                             frozenset(pos), frozenset(neg), "en")


def test_cache_shape_and_direct_equivalence():
    rng = np.random.default_rng(1)
    terms = ["x", "y", "z", "p", "n"]
    table = EmbeddingTable(terms, rng.normal(size=(5, 4)))
    config = _config([("t1", ["x"]), ("t2", ["y", "z"])], ["p"], ["n"])
    cache = build_similarity_cache(table, config, terms)
    assert cache.sim.shape == (5, 4)
    for w, term in enumerate(terms):
        for j, seeds in enumerate(config.seed_sets()):
            assert cache.sim[w, j] == seed_similarity(table, term, seeds)
    assert cache.sim[0, 0] == 1.0 and cache.sim[3, 2] == 1.0
    assert np.all(cache.sim >= 0.001) and np.all(cache.sim <= 1.0)


def test_cache_toy_shape_and_identical_vectors():
    terms = ["a", "b", "c"]
    config = _config([("t1", ["a"]), ("t2", ["b"])], ["c"], ["a"])
    cache = build_similarity_cache(EmbeddingTable(terms, np.ones((3, 3))), config, terms)
    assert cache.sim.shape == (3, 4)
    np.testing.assert_allclose(cache.sim, 1.0)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.integers(2, 6))
def test_bounds_and_monotone_in_seeds(seed, dim):
    rng = np.random.default_rng(seed)
    terms = [f"w{i}" for i in range(8)]
    table = EmbeddingTable(terms, rng.normal(size=(8, dim)))
    small, big = {"w0"}, {"w0", "w1"}
    for t in terms:
        a, b = seed_similarity(table, t, small), seed_similarity(table, t, big)
        assert 0.001 <= a <= b <= 1.0


def test_shared_contexts_give_closer_vectors():
    corpus = shared_context_corpus()
    table = train_skipgram(corpus, small_params(rng_seed=3))
    ab = cosine(table.vector("a"), table.vector("b"))
    ac = cosine(table.vector("a"), table.vector("c"))
    assert ab > ac


def test_degenerate_single_token_corpus():
    corpus = ingest(["food food food food food food."], min_count=1, stopwords=())
    table = train_skipgram(corpus, small_params())
    assert np.all(np.isfinite(table.vectors))


def test_input_validation():
    corpus = ingest(["a b."], min_count=1, stopwords=())
    with pytest.raises(EmbeddingError, match="fewer than window"):
        train_skipgram(corpus, small_params(window=5))
    with pytest.raises(EmbeddingError):
        EmbeddingTable(["a"], np.zeros((1, 0)))
    with pytest.raises(EmbeddingError):
        EmbeddingTable(["a"], [[np.nan]])


def test_backends_agree_and_training_is_deterministic():
    corpus = shared_context_corpus(60)
    params = small_params()
    fast = train_skipgram(corpus, params, use_numba=True)
    again = train_skipgram(corpus, params, use_numba=True)
    slow = train_skipgram(corpus, params, use_numba=False)
    assert np.array_equal(fast.vectors, again.vectors)
    np.testing.assert_allclose(fast.vectors, slow.vectors, rtol=1e-9, atol=1e-12)
    np.testing.assert_allclose(fast.loss_history, slow.loss_history, rtol=1e-9)


def test_loss_decreases_over_epochs():
    corpus = shared_context_corpus(200)
    drops = 0
    for seed in range(5):
        table = train_skipgram(corpus, small_params(rng_seed=seed, learning_rate=0.01,
                                                    epochs=6))
        h = table.loss_history
        drops += all(b <= a for a, b in zip(h, h[1:]))
    assert drops >= 4


def test_file_round_trip_and_pretrained_equivalence(tmp_path):
    corpus = shared_context_corpus(40)
    table = train_skipgram(corpus, small_params())
    save_embeddings(table, tmp_path / "e.txt")
    back = load_embeddings(tmp_path / "e.txt")
    assert back.terms == table.terms
    assert np.array_equal(back.vectors, table.vectors)
    config = _config([("t1", ["a"]), ("t2", ["c"])], ["l1"], ["r1"])
    assert np.array_equal(build_similarity_cache(back, config, corpus.vocab).sim,
                          build_similarity_cache(table, config, corpus.vocab).sim)
    assert (tmp_path / "e.txt").read_text().splitlines()[0] == f"{len(table)} 20"


def test_cache_equals_direct_lookup_exactly_on_trained_table():
    corpus = shared_context_corpus(80)
    table = train_skipgram(corpus, small_params(rng_seed=9))
    config = _config([("t1", ["a", "l1"]), ("t2", ["c"])], ["r1", "r2"], ["s1"])
    cache = build_similarity_cache(table, config, corpus.vocab)
    direct = np.array([[seed_similarity(table, t, seeds) for seeds in config.seed_sets()]
                       for t in corpus.vocab.terms])
    assert np.array_equal(cache.sim, direct)
