import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from seedabsa.corpus import Vocabulary
from seedabsa.errors import EvaluationError
from seedabsa.eval import (TfidfNaiveBayes, balanced_subsets, confusion, cross_validate,
                           kfold_indices, majority_baseline, naive_bayes_baseline, score,
                           separation_from_counts, separation_score, write_json,
                           write_report_tsv)


def test_all_correct():
    rep = score(["a", "b", "c"], ["a", "b", "c"])
    assert rep.accuracy == 1.0
    assert all(v["f1"] == 1.0 for v in rep.per_class.values())
    assert rep.macro_f1 == 1.0


def test_binary_two_thirds():
    rep = score(["pos", "pos", "neg", "pos"], ["pos", "pos", "pos", "neg"])
    pos = rep.per_class["pos"]
    assert pos["precision"] == pytest.approx(2 / 3)
    assert pos["recall"] == pytest.approx(2 / 3)
    assert pos["f1"] == pytest.approx(2 / 3)


def test_constant_prediction_on_balanced_classes():
    gold = ["food", "service", "ambience"] * 50
    assert score(["food"] * 150, gold).accuracy == pytest.approx(1 / 3)


def test_score_errors():
    with pytest.raises(EvaluationError, match="length mismatch"):
        score(["a"], ["a", "b"])
    with pytest.raises(EvaluationError, match="unknown label"):
        score(["a", "z"], ["a", "b"], labels=["a", "b"])


labels3 = st.sampled_from(["x", "y", "z"])


@settings(max_examples=80, deadline=None)
@given(st.lists(st.tuples(labels3, labels3), min_size=1, max_size=60), st.randoms())
def test_confusion_invariants(pairs, rnd):
    pred, gold = zip(*pairs)
    cm = confusion(pred, gold, ["x", "y", "z"])
    for k, lab in enumerate(cm.labels):
        assert cm.counts[k].sum() == gold.count(lab)
        assert cm.counts[:, k].sum() == pred.count(lab)
    assert cm.accuracy == np.trace(cm.counts) / len(pairs)
    rep = score(pred, gold, ["x", "y", "z"])
    for v in list(rep.per_class.values()) + [{"precision": rep.macro_precision,
                                               "recall": rep.macro_recall,
                                               "f1": rep.macro_f1}]:
        assert all(0.0 <= v[m] <= 1.0 for m in ("precision", "recall", "f1"))
        p, r = v["precision"], v["recall"]
        assert v["f1"] == pytest.approx(2 * p * r / (p + r) if p + r else 0.0)
    shuffled = list(pairs)
    rnd.shuffle(shuffled)
    again = score(*zip(*shuffled), ["x", "y", "z"])
    assert again.to_dict() == rep.to_dict()


def test_balanced_subsets():
    labels = ["food"] * 150 + ["service"] * 120 + ["ambience"] * 100
    subsets = balanced_subsets(range(len(labels)), labels)
    assert len(subsets) == 5 and all(len(s) == 300 for s in subsets)
    for s in subsets:
        assert len(set(s)) == 300
        assert sorted(labels[i] for i in s).count("service") == 100
    assert balanced_subsets(range(len(labels)), labels) == subsets
    assert balanced_subsets(range(len(labels)), labels, rng_seed=1) != subsets
    with pytest.raises(EvaluationError, match="not enough"):
        balanced_subsets(range(len(labels)), labels, per_class=101)


@pytest.mark.parametrize("k", [2, 3, 4])
def test_majority_is_one_over_k(k):
    classes = [f"c{i}" for i in range(k)]
    test = classes * 25
    pred = majority_baseline(["c1", "c0", "c1"], test)
    correct = sum(p == g for p, g in zip(pred, test))
    assert correct * k == len(test)


def test_majority_edge_cases():
    assert score(majority_baseline(["a"] * 4, ["a"] * 3), ["a"] * 3).accuracy == 1.0
    assert majority_baseline(["b", "a"], [0]) == ["a"]
    with pytest.raises(EvaluationError):
        majority_baseline([], [1])


def test_naive_bayes_word_evidence_and_priors():
    train = ["u", "u u", "u", "v"]
    labels = ["c1", "c1", "c1", "c2"]
    assert naive_bayes_baseline(train, labels, ["u", "v", ""]) == ["c1", "c2", "c1"]
    flipped = ["c2", "c2", "c2", "c1"]
    assert naive_bayes_baseline(train, flipped, [""]) == ["c2"]
    with pytest.raises(EvaluationError):
        naive_bayes_baseline([], [], ["u"])


def test_naive_bayes_vocabulary_cap():
    nb = TfidfNaiveBayes(vocab_cap=2).fit(["a a a b b c", "a b"], ["x", "y"])
    assert nb.terms == ["a", "b"]


def test_cross_validation_folds():
    folds = kfold_indices(23, 10, rng_seed=0)
    tests = np.concatenate([te for _, te in folds])
    assert sorted(tests.tolist()) == list(range(23))
    for tr, te in folds:
        assert not set(tr) & set(te) and len(tr) + len(te) == 23
    texts = ["good"] * 20 + ["bad"] * 20
    labels = ["p"] * 20 + ["n"] * 20
    mean, accs = cross_validate(texts, labels, naive_bayes_baseline, k=10)
    assert mean == 1.0 and len(accs) == 10
    with pytest.raises(EvaluationError):
        kfold_indices(5, 6)


def _vocab():
    return Vocabulary(["pizza", "great", "waiter", "awful", "the"], [5] * 5)


def test_separation_examples():
    vocab = _vocab()
    words = np.array([0, 1, 2, 3, 1, 0, 4])
    y = np.array([0, 1, 0, 1, 1, 1, 0])
    s = separation_score(words, y, vocab, ["great", "awful", "missing"], ["pizza", "waiter"])
    assert s.opinion_words == 1.0 and s.opinion_occurrences == 3
    assert s.aspect_terms == pytest.approx(2 / 3) and s.aspect_occurrences == 3
    assert s.type_aspect_terms == 0.5 and s.type_opinion_words == 1.0
    with pytest.raises(EvaluationError):
        separation_score(words, y, vocab, ["nothing"], ["pizza"])


def test_random_assignment_is_near_half():
    rng = np.random.default_rng(0)
    words = rng.integers(0, 5, 20_000)
    y = rng.integers(0, 2, 20_000)
    s = separation_score(words, y, _vocab(), ["great", "awful"], ["pizza", "waiter"])
    assert abs(s.opinion_words - 0.5) < 0.02 and abs(s.aspect_terms - 0.5) < 0.02


def test_separation_from_counts_matches_state():
    rng = np.random.default_rng(1)
    words = rng.integers(0, 5, 500)
    y = rng.integers(0, 2, 500)
    cls = np.where(y == 0, 0, 1 + rng.integers(0, 2, 500))
    z = rng.integers(0, 3, 500)
    nw = np.zeros((3, 3, 5), dtype=np.int64)
    np.add.at(nw, (cls, z, words), 1)
    args = (_vocab(), ["great", "awful"], ["pizza", "waiter"])
    assert separation_from_counts(nw, *args) == separation_score(words, y, *args)


def test_report_files(tmp_path):
    rep = score(["a", "b", "b"], ["a", "b", "a"])
    write_report_tsv(rep, tmp_path / "r.tsv")
    lines = (tmp_path / "r.tsv").read_text().splitlines()
    assert lines[0].split("\t")[0] == "system" and len(lines) == 1 + 2 + 2
    write_json({"x": float("nan"), "y": [1.5]}, tmp_path / "r.json")
    assert json.loads((tmp_path / "r.json").read_text()) == {"x": None, "y": [1.5]}
