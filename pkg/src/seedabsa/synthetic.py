"""Planted restaurant-review generator for tests, demos and benchmarks.

Every sentence has a gold aspect and a gold polarity.  It is built from
short clauses such as "the waiter was rude", where the aspect term comes
from the sentence's aspect (occasionally another one) and the opinion word
from its polarity (occasionally the other one).  Aspect vocabularies are
disjoint; the opinion vocabularies are shared by all aspects.  The glue
words are all English stopwords, so after preprocessing only the aspect
terms and opinion words remain, in a consistent order.
"""

from dataclasses import dataclass

import numpy as np

from .config import AspectSpec, SeedConfiguration
from .corpus import LabelledText

ASPECT_TERMS = {
    "food": ["chicken", "beef", "pasta", "salad", "pork", "tuna", "shrimp", "curry",
             "burger", "soup", "rice", "bread", "dessert", "steak"],
    "service": ["service", "staff", "waiter", "waitress", "hostess", "manager", "owner",
                "employees", "server", "bartender", "host", "waiters"],
    "ambience": ["ambience", "decor", "atmosphere", "lighting", "interior", "vibe",
                 "music", "setting", "ceilings", "furniture", "patio", "walls"],
}
POSITIVE_WORDS = ["excellent", "great", "delicious", "friendly", "amazing", "wonderful",
                  "fantastic", "lovely", "superb", "tasty", "attentive", "cozy"]
NEGATIVE_WORDS = ["horrible", "terrible", "awful", "rude", "bland", "dirty", "slow",
                  "noisy", "disgusting", "cold", "mediocre", "soggy"]

# seed choices: index 0 mirrors the usual one-word-per-aspect setup
ALTERNATIVE_SEEDS = {
    "food": ["chicken", "beef", "pasta"],
    "service": ["service", "staff", "waiter"],
    "ambience": ["ambience", "decor", "atmosphere"],
}
NONSENSE_POLARITY = ("waitress", "waiter")

# clause templates; {a} aspect term, {o} opinion word, glue words are stopwords
TEMPLATES = [
    ("the {a} was {o}", 0.45),
    ("the {a} is {o}", 0.25),
    ("{o} {a}", 0.15),
    ("the {a} was {o} and {o}", 0.15),
]


def _zipf(n, s=0.8):
    w = 1.0 / np.arange(1, n + 1) ** s
    return w / w.sum()


@dataclass
class SyntheticCorpus:
    sentences: list            # LabelledText, one per sentence
    aspect_terms: dict
    positive_words: list
    negative_words: list

    @property
    def opinion_words(self):
        return self.positive_words + self.negative_words

    @property
    def all_aspect_terms(self):
        return [t for terms in self.aspect_terms.values() for t in terms]


def generate(num_sentences=2000, *, rng_seed=0, p_main_aspect=0.9,
             p_main_polarity=0.9, clauses=(3, 5)):
    """Draw ``num_sentences`` labelled sentences from the planted model."""
    rng = np.random.default_rng(rng_seed)
    aspects = list(ASPECT_TERMS)
    t_weights = np.array([w for _, w in TEMPLATES])
    pw = {a: _zipf(len(terms)) for a, terms in ASPECT_TERMS.items()}
    ow = _zipf(len(POSITIVE_WORDS))
    out = []
    for i in range(num_sentences):
        main = aspects[rng.integers(len(aspects))]
        pol = "positive" if rng.random() < 0.5 else "negative"
        parts = []
        for _ in range(rng.integers(clauses[0], clauses[1] + 1)):
            tmpl = TEMPLATES[rng.choice(len(TEMPLATES), p=t_weights)][0]
            words = {}
            a = main if rng.random() < p_main_aspect else aspects[rng.integers(len(aspects))]
            words["a"] = ASPECT_TERMS[a][rng.choice(len(ASPECT_TERMS[a]), p=pw[a])]
            text = tmpl
            while "{o}" in text:
                q = pol if rng.random() < p_main_polarity else (
                    "negative" if pol == "positive" else "positive")
                lex = POSITIVE_WORDS if q == "positive" else NEGATIVE_WORDS
                text = text.replace("{o}", lex[rng.choice(len(lex), p=ow)], 1)
            parts.append(text.format(**words))
        text = " and ".join(parts)
        out.append(LabelledText(text[0].upper() + text[1:] + ".", main, pol, f"s{i}"))
    return SyntheticCorpus(out, {a: list(t) for a, t in ASPECT_TERMS.items()},
                           list(POSITIVE_WORDS), list(NEGATIVE_WORDS))


def seed_config(choice=0, *, positive=("excellent",), negative=("horrible",)):
    """Fixture configuration using the ``choice``-th alternative aspect seeds."""
    return SeedConfiguration(
        tuple(AspectSpec(a, (ALTERNATIVE_SEEDS[a][choice],)) for a in ASPECT_TERMS),
        frozenset(positive), frozenset(negative), "en")


def nonsense_config(choice=0):
    """Aspect nouns used as polarity seeds."""
    return seed_config(choice, positive=(NONSENSE_POLARITY[0],),
                       negative=(NONSENSE_POLARITY[1],))
