"""Sentence-level corpus construction.

Each sentence of each review becomes one model document.  Tokenization is a
Unicode-aware split on anything that is not a letter or digit, so the same
rules work for every language that separates words with spaces.
"""

import json
import logging
import re
import unicodedata
import xml.etree.ElementTree as ET
from collections import Counter
from dataclasses import dataclass, field
from importlib import resources
from typing import Iterable, Optional

import numpy as np

from .errors import CorpusError

log = logging.getLogger(__name__)

_SENTENCE_END = re.compile(r"(?<=[.?!])\s+")
_TOKEN = re.compile(r"[^\W_]+")

CACHE_FORMAT = "seedabsa-corpus"
CACHE_VERSION = 1


def load_stopwords(language: str) -> frozenset:
    """Bundled stopword list for ``language`` (empty set if none ships)."""
    name = f"{language.lower()}.txt"
    try:
        text = resources.files("seedabsa").joinpath("data", "stopwords", name).read_text(
            encoding="utf-8")
    except FileNotFoundError:
        log.warning("no bundled stopword list for language %r", language)
        return frozenset()
    return frozenset(normalize(w) for w in text.split())


def normalize(text: str) -> str:
    return unicodedata.normalize("NFC", text).lower()


def split_sentences(text: str) -> list:
    """Split on ``.``, ``?`` or ``!`` followed by whitespace or end of text."""
    parts = _SENTENCE_END.split(text.strip())
    return [p for p in (s.strip() for s in parts) if p]


def tokenize(sentence: str) -> list:
    return _TOKEN.findall(normalize(sentence))


class Vocabulary:
    """Dense term <-> id map with corpus frequencies.

    Ids are assigned by descending frequency, ties broken alphabetically, so
    identical inputs always give identical ids.
    """

    def __init__(self, terms, freqs):
        self.terms = list(terms)
        self.freqs = np.asarray(freqs, dtype=np.int64)
        if len(self.terms) != len(self.freqs):
            raise ValueError("terms and freqs differ in length")
        self.index = {t: i for i, t in enumerate(self.terms)}
        if len(self.index) != len(self.terms):
            raise ValueError("duplicate terms in vocabulary")

    @classmethod
    def from_counts(cls, counts):
        ordered = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
        return cls([t for t, _ in ordered], [c for _, c in ordered])

    def __len__(self):
        return len(self.terms)

    def __contains__(self, term):
        return term in self.index

    def __getitem__(self, term):
        return self.index[term]

    def get(self, term, default=None):
        return self.index.get(term, default)

    def __eq__(self, other):
        return (isinstance(other, Vocabulary) and self.terms == other.terms
                and np.array_equal(self.freqs, other.freqs))

    def __repr__(self):
        return f"Vocabulary(V={len(self)})"


@dataclass
class Sentence:
    tokens: np.ndarray
    text: str = ""
    doc_id: str = ""
    aspect: Optional[str] = None
    polarity: Optional[str] = None

    def __len__(self):
        return len(self.tokens)


@dataclass
class Corpus:
    sentences: list
    vocab: Vocabulary
    language: str = "en"
    _flat: Optional[tuple] = field(default=None, repr=False, compare=False)

    def __len__(self):
        return len(self.sentences)

    @property
    def num_tokens(self):
        return int(sum(len(s) for s in self.sentences))

    def flat(self):
        """``(words, doc_ptr)``: all token ids concatenated plus CSR offsets."""
        if self._flat is None:
            lengths = np.array([len(s) for s in self.sentences], dtype=np.int64)
            doc_ptr = np.zeros(len(lengths) + 1, dtype=np.int64)
            np.cumsum(lengths, out=doc_ptr[1:])
            if self.sentences:
                words = np.concatenate([s.tokens for s in self.sentences]).astype(np.int64)
            else:
                words = np.zeros(0, dtype=np.int64)
            self._flat = (words, doc_ptr)
        return self._flat

    def token_lists(self):
        return [s.tokens for s in self.sentences]


@dataclass
class LabelledText:
    text: str
    aspect: Optional[str] = None
    polarity: Optional[str] = None
    doc_id: str = ""


def ingest(reviews: Iterable, *, language: str = "en", min_count: int = 5,
           stopwords: Optional[Iterable] = None, keep: Iterable = ()) -> Corpus:
    """Build a corpus from an iterable of review strings or ``LabelledText``.

    Sentences are split, tokens lowercased and stripped of punctuation,
    stopwords removed, and terms seen fewer than ``min_count`` times dropped
    (terms in ``keep``, normally the seed words, are exempt).  Sentences that
    end up empty are discarded.
    """
    if stopwords is None:
        stopwords = load_stopwords(language)
    stop = frozenset(normalize(w) for w in stopwords)
    keep = frozenset(normalize(w) for w in keep)

    raw = []
    counts = Counter()
    for i, item in enumerate(reviews):
        if isinstance(item, LabelledText):
            text, aspect, polarity = item.text, item.aspect, item.polarity
            doc_id = item.doc_id or str(i)
        else:
            text, aspect, polarity, doc_id = item, None, None, str(i)
        for sent in split_sentences(text):
            toks = [t for t in tokenize(sent) if t not in stop]
            counts.update(toks)
            raw.append((toks, sent, doc_id, aspect, polarity))
    if not raw:
        raise CorpusError("empty corpus")

    kept = {t: c for t, c in counts.items() if c >= min_count or t in keep}
    vocab = Vocabulary.from_counts(kept)
    sentences = []
    for toks, sent, doc_id, aspect, polarity in raw:
        ids = [vocab.index[t] for t in toks if t in vocab.index]
        if ids:
            sentences.append(Sentence(np.array(ids, dtype=np.int64), sent, doc_id,
                                      aspect, polarity))
    if not sentences:
        raise CorpusError("no sentences survive filtering")
    log.info("corpus: %d sentences, %d tokens, V=%d (dropped %d empty)",
             len(sentences), sum(len(s) for s in sentences), len(vocab),
             len(raw) - len(sentences))
    return Corpus(sentences, vocab, language)


def encode(text: str, vocab: Vocabulary, stopwords=frozenset()) -> np.ndarray:
    """Token ids of ``text`` under an existing vocabulary, OOV tokens skipped."""
    ids = [vocab.index[t] for t in tokenize(text)
           if t not in stopwords and t in vocab.index]
    return np.array(ids, dtype=np.int64)


def read_lines(path) -> list:
    try:
        with open(path, encoding="utf-8") as fh:
            return [line.rstrip("\n") for line in fh if line.strip()]
    except (OSError, UnicodeDecodeError) as exc:
        raise CorpusError(f"cannot read {path}: {exc}") from exc


def read_labelled_tsv(path) -> list:
    """``text<TAB>aspect<TAB>polarity`` lines; empty fields become ``None``."""
    out = []
    for lineno, line in enumerate(read_lines(path), start=1):
        parts = line.split("\t")
        if len(parts) > 3:
            raise CorpusError(f"{path}:{lineno}: expected at most 3 tab-separated fields")
        parts += [""] * (3 - len(parts))
        text, aspect, polarity = (p.strip() for p in parts)
        out.append(LabelledText(text, aspect or None, polarity or None, str(lineno)))
    return out


def read_semeval_xml(path) -> list:
    """Reduce a SemEval ABSA XML file to single-category sentences.

    The category is the entity part of ``ENTITY#ATTRIBUTE`` (lowercased).
    Sentences whose opinions span more than one category are dropped; the
    polarity is kept only when all opinions agree on positive or negative.
    """
    try:
        root = ET.parse(path).getroot()
    except (OSError, ET.ParseError) as exc:
        raise CorpusError(f"cannot read {path}: {exc}") from exc
    out = []
    for sent in root.iter("sentence"):
        text_el = sent.find("text")
        if text_el is None or not (text_el.text or "").strip():
            continue
        opinions = sent.findall("./Opinions/Opinion")
        cats = {o.get("category", "").split("#")[0].lower() for o in opinions}
        cats.discard("")
        if len(cats) != 1:
            continue
        pols = {o.get("polarity", "").lower() for o in opinions}
        polarity = pols.pop() if len(pols) == 1 else None
        if polarity not in ("positive", "negative"):
            polarity = None
        out.append(LabelledText(text_el.text.strip(), cats.pop(), polarity,
                                sent.get("id", "")))
    return out


def balance_by_rating(reviews: list, target: Optional[int] = None, rng_seed: int = 0) -> list:
    """Oversample whole reviews until every polarity class has ``target`` members.

    ``target`` defaults to the size of the largest class.  Reviews must be
    ``LabelledText`` with a polarity.  Extra copies are drawn uniformly with
    replacement from the deficient class and appended after the originals.
    """
    by_class = {}
    for r in reviews:
        if r.polarity is None:
            raise CorpusError("review without a polarity tag")
        by_class.setdefault(r.polarity, []).append(r)
    if len(by_class) < 2:
        raise CorpusError("a polarity class has zero members")
    sizes = {k: len(v) for k, v in by_class.items()}
    if target is None:
        target = max(sizes.values())
    if target < max(sizes.values()):
        raise CorpusError("target is smaller than the largest class")
    if all(n == target for n in sizes.values()):
        return list(reviews)
    rng = np.random.default_rng(rng_seed)
    out = list(reviews)
    for label in sorted(by_class):
        members = by_class[label]
        extra = target - len(members)
        if extra > 0:
            picks = rng.integers(0, len(members), size=extra)
            out.extend(members[i] for i in picks)
    return out


def save_corpus(corpus: Corpus, path):
    doc = {
        "format": CACHE_FORMAT,
        "version": CACHE_VERSION,
        "language": corpus.language,
        "vocab": [[t, int(f)] for t, f in zip(corpus.vocab.terms, corpus.vocab.freqs)],
        "sentences": [
            {"doc": s.doc_id, "text": s.text, "tokens": [int(t) for t in s.tokens],
             "aspect": s.aspect, "polarity": s.polarity}
            for s in corpus.sentences
        ],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, ensure_ascii=False, separators=(",", ":"))
        fh.write("\n")


def load_corpus(path) -> Corpus:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, ValueError) as exc:
        raise CorpusError(f"cannot read corpus cache {path}: {exc}") from exc
    if doc.get("format") != CACHE_FORMAT:
        raise CorpusError(f"{path} is not a corpus cache")
    vocab = Vocabulary([t for t, _ in doc["vocab"]], [f for _, f in doc["vocab"]])
    sentences = [Sentence(np.array(s["tokens"], dtype=np.int64), s["text"], s["doc"],
                          s["aspect"], s["polarity"]) for s in doc["sentences"]]
    return Corpus(sentences, vocab, doc["language"])
