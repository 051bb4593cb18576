"""Regenerate the bundled demo corpus, gold file and configuration."""

import os
import sys

import numpy as np

from seedabsa import synthetic
from seedabsa.config import serialize_config

out = sys.argv[1] if len(sys.argv) > 1 else os.path.join(
    os.path.dirname(__file__), "..", "src", "seedabsa", "data")

syn = synthetic.generate(1500, rng_seed=7)
rng = np.random.default_rng(7)
reviews, i = [], 0
while i < len(syn.sentences):
    n = int(rng.integers(1, 4))
    reviews.append(" ".join(s.text for s in syn.sentences[i:i + n]))
    i += n
with open(os.path.join(out, "demo_reviews.txt"), "w", encoding="utf-8") as fh:
    fh.write("\n".join(reviews) + "\n")

gold = synthetic.generate(300, rng_seed=8)
with open(os.path.join(out, "demo_gold.tsv"), "w", encoding="utf-8") as fh:
    for s in gold.sentences:
        fh.write(f"{s.text}\t{s.aspect}\t{s.polarity}\n")

with open(os.path.join(out, "demo_lexicon.txt"), "w", encoding="utf-8") as fh:
    fh.write("\n".join(syn.opinion_words) + "\n")
with open(os.path.join(out, "demo_aspect_terms.txt"), "w", encoding="utf-8") as fh:
    fh.write("\n".join(syn.all_aspect_terms) + "\n")

with open(os.path.join(out, "demo_config.txt"), "w", encoding="utf-8") as fh:
    fh.write("# restaurant demo: one seed per aspect, one per polarity\n")
    fh.write(serialize_config(synthetic.seed_config(0)))
