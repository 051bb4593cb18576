"""Time the numba kernels against the pure-numpy fallbacks.

Runs the three hot loops (Gibbs sweep, skip-gram epoch, Brown clustering) on
the synthetic restaurant corpus with each backend and prints a table.  The
numba timings exclude compilation: each kernel is run once before timing.

    python benchmarks/bench_kernels.py --sentences 1000 --repeat 3
"""

import argparse
import dataclasses
import time

import numpy as np

from seedabsa import brown, pipeline, synthetic
from seedabsa.config import RunParameters
from seedabsa.embeddings import build_similarity_cache, train_skipgram
from seedabsa.separation import corpus_pi
from seedabsa.tmodel import compute_priors, gibbs_sweep, init_state
from seedabsa.tmodel.sampler import make_rng


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sentences", type=int, default=1000)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--clusters", type=int, default=50)
    args = ap.parse_args(argv)

    data = synthetic.generate(args.sentences, rng_seed=0)
    config = synthetic.seed_config(0)
    params = RunParameters(epochs=1).with_defaults(config.num_topics)
    corpus = pipeline.prepare(data.sentences, config, params)
    words, ptr = corpus.flat()
    print(f"corpus: {len(corpus)} sentences, {len(words)} tokens, V={len(corpus.vocab)}")

    table = train_skipgram(corpus, params)
    clusters = brown.brown_cluster(corpus, args.clusters)
    sep = pipeline.train_separator(corpus, config, clusters, params)
    pi = corpus_pi(corpus, clusters, sep)
    priors = compute_priors(corpus, build_similarity_cache(table, config, corpus.vocab),
                            params)
    u = np.random.default_rng(0).random((len(words), 3))

    def gibbs(use_numba):
        def go():
            state = init_state(words, ptr, pi, config.num_topics, len(corpus.vocab),
                               make_rng(0))
            gibbs_sweep(state, priors, "as-written", use_numba=use_numba, u=u)
        return go

    one_epoch = dataclasses.replace(params, epochs=1)
    cases = [
        ("gibbs sweep", gibbs),
        ("skip-gram epoch", lambda nb: lambda: train_skipgram(corpus, one_epoch,
                                                              use_numba=nb)),
        (f"brown K={args.clusters}", lambda nb: lambda: brown.brown_cluster(
            corpus, args.clusters, use_numba=nb)),
    ]
    print(f"{'kernel':<18}{'numba s':>10}{'numpy s':>10}{'speedup':>10}")
    for name, make in cases:
        make(True)()                      # compile
        fast = best_of(make(True), args.repeat)
        slow = best_of(make(False), args.repeat)
        print(f"{name:<18}{fast:>10.4f}{slow:>10.4f}{slow / fast:>9.1f}x")


if __name__ == "__main__":
    main()
