"""Command-line pipeline with cached artifacts and a run manifest.

Every stage writes its output into ``--out-dir`` and records in
``manifest.json`` the output's sha256 and a key derived from the settings
it depends on plus the digests of its inputs.  A stage refuses to run when
an upstream artifact is missing, was modified after it was produced, or was
produced under settings that no longer match the configuration.
"""

import argparse
import dataclasses
import hashlib
import json
import logging
import os
import sys
import time

from . import __version__, brown, corpus as corpus_mod, embeddings, eval as ev
from . import pipeline, separation, tmodel
from .config import (config_hash, load_config, serialize_config,
                     validate_against_vocabulary)
from .errors import ArtifactError, SeedAbsaError

log = logging.getLogger("seedabsa")

MANIFEST = "manifest.json"
ARTIFACTS = {
    "corpus": "corpus.json",
    "embeddings": "embeddings.txt",
    "clusters": "clusters.txt",
    "separation": "separation.txt",
    "model": "model.json",
    "top_words": "top_words.tsv",
    "classification": "classification.tsv",
    "eval": "eval.json",
}
UPSTREAM = {
    "corpus": (),
    "embeddings": ("corpus",),
    "clusters": ("corpus",),
    "separation": ("corpus", "clusters"),
    "model": ("corpus", "embeddings", "clusters", "separation"),
}
# run parameters each stage depends on
STAGE_PARAMS = {
    "corpus": ("min_count",),
    "embeddings": ("embedding_dims", "window", "epochs", "negative_samples",
                   "learning_rate", "workers", "rng_seed"),
    "clusters": ("num_brown_clusters",),
    "separation": ("maxent_l2", "maxent_max_iter", "maxent_tol"),
    "model": None,   # everything
}


def sha256_file(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


class Workspace:
    def __init__(self, out_dir, config, params):
        self.dir = out_dir
        self.config = config
        self.params = params
        os.makedirs(out_dir, exist_ok=True)
        self.manifest_path = os.path.join(out_dir, MANIFEST)
        if os.path.exists(self.manifest_path):
            with open(self.manifest_path, encoding="utf-8") as fh:
                self.manifest = json.load(fh)
        else:
            self.manifest = {"artifacts": {}}

    def path(self, name):
        return os.path.join(self.dir, ARTIFACTS[name])

    def settings(self, stage):
        keys = STAGE_PARAMS.get(stage)
        if keys is None:
            return config_hash(self.config, self.params)
        snap = {k: getattr(self.params, k) for k in keys}
        if stage in ("corpus", "separation"):
            # seeds are exempt from min_count, and label the separator's examples
            snap["seeds"] = serialize_config(self.config)
        return hashlib.sha256(json.dumps(snap, sort_keys=True).encode()).hexdigest()

    def stage_key(self, stage, extra=""):
        parts = [stage, self.settings(stage), extra]
        for up in UPSTREAM.get(stage, ()):
            parts.append(self.require(up))
        return hashlib.sha256("|".join(parts).encode()).hexdigest()

    def require(self, name):
        """Digest of an upstream artifact after checking it is present and current."""
        entry = self.manifest["artifacts"].get(name)
        path = self.path(name)
        if entry is None or not os.path.exists(path):
            label = "separation model" if name == "separation" else name
            raise ArtifactError(f"missing {label}: run the '{_producer(name)}' step first")
        digest = sha256_file(path)
        if digest != entry["sha256"]:
            raise ArtifactError(f"hash mismatch for {name}: {path} changed after it was "
                                f"produced")
        expected = self.stage_key(name, entry.get("extra", ""))
        if expected != entry["key"]:
            raise ArtifactError(f"stale {name}: configuration or inputs changed since it "
                                f"was produced; re-run '{_producer(name)}'")
        return digest

    def up_to_date(self, name, key):
        entry = self.manifest["artifacts"].get(name)
        path = self.path(name)
        return (entry is not None and entry["key"] == key and os.path.exists(path)
                and sha256_file(path) == entry["sha256"])

    def record(self, name, key, seconds, extra="", **info):
        self.manifest["artifacts"][name] = {
            "path": ARTIFACTS[name], "sha256": sha256_file(self.path(name)), "key": key,
            "extra": extra, "seconds": round(seconds, 3), **info}
        self.save()

    def save(self):
        self.manifest.update({
            "version": __version__,
            "config_hash": config_hash(self.config, self.params),
            "config": serialize_config(self.config, self.params),
            "params": dataclasses.asdict(self.params),
            "rng_seed": self.params.rng_seed,
        })
        tmp = self.manifest_path + ".tmp"
        with open(tmp, "w", encoding="utf-8") as fh:
            json.dump(self.manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")
        os.replace(tmp, self.manifest_path)


def _producer(name):
    return {"corpus": "prepare", "embeddings": "embed", "clusters": "cluster",
            "separation": "separate", "model": "train"}.get(name, name)


def _read_texts(path):
    """Reviews (plain text, one per line), labelled TSV, or SemEval XML."""
    if path.endswith(".xml"):
        return corpus_mod.read_semeval_xml(path)
    if path.endswith(".tsv"):
        return corpus_mod.read_labelled_tsv(path)
    return corpus_mod.read_lines(path)


# -- commands -----------------------------------------------------------------

def cmd_prepare(ws, args):
    if not args.corpus:
        raise ArtifactError("prepare needs --corpus")
    digest = sha256_file(args.corpus)
    key = ws.stage_key("corpus", digest)
    if ws.up_to_date("corpus", key):
        log.info("corpus is up to date")
        return
    t0 = time.time()
    corpus = pipeline.prepare(_read_texts(args.corpus), ws.config, ws.params)
    report = validate_against_vocabulary(ws.config, corpus.vocab)
    corpus_mod.save_corpus(corpus, ws.path("corpus"))
    ws.record("corpus", key, time.time() - t0, extra=digest, source=args.corpus,
              documents=len(corpus), tokens=corpus.num_tokens, vocabulary=len(corpus.vocab),
              missing_seeds=[s for _, s in report.missing])


def _load_corpus(ws):
    ws.require("corpus")
    return corpus_mod.load_corpus(ws.path("corpus"))


def cmd_embed(ws, args):
    key = ws.stage_key("embeddings")
    if ws.up_to_date("embeddings", key):
        log.info("embeddings are up to date")
        return
    corpus = _load_corpus(ws)
    t0 = time.time()
    table = embeddings.train_skipgram(corpus, ws.params)
    embeddings.save_embeddings(table, ws.path("embeddings"))
    ws.record("embeddings", key, time.time() - t0,
              loss_history=[float(x) for x in table.loss_history])


def cmd_cluster(ws, args):
    key = ws.stage_key("clusters")
    if ws.up_to_date("clusters", key):
        log.info("clusters are up to date")
        return
    corpus = _load_corpus(ws)
    t0 = time.time()
    clusters = brown.brown_cluster(corpus, ws.params.num_brown_clusters)
    brown.save_clusters(clusters, corpus.vocab, ws.path("clusters"))
    ws.record("clusters", key, time.time() - t0, clusters=clusters.num_clusters)


def cmd_separate(ws, args):
    key = ws.stage_key("separation")
    if ws.up_to_date("separation", key):
        log.info("separation model is up to date")
        return
    corpus = _load_corpus(ws)
    ws.require("clusters")
    clusters = brown.load_clusters(ws.path("clusters"), corpus.vocab)
    t0 = time.time()
    model = pipeline.train_separator(corpus, ws.config, clusters, ws.params)
    separation.save_model(model, ws.path("separation"))
    ws.record("separation", key, time.time() - t0,
              instances_A=model.info["instances_A"], instances_O=model.info["instances_O"],
              grad_norm=model.info["grad_norm"])


def _load_upstream(ws):
    corpus = _load_corpus(ws)
    for name in ("embeddings", "clusters", "separation"):
        ws.require(name)
    table = embeddings.load_embeddings(ws.path("embeddings"))
    clusters = brown.load_clusters(ws.path("clusters"), corpus.vocab)
    sep = separation.load_model(ws.path("separation"))
    return corpus, table, clusters, sep


def cmd_train(ws, args):
    for name in ("separation", "embeddings", "clusters", "corpus"):
        if name not in ws.manifest["artifacts"] or not os.path.exists(ws.path(name)):
            ws.require(name)   # raises the "missing ..." error
    key = ws.stage_key("model")
    if ws.up_to_date("model", key) and os.path.exists(ws.path("top_words")):
        log.info("model is up to date")
        return
    corpus, table, clusters, sep = _load_upstream(ws)
    t0 = time.time()
    cache = embeddings.build_similarity_cache(table, ws.config, corpus.vocab,
                                              ws.params.similarity_floor)
    _, _, _, _, model = pipeline.train_topics(corpus, ws.config, ws.params, cache,
                                              clusters, sep)
    tmodel.save_model(model, ws.path("model"))
    tmodel.write_top_words(model, ws.path("top_words"), args.k)
    ws.record("model", key, time.time() - t0, mode=ws.params.sampler_mode,
              samples=model.num_samples)


def _load_model(ws):
    ws.require("model")
    corpus = corpus_mod.load_corpus(ws.path("corpus"))
    clusters = brown.load_clusters(ws.path("clusters"), corpus.vocab)
    sep = separation.load_model(ws.path("separation"))
    return corpus, clusters, sep, tmodel.load_model(ws.path("model"))


def cmd_top_words(ws, args):
    ws.require("model")
    model = tmodel.load_model(ws.path("model"))
    tmodel.write_top_words(model, ws.path("top_words"), args.k)
    with open(ws.path("top_words"), encoding="utf-8") as fh:
        sys.stdout.write(fh.read())


def cmd_classify(ws, args):
    if not args.input:
        raise ArtifactError("classify needs --input")
    corpus, clusters, sep, model = _load_model(ws)
    items = _read_texts(args.input)
    texts = [x.text if isinstance(x, corpus_mod.LabelledText) else x for x in items]
    ids = [x.doc_id if isinstance(x, corpus_mod.LabelledText) else str(i + 1)
           for i, x in enumerate(items)]
    results = pipeline.classify_texts(texts, model, clusters, sep, corpus.vocab,
                                      ws.params, language=ws.config.language_tag)
    out = args.output or ws.path("classification")
    tmodel.write_classification(list(zip(ids, results)), model.aspects, out)
    return results


def cmd_eval(ws, args):
    if not args.gold:
        raise ArtifactError("eval needs --gold (labelled TSV or SemEval XML)")
    corpus, clusters, sep, model = _load_model(ws)
    gold = _read_texts(args.gold)
    if not gold or not isinstance(gold[0], corpus_mod.LabelledText):
        raise ArtifactError("gold file must be a labelled TSV or SemEval XML")
    texts = [g.text for g in gold]
    results = pipeline.classify_texts(texts, model, clusters, sep, corpus.vocab,
                                      ws.params, language=ws.config.language_tag)
    report = {"samples": model.num_samples, "mode": model.mode}
    stop = corpus_mod.load_stopwords(ws.config.language_tag)
    nb = lambda tr, trl, te: ev.naive_bayes_baseline(tr, trl, te, stopwords=stop)  # noqa: E731
    for task, labels_of, pick in (
            ("aspect", lambda g: g.aspect,
             lambda r: tmodel.classify_aspect(r, model.aspects)[0]),
            ("polarity", lambda g: g.polarity, lambda r: tmodel.classify_polarity(r)[0])):
        rows = [(g, r) for g, r in zip(gold, results) if labels_of(g) and r.classifiable]
        if not rows:
            continue
        golds = [labels_of(g) for g, _ in rows]
        preds = [pick(r) for _, r in rows]
        labels = sorted(set(golds) | set(preds))
        rep = ev.score(preds, golds, labels).to_dict()
        rep["unclassifiable"] = sum(1 for g, r in zip(gold, results)
                                    if labels_of(g) and not r.classifiable)
        rep["baselines"] = {"majority": ev.score(ev.majority_baseline(golds, golds),
                                                 golds, labels).accuracy}
        if len(rows) >= 10 and len(set(golds)) > 1:
            rep["baselines"]["naive_bayes_10fold"] = ev.cross_validate(
                [g.text for g, _ in rows], golds, nb, k=10, rng_seed=ws.params.rng_seed)[0]
        report[task] = rep
    if args.lexicon:
        lexicon = ev.load_lexicon(args.lexicon)
        aspect_terms = ev.load_lexicon(args.aspect_terms) if args.aspect_terms else []
        if aspect_terms:
            report["separation"] = dataclasses.asdict(
                ev.separation_from_counts(model.nw, corpus.vocab, lexicon, aspect_terms))
    out = args.output or ws.path("eval")
    ev.write_json(report, out)
    return report


COMMANDS = {
    "prepare": cmd_prepare, "embed": cmd_embed, "cluster": cmd_cluster,
    "separate": cmd_separate, "train": cmd_train, "classify": cmd_classify,
    "top-words": cmd_top_words, "eval": cmd_eval,
}


def build_parser():
    p = argparse.ArgumentParser(prog="seedabsa",
                                description="Seed-guided aspect and sentiment analysis.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("command", choices=list(COMMANDS))
    p.add_argument("--config", required=True, help="seed configuration file")
    p.add_argument("--corpus", help="input reviews (.txt lines, labelled .tsv, or .xml)")
    p.add_argument("--out-dir", default="seedabsa-run", help="artifact directory")
    p.add_argument("--seed", type=int, help="override rng_seed")
    p.add_argument("--mode", choices=("as-written", "derived"), help="sampler mode")
    p.add_argument("--k", type=int, default=10, help="top words per list")
    p.add_argument("--input", help="sentences to classify (one per line or labelled TSV)")
    p.add_argument("--gold", help="labelled sentences for eval")
    p.add_argument("--lexicon", help="opinion lexicon, one word per line (eval)")
    p.add_argument("--aspect-terms", help="gold aspect terms, one per line (eval)")
    p.add_argument("--output", help="output path for classify/eval")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        config, params = load_config(args.config)
        changes = {}
        if args.seed is not None:
            changes["rng_seed"] = args.seed
        if args.mode is not None:
            changes["sampler_mode"] = args.mode
        if changes:
            params = dataclasses.replace(params, **changes)
            params.validate()
        if args.k < 1:
            raise ArtifactError("--k must be at least 1")
        ws = Workspace(args.out_dir, config, params)
        COMMANDS[args.command](ws, args)
    except (SeedAbsaError, OSError) as exc:
        line = {"error": type(exc).__name__, "message": str(exc), "command": args.command}
        print("error: " + json.dumps(line, sort_keys=True), file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
