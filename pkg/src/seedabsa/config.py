"""Seed-word supervision and run hyperparameters.

Config files are small hand-written text documents::

    language: en
    aspect food: chicken
    aspect service: service, staff
    positive: excellent
    negative: horrible

    [params]
    iterations = 500
    rng_seed = 7

Lines starting with ``#`` are comments.  Seeds are NFC-normalized and
lowercased when parsed.
"""

import dataclasses
import hashlib
import logging
import unicodedata
from dataclasses import dataclass, field
from typing import Optional

from .errors import ConfigError

log = logging.getLogger(__name__)

SAMPLER_MODES = ("as-written", "derived")


def normalize_term(term: str) -> str:
    return unicodedata.normalize("NFC", term).strip().lower()


@dataclass(frozen=True)
class AspectSpec:
    name: str
    seeds: tuple

    def __post_init__(self):
        if not self.seeds:
            raise ConfigError(f"aspect '{self.name}' has no seed words")


@dataclass(frozen=True)
class SeedConfiguration:
    aspects: tuple
    positive_seeds: frozenset
    negative_seeds: frozenset
    language_tag: str = "en"

    def __post_init__(self):
        if not self.aspects:
            raise ConfigError("no aspects defined")
        names = [a.name for a in self.aspects]
        dup = {n for n in names if names.count(n) > 1}
        if dup:
            raise ConfigError(f"duplicate aspect names: {', '.join(sorted(dup))}")
        owner = {}
        for a in self.aspects:
            for s in a.seeds:
                if s in owner and owner[s] != a.name:
                    raise ConfigError(
                        f"seed '{s}' appears in aspects '{owner[s]}' and '{a.name}'")
                owner[s] = a.name
        if not self.positive_seeds:
            raise ConfigError("empty positive seed set")
        if not self.negative_seeds:
            raise ConfigError("empty negative seed set")
        both = self.positive_seeds & self.negative_seeds
        if both:
            raise ConfigError(
                f"seeds in both polarity sets: {', '.join(sorted(both))}")

    @property
    def num_topics(self) -> int:
        return len(self.aspects)

    @property
    def aspect_names(self):
        return [a.name for a in self.aspects]

    def seed_sets(self):
        """Seed lists in cache column order: aspects, then positive, negative."""
        return ([list(a.seeds) for a in self.aspects]
                + [sorted(self.positive_seeds), sorted(self.negative_seeds)])

    def aspect_seed_words(self):
        return {s for a in self.aspects for s in a.seeds}

    def polarity_seed_words(self):
        return set(self.positive_seeds) | set(self.negative_seeds)

    def all_seed_words(self):
        return self.aspect_seed_words() | self.polarity_seed_words()


@dataclass(frozen=True)
class RunParameters:
    alpha_base: Optional[float] = None   # None -> 50 / T
    beta_base: float = 0.01
    delta_base: Optional[float] = None   # None -> 50 / T
    iterations: int = 500
    burn_in: int = 100
    lag: int = 10
    num_brown_clusters: int = 200
    embedding_dims: int = 100
    window: int = 5
    epochs: int = 5
    negative_samples: int = 5
    min_count: int = 5
    learning_rate: float = 0.025
    workers: int = 1
    similarity_floor: float = 0.001
    maxent_l2: float = 1.0
    maxent_max_iter: int = 1000
    maxent_tol: float = 1e-6
    foldin_iterations: int = 50
    foldin_burn_in: int = 20
    foldin_lag: int = 5
    sampler_mode: str = "as-written"
    rng_seed: int = 1

    def with_defaults(self, num_topics: int) -> "RunParameters":
        if num_topics < 1:
            raise ConfigError("number of topics must be positive")
        changes = {}
        if self.alpha_base is None:
            changes["alpha_base"] = 50.0 / num_topics
        if self.delta_base is None:
            changes["delta_base"] = 50.0 / num_topics
        out = dataclasses.replace(self, **changes)
        out.validate()
        return out

    def validate(self):
        for name in ("alpha_base", "delta_base"):
            val = getattr(self, name)
            if val is not None and not val > 0:
                raise ConfigError(f"{name} must be positive")
        if not self.beta_base > 0:
            raise ConfigError("beta_base must be positive")
        if not self.similarity_floor > 0:
            raise ConfigError("similarity_floor must be positive")
        if self.maxent_l2 < 0:
            raise ConfigError("maxent_l2 must be non-negative")
        for name in ("iterations", "lag", "num_brown_clusters", "embedding_dims",
                     "window", "epochs", "negative_samples", "min_count",
                     "workers", "maxent_max_iter", "foldin_iterations",
                     "foldin_lag"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be a positive integer")
        if not 0 <= self.burn_in < self.iterations:
            raise ConfigError("burn_in must satisfy 0 <= burn_in < iterations")
        if not 0 <= self.foldin_burn_in < self.foldin_iterations:
            raise ConfigError(
                "foldin_burn_in must satisfy 0 <= foldin_burn_in < foldin_iterations")
        if not self.learning_rate > 0:
            raise ConfigError("learning_rate must be positive")
        if self.sampler_mode not in SAMPLER_MODES:
            raise ConfigError(
                f"sampler_mode must be one of {', '.join(SAMPLER_MODES)}")

    def num_samples(self) -> int:
        """How many lagged states a full run averages."""
        return (self.iterations - self.burn_in) // self.lag


# parameter name -> python type, read off the defaults (None means float)
_PARAM_TYPES = {f.name: type(f.default) if f.default is not None else float
                for f in dataclasses.fields(RunParameters)}


def _coerce(name, raw, lineno):
    kind = _PARAM_TYPES[name]
    try:
        return kind(raw)
    except ValueError:
        raise ConfigError(f"bad value for {name}: {raw!r}", lineno) from None


def _split_seeds(raw, lineno, what):
    seeds = [normalize_term(s) for s in raw.split(",")]
    seeds = [s for s in seeds if s]
    if not seeds:
        raise ConfigError(f"empty seed set for {what}", lineno)
    for s in seeds:
        if any(ch.isspace() for ch in s):
            raise ConfigError(f"multiword seed {s!r} is not supported", lineno)
    out = []
    for s in seeds:
        if s not in out:
            out.append(s)
    return out


def parse_config(text: str):
    """Parse a config document into ``(SeedConfiguration, RunParameters)``.

    Omitted parameters are filled with their defaults; ``alpha_base`` and
    ``delta_base`` default to 50 / T.
    """
    language = "en"
    aspects = []
    positive = negative = None
    params = {}
    section = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigError(f"malformed section header {line!r}", lineno)
            section = line[1:-1].strip().lower()
            if section != "params":
                raise ConfigError(f"unknown section [{section}]", lineno)
            continue
        if section == "params":
            key, sep, value = line.partition("=")
            if not sep:
                key, sep, value = line.partition(":")
            if not sep:
                raise ConfigError(f"expected 'key = value', got {line!r}", lineno)
            key, value = key.strip(), value.strip()
            if key not in _PARAM_TYPES:
                raise ConfigError(f"unknown parameter {key!r}", lineno)
            if key in params:
                raise ConfigError(f"parameter {key!r} given twice", lineno)
            params[key] = _coerce(key, value, lineno)
            continue
        key, sep, value = line.partition(":")
        if not sep:
            raise ConfigError(f"expected 'key: value', got {line!r}", lineno)
        key, value = key.strip(), value.strip()
        lowered = key.lower()
        if lowered == "language":
            if not value:
                raise ConfigError("empty language tag", lineno)
            language = value
        elif lowered.startswith("aspect"):
            parts = key.split(None, 1)
            if parts[0].lower() != "aspect" or len(parts) != 2:
                raise ConfigError(f"expected 'aspect <name>: seeds', got {line!r}",
                                  lineno)
            name = parts[1].strip()
            if any(name == a[0] for a in aspects):
                raise ConfigError(f"duplicate aspect name {name!r}", lineno)
            seeds = _split_seeds(value, lineno, f"aspect {name!r}")
            for other, other_seeds, _ in aspects:
                clash = set(seeds) & set(other_seeds)
                if clash:
                    raise ConfigError(
                        f"seed {sorted(clash)[0]!r} of aspect {name!r} already "
                        f"belongs to aspect {other!r}", lineno)
            aspects.append((name, seeds, lineno))
        elif lowered == "positive":
            if positive is not None:
                raise ConfigError("positive seeds given twice", lineno)
            positive = (_split_seeds(value, lineno, "positive"), lineno)
        elif lowered == "negative":
            if negative is not None:
                raise ConfigError("negative seeds given twice", lineno)
            negative = (_split_seeds(value, lineno, "negative"), lineno)
        else:
            raise ConfigError(f"unknown key {key!r}", lineno)

    if not aspects:
        raise ConfigError("no aspects defined")
    if positive is None:
        raise ConfigError("no positive seeds defined")
    if negative is None:
        raise ConfigError("no negative seeds defined")
    overlap = set(positive[0]) & set(negative[0])
    if overlap:
        raise ConfigError(
            f"seed {sorted(overlap)[0]!r} is both positive and negative", negative[1])

    config = SeedConfiguration(
        aspects=tuple(AspectSpec(name, tuple(seeds)) for name, seeds, _ in aspects),
        positive_seeds=frozenset(positive[0]),
        negative_seeds=frozenset(negative[0]),
        language_tag=language,
    )
    run = RunParameters(**params).with_defaults(config.num_topics)
    return config, run


def load_config(path):
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def serialize_config(config: SeedConfiguration, params: Optional[RunParameters] = None) -> str:
    lines = [f"language: {config.language_tag}"]
    for a in config.aspects:
        lines.append(f"aspect {a.name}: {', '.join(a.seeds)}")
    lines.append(f"positive: {', '.join(sorted(config.positive_seeds))}")
    lines.append(f"negative: {', '.join(sorted(config.negative_seeds))}")
    if params is not None:
        lines.append("")
        lines.append("[params]")
        for f in dataclasses.fields(params):
            value = getattr(params, f.name)
            if value is None:
                continue
            lines.append(f"{f.name} = {value!r}" if isinstance(value, float)
                         else f"{f.name} = {value}")
    return "\n".join(lines) + "\n"


def config_hash(config: SeedConfiguration, params: Optional[RunParameters] = None) -> str:
    return hashlib.sha256(serialize_config(config, params).encode("utf-8")).hexdigest()


@dataclass
class SeedReport:
    missing: list = field(default_factory=list)   # (owner, seed) pairs
    fatal: list = field(default_factory=list)     # owners whose whole set is missing

    @property
    def ok(self):
        return not self.fatal

    def __bool__(self):
        return bool(self.missing)


def validate_against_vocabulary(config: SeedConfiguration, vocab, raise_on_fatal=True) -> SeedReport:
    """List seeds absent from ``vocab``.

    Partial misses only warn.  A whole aspect or polarity seed set being
    absent raises ``ConfigError`` (unless ``raise_on_fatal`` is false).
    """
    report = SeedReport()
    groups = [(f"aspect {a.name}", a.seeds) for a in config.aspects]
    groups.append(("positive", sorted(config.positive_seeds)))
    groups.append(("negative", sorted(config.negative_seeds)))
    for owner, seeds in groups:
        missing = [s for s in seeds if s not in vocab]
        report.missing.extend((owner, s) for s in missing)
        if len(missing) == len(seeds):
            report.fatal.append(owner)
    for owner, seed in report.missing:
        log.warning("seed %r (%s) not in vocabulary", seed, owner)
    if report.fatal and raise_on_fatal:
        raise ConfigError("no seed in vocabulary for: " + ", ".join(report.fatal))
    return report
