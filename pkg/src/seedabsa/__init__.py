"""Seed-guided aspect and sentiment topic modelling."""

from .config import (AspectSpec, RunParameters, SeedConfiguration, load_config,
                     parse_config)
from .corpus import Corpus, Vocabulary, ingest
from .errors import SeedAbsaError

__version__ = "0.1.0"

__all__ = [
    "AspectSpec", "RunParameters", "SeedConfiguration", "load_config", "parse_config",
    "Corpus", "Vocabulary", "ingest", "SeedAbsaError", "__version__",
]
