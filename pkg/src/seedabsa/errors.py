class SeedAbsaError(Exception):
    """Base class for errors raised by the pipeline."""


class ConfigError(SeedAbsaError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class CorpusError(SeedAbsaError):
    pass


class EmbeddingError(SeedAbsaError):
    pass


class ClusteringError(SeedAbsaError):
    pass


class SeparationError(SeedAbsaError):
    pass


class ConvergenceError(SeparationError):
    def __init__(self, message, grad_norm):
        self.grad_norm = grad_norm
        super().__init__(f"{message} (final gradient norm {grad_norm:.3g})")


class ModelError(SeedAbsaError):
    pass


class EvaluationError(SeedAbsaError):
    pass


class ArtifactError(SeedAbsaError):
    pass
