"""Exception types shared across the package."""


class GraphParseError(ValueError):
    """Malformed edge-list input. Carries the 1-based line number."""

    def __init__(self, line_no, message):
        self.line_no = line_no
        super().__init__(f"line {line_no}: {message}")


class EmptyGraphError(ValueError):
    """Input contained no edges."""


class ConfigurationError(ValueError):
    """Invalid option value or option combination."""


class ContractViolationError(ValueError):
    """A documented precondition does not hold for the given arguments."""


class DegenerateWeightsError(ValueError):
    """Score map cannot be normalized into loss weights (e.g. all-zero scores)."""


class MissingEmbeddingError(KeyError):
    """A node required for feature construction has no embedding row."""

    def __init__(self, node_id):
        self.node_id = node_id
        super().__init__(f"no embedding row for node {node_id}")


class NegativeSamplingError(RuntimeError):
    """Negative-edge rejection sampling exhausted its attempt budget."""


class SingleClassError(ValueError):
    """Classifier training data contains a single label."""


class TrainingDivergedError(RuntimeError):
    """A loss went non-finite, or parameters left float32 range."""

    def __init__(self, batch_index, term):
        self.batch_index = batch_index
        self.term = term
        super().__init__(f"{term} diverged at batch {batch_index}")


class PipelineStageError(RuntimeError):
    """A pipeline stage failed; carries the stage name for diagnostics."""

    def __init__(self, stage, cause):
        self.stage = stage
        self.cause = cause
        super().__init__(f"stage '{stage}' failed: {cause}")
