"""Exception types shared across the package."""


class VtreidError(Exception):
    """Base class for all package-specific errors."""


class ValidationError(VtreidError):
    """A config or parameter value failed validation before any work started."""


class ManifestError(VtreidError):
    """A dataset manifest could not be parsed or violates its schema."""


class LabelAbsentError(VtreidError):
    """Identity labels were requested from an unlabeled (target-tagged) dataset."""


class ContractError(VtreidError):
    """An operation was called with arguments violating its preconditions."""


class ShapeError(ContractError):
    """Array or tensor arguments have incompatible shapes."""


class SamplingError(VtreidError):
    """A batch request cannot be satisfied by the dataset."""


class ProtocolError(VtreidError):
    """An evaluation-protocol precondition does not hold (e.g. query identity missing from gallery)."""


class CheckpointError(VtreidError):
    """A checkpoint bundle is missing, corrupt, or does not match the requested config."""


class TrainingDivergedError(VtreidError):
    """Training produced a non-finite loss component."""


class LockError(VtreidError):
    """An output directory is already locked by another writer."""
