"""Exception types shared across the library."""


class PnflowsError(Exception):
    """Base class for all library errors."""


class DomainError(PnflowsError, ValueError):
    """An argument lies outside the mathematical domain of a function."""


class SupportError(PnflowsError, ValueError):
    """A point does not lie on the support of a distribution."""


class SingularityError(PnflowsError, ValueError):
    """Evaluation requested at or too close to a singular point of a map."""


class DegeneratePathError(PnflowsError, ValueError):
    """An interpolation path is undefined (antipodal or norm-crossing endpoints)."""


class UnsupportedTemperatureError(PnflowsError, ValueError):
    """Temperature sampling is not defined for this distribution."""


class FormatError(PnflowsError, ValueError):
    """A file does not conform to its declared format.

    ``detail`` carries the byte offset or line number of the offending
    content when known.
    """

    def __init__(self, message: str, *, detail: str | None = None):
        super().__init__(message if detail is None else f"{message} ({detail})")
        self.detail = detail


class ConfigError(PnflowsError, ValueError):
    """An experiment configuration violates the schema.

    Collects every violated field so a single run reports all problems.
    """

    def __init__(self, violations: list[str]):
        super().__init__("invalid configuration: " + "; ".join(violations))
        self.violations = list(violations)


class NonFiniteError(PnflowsError, ArithmeticError):
    """A forward pass or loss became non-finite.

    Carries the chain position (``layer_index``) and, during training,
    the epoch/batch at which the blow-up occurred.
    """

    def __init__(self, message: str, *, layer_index: int | None = None,
                 epoch: int | None = None, batch: int | None = None):
        parts = [message]
        if layer_index is not None:
            parts.append(f"layer={layer_index}")
        if epoch is not None:
            parts.append(f"epoch={epoch}")
        if batch is not None:
            parts.append(f"batch={batch}")
        super().__init__(" ".join(parts))
        self.layer_index = layer_index
        self.epoch = epoch
        self.batch = batch


class SimplexUnderflowWarning(RuntimeWarning):
    """The stick-breaking remainder underflowed double precision.

    Emitted instead of a hard dimension cut-off: the map stays usable but
    densities involving the underflowed coordinates are unreliable.
    """
