"""Exception types shared across the package."""


class PdmpError(Exception):
    """Base class for all package errors."""


class BadDimension(PdmpError):
    """Edge directions with inconsistent ambient dimensions."""


class DuplicateDirection(PdmpError):
    """Two edge directions coincide after normalisation."""


class BadEpsilon(PdmpError):
    """Extension or shaking parameter outside its admissible range."""


class BadRho(PdmpError):
    """Shake amplitude must satisfy 0 <= rho <= epsilon."""


class OffNetwork(PdmpError):
    """A point (edge, coord) does not lie on the network."""


class InadmissibleControl(PdmpError):
    """Control not in the admissible set at the given point/mode."""


class NoAdmissibleControl(PdmpError):
    """Discretisation produced an empty control set at some node."""


class MissingPrecondition(PdmpError):
    """A structural assumption required by an operation does not hold."""


class LeftNetwork(PdmpError):
    """Trajectory left the network: drift at a boundary points outward
    with no edge to continue on."""


class StalledEvent(PdmpError):
    """Event localisation failed to converge."""


class RateBoundViolated(PdmpError):
    """Observed jump intensity exceeds the declared bound."""


class StepTooLarge(PdmpError):
    """Time step violates the stability constraint of the scheme."""


class ScaleViolated(PdmpError):
    """Input outside the validity range of a projection construction."""


class MarginViolated(PdmpError):
    """Mollification stencil leaves the domain of the extended field."""


class SchemeMismatch(PdmpError):
    """Value field and LP were built from different discretisations."""


class LpInfeasible(PdmpError):
    """Linear program has no feasible point."""


class LpUnbounded(PdmpError):
    """Linear program is unbounded below."""


class LpIterationLimit(PdmpError):
    """Simplex iteration cap reached before optimality."""


class ConfigError(PdmpError):
    """Malformed run configuration."""


class NoJumpWithinArc:
    """Sentinel returned by jump sampling when the proposed jump falls
    beyond the arc horizon.  Carries the leftover exponential clock so
    sampling can resume on the next arc without bias."""

    __slots__ = ("residual_clock",)

    def __init__(self, residual_clock: float):
        self.residual_clock = float(residual_clock)

    def __repr__(self):  # pragma: no cover
        return f"NoJumpWithinArc(residual_clock={self.residual_clock!r})"
