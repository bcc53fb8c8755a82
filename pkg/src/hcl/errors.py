"""Exception hierarchy shared by all hcl modules."""


class HclError(Exception):
    """Base class for all package errors."""


class DomainError(HclError, ValueError):
    """Argument outside the operation's domain (bad k, nonpositive epsilon, ...)."""


class AdmissibilityError(HclError):
    """Eigenvalue tuple outside the Garding cone where a family value was requested."""


class NumericError(HclError):
    """An iterative kernel failed to reach its certified tolerance."""


class RangeError(DomainError):
    """Requested level value not attained on the search ray."""


class EmptyBandError(HclError):
    """No sample fell inside the requested level band."""


class HypothesisError(HclError):
    """A certified hypothesis (bounded level-set intersection) failed on a sampled ray."""


class LemmaViolationError(HclError):
    """A dichotomy/localization conclusion failed beyond tolerance; a genuine finding."""


class PreconditionError(DomainError):
    """Operation precondition violated (e.g. corner below growth threshold)."""


class StencilError(HclError):
    """Finite-difference stencil reached outside a non-periodic axis without data."""


class ConstructionError(HclError):
    """Subsolution ladder exhausted without meeting the cone and level conditions."""


class StallError(NumericError):
    """Newton damping underflowed without an acceptable step."""


class ConeExitError(NumericError):
    """No damped step could restore admissibility."""


class GaugeError(NumericError):
    """Bordered (closed-mode) linear system was singular."""


class ResolutionError(HclError):
    """Masked sub-domain too thin to carry the stencils."""


class ConfigError(HclError):
    """CLI configuration unreadable or inconsistent."""
