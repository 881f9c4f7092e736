"""Exception types shared across the toolkit."""


class PapkitError(Exception):
    """Base class for all toolkit errors."""


class NonPositiveT(PapkitError):
    """A truncation radius T must be strictly positive."""


class QuadratureFailure(PapkitError):
    """Adaptive refinement hit its subdivision limit before reaching tolerance."""


class InconclusiveLimit(PapkitError):
    """A limit estimate did not stabilize within the truncation schedule.

    Signals that the caller should extend the schedule; it is not a verdict.
    """


class DivergentRatio(PapkitError):
    """A mass ratio grew monotonically past the divergence guard."""


class ConstantPolynomial(PapkitError):
    """Polynomial weight analysis requires a nonconstant polynomial."""


class DegenerateCoefficients(PapkitError):
    """Leading polynomial coefficient is negligible next to the others."""


class NotConverged(PapkitError):
    """A truncated mean was required to converge but did not."""


class ZeroFrequency(PapkitError):
    """The oscillatory decay condition is only defined for nonzero frequencies."""


class OscillationConditionFailed(PapkitError):
    """The oscillatory weighted-mean decay precondition does not hold."""


class MassRatioUndefined(PapkitError):
    """The limiting mass ratio of the weight pair could not be established."""


class NotMassRatioLimited(PapkitError):
    """A weight lacks the finite enlarged-window mass-ratio limits required here."""


class ConditionViolated(PapkitError):
    """A hypothesis on the weight pair fails numerically (named in the message)."""


class MissingFrequencies(PapkitError):
    """The residual still carries a spectral peak on the candidate grid."""


class NoTranslationNumberFound(PapkitError):
    """No epsilon-translation number found within the scanned horizon."""


class TailTruncationFailure(PapkitError):
    """Kernel tails decay too slowly for the configured convolution window."""


class PreconditionFailed(PapkitError):
    """A theorem-level hypothesis was checked and found to fail."""

    def __init__(self, condition, detail=""):
        self.condition = condition
        msg = f"precondition violated: {condition}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


class DichotomyViolated(PapkitError):
    """Claimed dichotomy constants fail to dominate the measured envelope."""

    def __init__(self, t, s, norm, bound):
        self.witness = (t, s)
        self.norm = norm
        self.bound = bound
        super().__init__(
            f"dichotomy violated at (t={t:g}, s={s:g}): "
            f"norm {norm:.6g} exceeds bound {bound:.6g}"
        )


class NotAContraction(PapkitError):
    """The Lipschitz constant times the solver constant is not below one."""

    def __init__(self, lipschitz, solver_constant):
        self.lipschitz = lipschitz
        self.solver_constant = solver_constant
        super().__init__(
            f"fixed-point gate failed: K*C = {lipschitz * solver_constant:.6g} >= 1 "
            f"(K = {lipschitz:.6g}, C = {solver_constant:.6g})"
        )


class MaxIterExceeded(PapkitError):
    """Fixed-point iteration hit the iteration cap before the tolerance."""


class StepSizeUnderflow(PapkitError):
    """The propagator's adaptive integrator failed to advance."""


class SolveFailed(PapkitError):
    """A companion or reference solve did not produce a usable solution."""


class ConfigError(PapkitError):
    """A run configuration failed schema validation."""
