"""Exception types raised by estimators and numeric kernels."""

from __future__ import annotations


class EstimationError(Exception):
    """Base class for recoverable estimation failures.

    Monte Carlo drivers catch this class to count a run as failed without
    aborting the campaign.
    """


class DegenerateGeometryError(EstimationError):
    """Source coincides with a sensor (or its vertical line in 3-D)."""


class InvalidScatterError(DegenerateGeometryError):
    """Sensor second-moment matrix is not positive definite.

    Happens only for degenerate deployments (e.g. all sensors at one point),
    hence a special case of degenerate geometry.
    """


class IllConditionedError(EstimationError):
    """A small linear solve was singular or too badly conditioned to trust.

    Carries the condition estimate so campaign reports can distinguish
    near-degenerate scenario cells from hard failures.
    """

    def __init__(self, message: str, cond: float | None = None):
        super().__init__(message)
        self.cond = cond


class UnidentifiableGeometryError(IllConditionedError):
    """Fisher information is singular: the geometry cannot localize the source."""


class UndefinedCrlbError(EstimationError):
    """CRLB requested with zero noise variance."""
