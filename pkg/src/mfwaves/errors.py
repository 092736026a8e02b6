"""Exception types shared across the package."""


class ValidationError(ValueError):
    """Bad configuration or arguments: malformed spec, missing field, violated precondition."""


class NumericalFailure(RuntimeError):
    """A well-posed request with no admissible numerical answer.

    Examples: requested speed below the critical speed, moment generating
    function divergent at the requested tilt, transform evaluated outside
    its domain.
    """
