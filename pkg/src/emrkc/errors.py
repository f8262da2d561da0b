"""Exceptions shared across the package."""


class ConfigError(ValueError):
    """Invalid run configuration (CLI exit code 2)."""


class NumericalAbort(RuntimeError):
    """A simulation produced non-finite or runaway values (CLI exit code 3)."""

    def __init__(self, message, *, step=None, t=None, dt=None, stage=None):
        super().__init__(message)
        self.step = step
        self.t = t
        self.dt = dt
        self.stage = stage


class NonFiniteStageError(NumericalAbort):
    def __init__(self, stage, where=""):
        super().__init__(f"non-finite value in {where + ' ' if where else ''}RKC stage {stage}", stage=stage)
        self.where = where


class CgNotConverged(RuntimeError):
    def __init__(self, iterations, residual):
        super().__init__(f"CG did not converge in {iterations} iterations (relative residual {residual:.3e})")
        self.iterations = iterations
        self.residual = residual
