"""Exceptions raised across the toolkit. The command line maps them onto
    exit codes (see cli.py).
"""


class ParameterDomainError(ValueError):
    """A physical parameter lies outside the domain the model is defined on."""


class ConfigError(ValueError):
    """A scenario file failed schema or domain validation."""


class ProjectionError(ValueError):
    """A world point cannot be projected (zero or negative depth)."""


class PlanningError(RuntimeError):
    """A hop target cannot be reached with the configured thruster.

        Args:
            message (str): what went wrong
            max_reach (float): largest vertical displacement reachable in the
            planned flight time, in m
    """

    def __init__(self, message, max_reach=None):
        super().__init__(message)
        self.max_reach = max_reach


class ConvergenceError(RuntimeError):
    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations
