"""Shared exception types."""


class ResourceCapError(RuntimeError):
    """A computation would exceed a configured resource cap (support size,
    moment order, exact-binomial range, MC budget, ...)."""


class ConfigError(ValueError):
    """A configuration is structurally invalid or infeasible."""
