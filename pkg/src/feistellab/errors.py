"""Error types shared across the lab."""


class FeistelLabError(Exception):
    """Base class for errors raised by this package."""


class ConfigurationError(FeistelLabError):
    """Invalid parameters, widths, or option combinations."""


class CapacityError(FeistelLabError):
    """Requested table or state exceeds the desk-scale guard."""
