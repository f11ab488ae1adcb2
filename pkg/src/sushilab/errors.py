"""Exceptions shared across the package."""


class SushilabError(Exception):
    pass


class StageCapExceeded(SushilabError):
    """A refinement was requested beyond the machine's ``max_stage``."""


class OrbitEscape(SushilabError):
    """The image of a point or set is not defined below ``max_stage``.

    This happens on the measure-zero spines at the top and bottom of the
    towers (or for sets that touch them), never silently.
    """


class CollisionDetected(SushilabError):
    """Two points of a configuration coincide."""


class WindowTooSmall(SushilabError):
    """A sampling window cannot be enlarged to cover the requested shifts."""


class ConfigError(SushilabError):
    pass
