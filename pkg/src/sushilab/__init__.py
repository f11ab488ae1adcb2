"""Poisson T-point processes over rank-one infinite-measure transformations."""

from .engine import (
    AffineSpacerRule,
    CutAndStackSpec,
    LevelBoxSet,
    Point,
    PRESETS,
    RankOneMachine,
    build_machine,
    preset,
)
from .errors import (
    CollisionDetected,
    ConfigError,
    OrbitEscape,
    StageCapExceeded,
    SushilabError,
    WindowTooSmall,
)
from .point_process import (
    EscapeReport,
    PointConfiguration,
    PoissonGenerator,
    SushiGenerator,
    SushiSpec,
    build_sushi,
    count,
    pushforward_points,
    sample_poisson,
    superpose,
)

__version__ = "0.1.0"

__all__ = [
    "AffineSpacerRule", "CutAndStackSpec", "LevelBoxSet", "Point", "PRESETS", "RankOneMachine",
    "build_machine", "preset", "CollisionDetected", "ConfigError", "OrbitEscape", "StageCapExceeded",
    "SushilabError", "WindowTooSmall", "EscapeReport", "PointConfiguration", "PoissonGenerator",
    "SushiGenerator", "SushiSpec", "build_sushi", "count", "pushforward_points", "sample_poisson",
    "superpose",
]
