"""CSV formats: configuration dumps and report tables."""

from __future__ import annotations

import csv
import io
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence, Union

from .engine import LevelBoxSet, Point
from .point_process import PointConfiguration

CONFIG_COLUMNS = ("stage", "level", "frac_numerator_bits", "provenance")

PathLike = Union[str, Path]


def _tag_text(tag) -> str:
    return "" if tag is None else f"{tag[0]}:{tag[1]}"


def _parse_tag(text: str):
    if not text:
        return None
    a, b = text.split(":")
    return int(a), int(b)


def dumps_configuration(config: PointConfiguration) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CONFIG_COLUMNS)
    for p in config.points:
        writer.writerow((p.stage, p.level, f"0x{p.frac:016x}", _tag_text(config.tag(p))))
    return buf.getvalue()


def loads_configuration(text: str, window: LevelBoxSet) -> PointConfiguration:
    reader = csv.DictReader(io.StringIO(text))
    if tuple(reader.fieldnames or ()) != CONFIG_COLUMNS:
        raise ValueError(f"expected columns {CONFIG_COLUMNS}, got {reader.fieldnames}")
    points, provenance = [], {}
    for row in reader:
        p = Point(int(row["stage"]), int(row["level"]), int(row["frac_numerator_bits"], 16))
        points.append(p)
        tag = _parse_tag(row["provenance"])
        if tag is not None:
            provenance[p] = tag
    return PointConfiguration(window, tuple(points), provenance or None)


def write_configuration(path: PathLike, config: PointConfiguration) -> None:
    Path(path).write_text(dumps_configuration(config))


def read_configuration(path: PathLike, window: LevelBoxSet) -> PointConfiguration:
    return loads_configuration(Path(path).read_text(), window)


def describe_set(s: LevelBoxSet) -> str:
    """Compact text for a box set, e.g. ``s3:L10-39`` or ``s2:L0[0,1/2)``."""
    parts = []
    run_start = run_end = None
    for level, lo, hi in s.boxes:
        if lo == 0 and hi == 1:
            if run_end is not None and level == run_end + 1:
                run_end = level
                continue
            if run_start is not None:
                parts.append(_run(run_start, run_end))
            run_start = run_end = level
        else:
            if run_start is not None:
                parts.append(_run(run_start, run_end))
                run_start = run_end = None
            parts.append(f"L{level}[{lo},{hi})")
    if run_start is not None:
        parts.append(_run(run_start, run_end))
    return f"s{s.stage}:" + ("+".join(parts) if parts else "empty")


def _run(a: int, b: int) -> str:
    return f"L{a}" if a == b else f"L{a}-{b}"


def _cell(value) -> str:
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, Fraction):
        return str(value)
    if isinstance(value, bool):
        return "pass" if value else "fail"
    return str(value)


def table_text(columns: Sequence[str], rows: Iterable[Mapping]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_cell(row.get(c, "")) for c in columns])
    return buf.getvalue()


def write_table(path: PathLike, columns: Sequence[str], rows: Iterable[Mapping]) -> None:
    Path(path).write_text(table_text(columns, rows))


def read_table(path: PathLike) -> list[dict[str, str]]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def parse_rational(text: Optional[str]) -> Optional[Fraction]:
    """Parse ``"p/q"`` or an integer; decimal and exponent literals are rejected."""
    if text is None:
        return None
    text = str(text).strip()
    if any(c in text for c in ".eE"):
        raise ValueError(f"rationals must be written as p/q, got {text!r}")
    return Fraction(text)
