"""SVG chart output protocols

Charts are drawn with matplotlib. Figure ids are salted with a constant and the
date metadata is dropped so that equal tables give byte-identical files.
"""

from __future__ import annotations

import io
import math
from typing import Dict, List, Sequence, TextIO, Tuple

import matplotlib
import numpy as np
from matplotlib.figure import Figure

from ..types import Record, Table

__all__ = ["write_line_chart", "write_polar_chart"]

_RC = {"svg.hashsalt": "twophase", "svg.fonttype": "none"}


def _value(record: Record, field: str) -> float:
    text = record.get(field, "")
    if text == "":
        return math.nan
    try:
        return float(text)
    except ValueError:
        return math.nan


def _series(
    records: Sequence[Record], x: str, y: str, group: str
) -> List[Tuple[str, np.ndarray, np.ndarray]]:
    groups: Dict[str, List[Record]] = {}
    for record in records:
        groups.setdefault(record.get(group, "") if group else "", []).append(record)
    out = []
    for name, rows in groups.items():
        xs = np.array([_value(r, x) for r in rows])
        ys = np.array([_value(r, y) for r in rows])
        out.append((name, xs, ys))
    return out


def _write_figure(f: TextIO, fig: Figure, header: str) -> None:
    buf = io.StringIO()
    with matplotlib.rc_context(_RC):
        fig.savefig(buf, format="svg", metadata={"Date": None})
    text = buf.getvalue()
    if header:
        declaration, sep, rest = text.partition("\n")
        text = f"{declaration}{sep}<!-- {header} -->\n{rest}"
    f.write(text)


def write_line_chart(f: TextIO, data: Table, args: Dict) -> None:
    """Plot field `args["y"]` against `args["x"]`, one line per `args["group"]` value.

    Optional args: ``title``, ``xlabel``, ``ylabel``, ``logx``, ``logy`` and
    ``header`` (written as an XML comment).
    """
    x, y = args["x"], args["y"]
    group = args.get("group", "")
    records = list(data.records)
    fig = Figure(figsize=(6, 4))
    ax = fig.add_subplot()
    for name, xs, ys in _series(records, x, y, group):
        label = f"{group}={name}" if group else y
        ax.plot(xs, ys, marker="o", markersize=3, label=label)
    if args.get("logx"):
        ax.set_xscale("log")
    if args.get("logy"):
        ax.set_yscale("log")
    ax.set_xlabel(args.get("xlabel", x))
    ax.set_ylabel(args.get("ylabel", y))
    if "title" in args:
        ax.set_title(args["title"])
    ax.grid(True, alpha=0.3)
    ax.legend(loc="best", fontsize="small")
    fig.tight_layout()
    _write_figure(f, fig, args.get("header", ""))


def write_polar_chart(f: TextIO, data: Table, args: Dict) -> None:
    """Plot the closed curve ``radius(angle)`` of a sampled norm.

    `args["angle"]` and `args["radius"]` name the fields; angles are in radians.
    """
    records = list(data.records)
    angles = np.array([_value(r, args["angle"]) for r in records])
    radii = np.array([_value(r, args["radius"]) for r in records])
    order = np.argsort(angles)
    angles = np.append(angles[order], angles[order][:1] + 2 * math.pi)
    radii = np.append(radii[order], radii[order][:1])
    fig = Figure(figsize=(5, 5))
    ax = fig.add_subplot(projection="polar")
    ax.plot(angles, radii, marker="o", markersize=3)
    ax.set_rmin(0.0)
    if "title" in args:
        ax.set_title(args["title"])
    _write_figure(f, fig, args.get("header", ""))
