"""Run configuration files."""

from __future__ import annotations

import dataclasses
import hashlib
import json
import os
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

import lark

from .coefficient import INFINITE, Exponent, MetricParams, format_exponent, parse_exponent
from .errors import ConfigError, Error
from .geometry import InclusionShape, shape_from_config
from .grid_solver import GridSpec
from .types import Point2, as_point

__all__ = [
    "ExperimentSection",
    "MetricSection",
    "OutputSection",
    "RunConfig",
    "ShapeSection",
    "SolverSection",
    "load_config",
    "parse_config",
]

PathLike = Union[str, os.PathLike]


@dataclass
class ShapeSection:
    shape: str = "disk"
    center: Point2 = Point2(0.5, 0.5)
    radius: float = 0.25
    half_side: float = 0.2
    vertices: Optional[Tuple[Point2, ...]] = None


@dataclass
class MetricSection:
    beta: float = 2.0
    p: Exponent = 0.5
    p_list: Tuple[Exponent, ...] = (0.5, 1.0, 2.0, INFINITE)
    epsilon: float = 1.0
    epsilon_list: Tuple[float, ...] = (1 / 3, 1 / 5, 1 / 9, 1 / 17)


@dataclass
class SolverSection:
    nodes_per_cell: int = 64
    stencil: str = "N16"
    padding_cells: float = 1.0
    shorten_rounds: int = 64
    max_cells: int = 10_000
    max_nodes: int = 40_000_000
    workers: int = 1


@dataclass
class ExperimentSection:
    k_range: Tuple[int, int] = (1, 12)
    n_pairs: int = 100
    directions: int = 8
    R_list: Tuple[float, ...] = (4.0, 8.0, 16.0, 32.0)
    n_trials: int = 50
    n_samples: int = 256
    refine_pieces: Tuple[int, ...] = (1, 2, 4)
    xi1: Point2 = Point2(0.0, 0.0)
    xi2: Point2 = Point2(0.5, 0.5)
    tol_grid: float = 0.02
    gap_tolerance: float = 0.05
    exponent_tolerance: float = 0.15

    @property
    def ks(self) -> range:
        lo, hi = self.k_range
        return range(lo, hi + 1)


@dataclass
class OutputSection:
    out_dir: str = "."
    emit_svg: bool = False
    timings: bool = False


@dataclass
class RunConfig:
    """Resolved run configuration.

    Attributes:
        seed: Seed of every random draw of the run.
        shape: Inclusion shape settings.
        metric: Contrast parameters.
        solver: Grid solver settings.
        experiment: Experiment settings.
        output: Output settings.
    """

    seed: int = 0
    shape: ShapeSection = field(default_factory=ShapeSection)
    metric: MetricSection = field(default_factory=MetricSection)
    solver: SolverSection = field(default_factory=SolverSection)
    experiment: ExperimentSection = field(default_factory=ExperimentSection)
    output: OutputSection = field(default_factory=OutputSection)

    def make_shape(self) -> InclusionShape:
        return shape_from_config(dataclasses.asdict(self.shape))

    def metric_params(self) -> MetricParams:
        return MetricParams(self.metric.beta, self.metric.p, self.metric.epsilon)

    def grid_spec(self) -> GridSpec:
        s = self.solver
        return GridSpec(
            nodes_per_cell=s.nodes_per_cell,
            stencil=s.stencil,
            padding_cells=s.padding_cells,
            shorten_rounds=s.shorten_rounds,
            max_cells=s.max_cells,
            max_nodes=s.max_nodes,
        )

    def to_json(self) -> str:
        """Canonical JSON form. The output directory is not part of it."""
        data = dataclasses.asdict(self)
        del data["output"]["out_dir"]
        return json.dumps(_jsonable(data), sort_keys=True, separators=(",", ":"))

    def digest(self) -> str:
        return hashlib.sha256(self.to_json().encode()).hexdigest()[:16]

    def header(self) -> str:
        """Provenance line written at the top of every output file."""
        from . import __version__

        return f"twophase {__version__} config={self.digest()} seed={self.seed}"


def _jsonable(x: Any) -> Any:
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if x is INFINITE:
        return format_exponent(x)
    return x


def _int(value: Any) -> int:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValueError(f"expected an integer, got {value!r}")
    if int(value) != value:
        raise ValueError(f"expected an integer, got {value!r}")
    return int(value)


def _float(value: Any) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValueError(f"expected a number, got {value!r}")
    return float(value)


def _bool(value: Any) -> bool:
    if value in ("true", "false"):
        return value == "true"
    raise ValueError(f"expected true or false, got {value!r}")


def _str(value: Any) -> str:
    if not isinstance(value, str):
        raise ValueError(f"expected a string, got {value!r}")
    return value


def _exponent(value: Any) -> Exponent:
    if isinstance(value, list):
        raise ValueError(f"expected a number or inf, got {value!r}")
    return parse_exponent(value)


def _point(value: Any) -> Point2:
    if not isinstance(value, list):
        raise ValueError(f"expected a point [x, y], got {value!r}")
    return as_point([_float(v) for v in value])


def _list_of(convert: Callable[[Any], Any]) -> Callable[[Any], Tuple]:
    def _convert(value: Any) -> Tuple:
        if not isinstance(value, list):
            raise ValueError(f"expected a list, got {value!r}")
        return tuple(convert(v) for v in value)

    return _convert


def _k_range(value: Any) -> Tuple[int, int]:
    bounds = _list_of(_int)(value)
    if len(bounds) != 2 or bounds[0] < 1 or bounds[1] < bounds[0]:
        raise ValueError(f"expected [lo, hi] with 1 <= lo <= hi, got {value!r}")
    return bounds  # type: ignore


def _choice(*choices: str) -> Callable[[Any], str]:
    def _convert(value: Any) -> str:
        if value not in choices:
            raise ValueError(f"expected one of {', '.join(choices)}, got {value!r}")
        return value

    return _convert


_SECTIONS: Dict[str, Tuple[type, Dict[str, Callable[[Any], Any]]]] = {
    "shape": (
        ShapeSection,
        {
            "shape": _choice("disk", "square", "polygon"),
            "center": _point,
            "radius": _float,
            "half_side": _float,
            "vertices": _list_of(_point),
        },
    ),
    "metric": (
        MetricSection,
        {
            "beta": _float,
            "p": _exponent,
            "p_list": _list_of(_exponent),
            "epsilon": _float,
            "epsilon_list": _list_of(_float),
        },
    ),
    "solver": (
        SolverSection,
        {
            "nodes_per_cell": _int,
            "stencil": _choice("N8", "N16"),
            "padding_cells": _float,
            "shorten_rounds": _int,
            "max_cells": _int,
            "max_nodes": _int,
            "workers": _int,
        },
    ),
    "experiment": (
        ExperimentSection,
        {
            "k_range": _k_range,
            "n_pairs": _int,
            "directions": _int,
            "R_list": _list_of(_float),
            "n_trials": _int,
            "n_samples": _int,
            "refine_pieces": _list_of(_int),
            "xi1": _point,
            "xi2": _point,
            "tol_grid": _float,
            "gap_tolerance": _float,
            "exponent_tolerance": _float,
        },
    ),
    "output": (
        OutputSection,
        {"out_dir": _str, "emit_svg": _bool, "timings": _bool},
    ),
}

_TOP_LEVEL: Dict[str, Callable[[Any], Any]] = {"seed": _int}


def _number(s: str) -> Union[int, float]:
    try:
        return int(s)
    except ValueError:
        return float(s)


def _decode_quoted_string(s: str) -> str:
    try:
        return json.loads(s)
    except ValueError:
        return s[1:-1]


def _make_lexer_callback(f: Callable[[str], Any]) -> Callable[[lark.Token], lark.Token]:
    def _callback(token: lark.Token) -> lark.Token:
        return lark.Token.new_borrow_pos(token.type, f(token.value), token)

    return _callback


class _Assignment:
    __slots__ = ("section", "key", "value", "line")

    def __init__(self, section: Optional[str], key: str, value: Any, line: int):
        self.section = section
        self.key = key
        self.value = value
        self.line = line


class _TransformToConfig(lark.Transformer):
    """Transform a parse tree into a `RunConfig`."""

    def number(self, args):
        (t_value,) = args
        return t_value.value

    def string(self, args):
        (t_value,) = args
        return t_value.value

    def word(self, args):
        (t_value,) = args
        return str(t_value.value)

    def list(self, args):
        return list(args)

    def section_header(self, args):
        (t_name,) = args
        if t_name.value not in _SECTIONS:
            raise ConfigError(f"Unknown section [{t_name.value}]", line=t_name.line)
        return ("section", t_name.value, t_name.line)

    def assignment(self, args):
        t_name, value = args
        return ("assignment", str(t_name.value), value, t_name.line)

    def start(self, args):
        assignments: List[_Assignment] = []
        section: Optional[str] = None
        seen_sections = set()
        for item in args:
            if item[0] == "section":
                _, section, line = item
                if section in seen_sections:
                    raise ConfigError(f"Duplicate section [{section}]", line=line)
                seen_sections.add(section)
            else:
                _, key, value, line = item
                assignments.append(_Assignment(section, key, value, line))
        return _resolve(assignments)


def _resolve(assignments: Sequence[_Assignment]) -> RunConfig:
    values: Dict[Optional[str], Dict[str, Any]] = {}
    for a in assignments:
        keys = _TOP_LEVEL if a.section is None else _SECTIONS[a.section][1]
        where = a.key if a.section is None else f"{a.section}.{a.key}"
        if a.key not in keys:
            raise ConfigError(f"Unknown key {where}", line=a.line)
        section_values = values.setdefault(a.section, {})
        if a.key in section_values:
            raise ConfigError(f"Duplicate key {where}", line=a.line)
        try:
            section_values[a.key] = keys[a.key](a.value)
        except (Error, ValueError) as e:
            raise ConfigError(f"{where}: {e}", line=a.line) from None

    sections = {
        name: cls(**values.get(name, {})) for name, (cls, _) in _SECTIONS.items()
    }
    return RunConfig(**values.get(None, {}), **sections)


def _get_parser() -> lark.Lark:
    return lark.Lark.open_from_package(
        "twophase",
        "config.lark",
        parser="lalr",
        transformer=_TransformToConfig(),
        lexer_callbacks={
            "NUMBER": _make_lexer_callback(_number),
            "QUOTED_STRING": _make_lexer_callback(_decode_quoted_string),
        },
    )


def parse_config(text: str) -> RunConfig:
    """Parse configuration text.

    Raises:
        ConfigError: On syntax errors, unknown sections or keys, duplicated keys
            and ill-typed values.
    """
    parser = _get_parser()
    try:
        # parser.parse() value is the return value of _TransformToConfig.start()
        return parser.parse(text + "\n")  # type: ignore
    except lark.exceptions.VisitError as e:
        if isinstance(e.orig_exc, ConfigError):
            raise e.orig_exc from None
        raise
    except lark.exceptions.UnexpectedInput as e:
        raise ConfigError(f"Syntax error at column {e.column}", line=e.line) from None


def load_config(file: PathLike) -> RunConfig:
    with open(file, "r") as f:
        return parse_config(f.read())
