"""JSON configs for filter systems, walks and Walsh matrices.

A config is a JSON object with a ``kind`` field:

``filter``
    ``R`` (integer matrix, or an integer in dimension one), ``B`` (digit
    rows), ``l`` (frequency rows), and either ``a`` (M x N complex matrix) or
    the shorthand ``alpha`` (length M) for ``a[i, b] = alpha_i``.
``walk``
    ``vertices`` (labels), ``alphabet`` (M), ``targets`` (M x n vertex labels,
    ``null`` where the transition is impossible) and ``weights`` (M x n).
``walsh``
    ``A`` (M x N complex matrix).
``l2q``
    no data; the l^2(Q) model is fixed.

Complex numbers are written ``[re, im]``; plain numbers are accepted.  An
optional ``params`` object holds run parameters (``lmax``, ``depth``,
``seed``, ``tolerances``, ``basepoints``, ``line``).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from pathlib import Path

import numpy as np

from .model import DEFAULT_DEPTH, TAU_MAT, TAU_NUM, TAU_RANK, TAU_ZERO, FilterSystem, IFSSpec, as_fraction
from .walkgraph import WalkGraph

LMAX_CAP = 16
KINDS = ("filter", "walk", "walsh", "l2q")
DEFAULT_TOLERANCES = {"zero": TAU_ZERO, "num": TAU_NUM, "mat": TAU_MAT, "rank": TAU_RANK}


class ConfigError(ValueError):
    """Invalid config; the message starts with the offending field path."""

    def __init__(self, path: str, msg: str):
        self.path = path
        super().__init__(f"{path}: {msg}" if path else msg)


# ---------------------------------------------------------------------------
# scalars


def _complex(x, path: str) -> complex:
    if isinstance(x, bool):
        raise ConfigError(path, f"expected a number, got {x!r}")
    if isinstance(x, (int, float)):
        z = complex(x)
    elif isinstance(x, (list, tuple)) and len(x) == 2 and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in x):
        z = complex(x[0], x[1])
    else:
        raise ConfigError(path, f"expected a number or [re, im], got {x!r}")
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise ConfigError(path, "non-finite number")
    return z


def _encode_complex(z) -> list:
    z = complex(z)
    return [z.real, z.imag]


def _complex_matrix(x, path: str) -> np.ndarray:
    if not isinstance(x, list) or not x:
        raise ConfigError(path, "expected a nonempty list of rows")
    rows = []
    for i, row in enumerate(x):
        if not isinstance(row, list):
            raise ConfigError(f"{path}[{i}]", "expected a row (list)")
        rows.append([_complex(v, f"{path}[{i}][{j}]") for j, v in enumerate(row)])
    if len({len(r) for r in rows}) != 1:
        raise ConfigError(path, "rows have different lengths")
    return np.array(rows, dtype=complex)


def _int(x, path: str) -> int:
    if isinstance(x, bool) or not isinstance(x, (int, float)) or int(x) != x:
        raise ConfigError(path, f"expected an integer, got {x!r}")
    return int(x)


def _int_rows(x, path: str) -> list:
    if not isinstance(x, list) or not x:
        raise ConfigError(path, "expected a nonempty list")
    out = []
    for k, row in enumerate(x):
        if isinstance(row, list):
            out.append([_int(v, f"{path}[{k}][{j}]") for j, v in enumerate(row)])
        else:
            out.append([_int(row, f"{path}[{k}]")])
    return out


def _require(obj: dict, key: str, path: str):
    if key not in obj:
        raise ConfigError(f"{path}{key}", "missing field")
    return obj[key]


# ---------------------------------------------------------------------------
# filter systems


def system_from_dict(obj: dict, path: str = "") -> FilterSystem:
    R = _require(obj, "R", path)
    R = [[_int(R, f"{path}R")]] if not isinstance(R, list) else [
        r if isinstance(r, list) else [r] for r in _int_rows(R, f"{path}R")
    ]
    if len({len(r) for r in R}) != 1 or len(R) != len(R[0]):
        raise ConfigError(f"{path}R", f"R must be square, got {len(R)} rows of lengths {[len(r) for r in R]}")
    d = len(R)
    B = _int_rows(_require(obj, "B", path), f"{path}B")
    l = _int_rows(_require(obj, "l", path), f"{path}l")
    for name, rows in (("B", B), ("l", l)):
        for k, row in enumerate(rows):
            if len(row) != d:
                raise ConfigError(f"{path}{name}[{k}]", f"has dimension {len(row)}, expected {d} (the size of R)")
    try:
        ifs = IFSSpec(R, B)
    except ValueError as exc:
        raise ConfigError(f"{path}R" if "expansive" in str(exc) else f"{path}B", str(exc)) from None
    if "a" in obj and "alpha" in obj:
        raise ConfigError(f"{path}a", "give either a or alpha, not both")
    if "alpha" in obj:
        raw = obj["alpha"]
        if not isinstance(raw, list):
            raise ConfigError(f"{path}alpha", "expected a list")
        alpha = np.array([_complex(v, f"{path}alpha[{k}]") for k, v in enumerate(raw)])
        if alpha.size != len(l):
            raise ConfigError(f"{path}alpha", f"has length {alpha.size}, expected M = {len(l)}")
        a = np.repeat(alpha[:, None], ifs.N, axis=1)
    else:
        a = _complex_matrix(_require(obj, "a", path), f"{path}a")
        if a.shape != (len(l), ifs.N):
            raise ConfigError(f"{path}a", f"coefficient matrix has shape {a.shape}, expected (M, N) = ({len(l)}, {ifs.N})")
    try:
        return FilterSystem(ifs, l, a, name=str(obj.get("name", "")))
    except ValueError as exc:
        raise ConfigError(f"{path}l", str(exc)) from None


def system_to_dict(fs: FilterSystem) -> dict:
    out = {"kind": "filter", "name": fs.name, "R": [list(r) for r in fs.ifs.R], "B": [list(b) for b in fs.ifs.B], "l": [list(x) for x in fs.l]}
    if fs.is_alpha_form:
        out["alpha"] = [_encode_complex(z) for z in fs.alpha]
    else:
        out["a"] = [[_encode_complex(z) for z in row] for row in fs.a]
    return out


# ---------------------------------------------------------------------------
# walks


def _vertex_from_json(v, path: str):
    if isinstance(v, bool) or v is None:
        raise ConfigError(path, f"bad vertex label {v!r}")
    if isinstance(v, int):
        return v
    if isinstance(v, str):
        try:
            return (Fraction(v),)
        except ValueError:
            return v
    if isinstance(v, list):
        try:
            return tuple(as_fraction(x) for x in v)
        except (TypeError, ValueError) as exc:
            raise ConfigError(path, str(exc)) from None
    raise ConfigError(path, f"bad vertex label {v!r}")


def _vertex_to_json(v):
    if isinstance(v, tuple) and all(isinstance(x, Fraction) for x in v):
        return [str(x) for x in v]
    return v


def walk_from_dict(obj: dict, path: str = "") -> WalkGraph:
    verts_raw = _require(obj, "vertices", path)
    if not isinstance(verts_raw, list) or not verts_raw:
        raise ConfigError(f"{path}vertices", "expected a nonempty list")
    verts = [_vertex_from_json(v, f"{path}vertices[{k}]") for k, v in enumerate(verts_raw)]
    if len(set(verts)) != len(verts):
        raise ConfigError(f"{path}vertices", "labels must be distinct")
    index = {v: k for k, v in enumerate(verts)}
    M = _int(_require(obj, "alphabet", path), f"{path}alphabet")
    tg = _require(obj, "targets", path)
    W = _complex_matrix(_require(obj, "weights", path), f"{path}weights")
    if W.shape != (M, len(verts)):
        raise ConfigError(f"{path}weights", f"has shape {W.shape}, expected (M, n) = ({M}, {len(verts)})")
    if not isinstance(tg, list) or len(tg) != M:
        raise ConfigError(f"{path}targets", f"expected {M} rows")
    T = np.full((M, len(verts)), -1, dtype=np.int64)
    for i, row in enumerate(tg):
        if not isinstance(row, list) or len(row) != len(verts):
            raise ConfigError(f"{path}targets[{i}]", f"expected {len(verts)} entries")
        for k, v in enumerate(row):
            if v is None:
                continue
            lab = _vertex_from_json(v, f"{path}targets[{i}][{k}]")
            if lab not in index:
                raise ConfigError(f"{path}targets[{i}][{k}]", f"{v!r} is not a vertex")
            T[i, k] = index[lab]
    rev = obj.get("reversing")
    try:
        return WalkGraph(tuple(verts), T, W, reversing=rev)
    except ValueError as exc:
        raise ConfigError(f"{path}targets", str(exc)) from None


def walk_to_dict(g: WalkGraph) -> dict:
    verts = [_vertex_to_json(v) for v in g.vertices]
    targets = [[None if t < 0 else verts[t] for t in row.tolist()] for row in g.targets]
    out = {
        "kind": "walk",
        "vertices": verts,
        "alphabet": g.M,
        "targets": targets,
        "weights": [[_encode_complex(z) for z in row] for row in g.weights],
    }
    if g.reversing is not None:
        out["reversing"] = g.reversing
    return out


def walks_equal(g: WalkGraph, h: WalkGraph) -> bool:
    return (
        g.vertices == h.vertices
        and g.reversing == h.reversing
        and np.array_equal(g.targets, h.targets)
        and np.array_equal(g.weights, h.weights)
    )


# ---------------------------------------------------------------------------
# run configs


@dataclass
class RunConfig:
    kind: str
    name: str = ""
    system: FilterSystem | None = None
    walk: WalkGraph | None = None
    walsh: np.ndarray | None = None
    lmax: int = 6
    depth: int = DEFAULT_DEPTH
    seed: int = 0
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    basepoints: list | None = None
    line: dict | None = None
    source: str | None = None

    def to_dict(self) -> dict:
        if self.kind == "filter":
            out = system_to_dict(self.system)
        elif self.kind == "walk":
            out = walk_to_dict(self.walk)
        elif self.kind == "walsh":
            out = {"kind": "walsh", "A": [[_encode_complex(z) for z in row] for row in self.walsh]}
        else:
            out = {"kind": "l2q"}
        out["name"] = self.name
        params = {"lmax": self.lmax, "depth": self.depth, "seed": self.seed, "tolerances": dict(self.tolerances)}
        if self.basepoints is not None:
            params["basepoints"] = [[str(x) for x in p] for p in self.basepoints]
        if self.line is not None:
            params["line"] = self.line
        out["params"] = params
        return out

    def __eq__(self, other):
        if not isinstance(other, RunConfig):
            return NotImplemented
        same_payload = (
            self.system == other.system
            and (self.walk is None) == (other.walk is None)
            and (self.walk is None or walks_equal(self.walk, other.walk))
            and (self.walsh is None) == (other.walsh is None)
            and (self.walsh is None or np.array_equal(self.walsh, other.walsh))
        )
        return same_payload and (self.kind, self.name, self.lmax, self.depth, self.seed, self.tolerances, self.basepoints, self.line) == (
            other.kind,
            other.name,
            other.lmax,
            other.depth,
            other.seed,
            other.tolerances,
            other.basepoints,
            other.line,
        )


def _params(obj, cfg: RunConfig) -> None:
    p = obj.get("params", {})
    if not isinstance(p, dict):
        raise ConfigError("params", "expected an object")
    if "lmax" in p:
        cfg.lmax = _int(p["lmax"], "params.lmax")
    if "depth" in p:
        cfg.depth = _int(p["depth"], "params.depth")
    if "seed" in p:
        cfg.seed = _int(p["seed"], "params.seed")
    for k, v in p.get("tolerances", {}).items():
        if k not in DEFAULT_TOLERANCES:
            raise ConfigError(f"params.tolerances.{k}", f"unknown tolerance (known: {', '.join(DEFAULT_TOLERANCES)})")
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ConfigError(f"params.tolerances.{k}", f"expected a number, got {v!r}")
        cfg.tolerances[k] = float(v)
    if "basepoints" in p:
        d = cfg.system.d if cfg.system is not None else None
        pts = []
        for k, x in enumerate(p["basepoints"]):
            try:
                pt = tuple(as_fraction(c) for c in (x if isinstance(x, list) else [x]))
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"params.basepoints[{k}]", str(exc)) from None
            if d is not None and len(pt) != d:
                raise ConfigError(f"params.basepoints[{k}]", f"has dimension {len(pt)}, expected {d}")
            pts.append(pt)
        cfg.basepoints = pts
    if "line" in p:
        cfg.line = p["line"]
    validate_params(cfg)


def validate_params(cfg: RunConfig) -> None:
    if not 0 <= cfg.lmax <= LMAX_CAP:
        raise ConfigError("params.lmax", f"must be in 0..{LMAX_CAP} (word counts grow like M^L), got {cfg.lmax}")
    if cfg.depth < 0:
        raise ConfigError("params.depth", f"must be >= 0, got {cfg.depth}")
    for k, v in cfg.tolerances.items():
        if not (v > 0 and math.isfinite(v)):
            raise ConfigError(f"params.tolerances.{k}", f"must be positive, got {v}")


def config_from_dict(obj) -> RunConfig:
    if not isinstance(obj, dict):
        raise ConfigError("", "config must be a JSON object")
    kind = obj.get("kind", "filter")
    if kind not in KINDS:
        raise ConfigError("kind", f"unknown kind {kind!r} (expected one of {', '.join(KINDS)})")
    cfg = RunConfig(kind=kind, name=str(obj.get("name", "")))
    if kind == "filter":
        cfg.system = system_from_dict(obj)
    elif kind == "walk":
        cfg.walk = walk_from_dict(obj)
    elif kind == "walsh":
        cfg.walsh = _complex_matrix(_require(obj, "A", ""), "A")
    _params(obj, cfg)
    return cfg


def parse_config(path) -> RunConfig:
    """Read and validate a JSON config file."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError("", f"cannot read {path}: {exc.strerror}") from None
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("", f"{path}: malformed JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    cfg = config_from_dict(obj)
    cfg.source = str(path)
    return cfg


def dump_config(cfg: RunConfig) -> str:
    return json.dumps(cfg.to_dict(), indent=2)


# ---------------------------------------------------------------------------
# shipped fixtures


def fixture_names() -> list[str]:
    root = resources.files("cuntzframe") / "fixtures"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def fixture_path(name: str) -> Path:
    p = resources.files("cuntzframe") / "fixtures" / f"{name}.json"
    if not p.is_file():
        raise KeyError(f"no fixture named {name!r} (have: {', '.join(fixture_names())})")
    return Path(str(p))


def load_fixture(name: str) -> RunConfig:
    return parse_config(fixture_path(name))
