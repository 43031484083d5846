"""Minimal invariant sets of the spectral random walk ``t -> g_i(t)``.

In dimension one every finite minimal set of an alpha-form system consists
of extreme cycle points (``b.t`` integral for every digit) inside the hull of
the fixed points of the ``g_i``.  That turns the search into a scan of a
finite lattice slice followed by a sink-SCC computation.  In higher
dimension minimal sets may be infinite, so only user-supplied candidates
are checked.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, NamedTuple, Sequence

import networkx as nx
import numpy as np

from .model import (
    TAU_ZERO,
    FilterSystem,
    Point,
    Transition,
    as_point,
    digits_integral,
    eval_mB,
    fmt_point,
    g_map,
    spectral_transition,
)
from .walkgraph import WalkGraph


class TransitionRecord(NamedTuple):
    source: Point
    letter: int
    target: Point
    weight: complex


@dataclass(frozen=True, eq=False)
class MinimalSet:
    points: tuple
    system: FilterSystem

    def __len__(self):
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    def __contains__(self, t):
        return as_point(t, self.system.d) in self.points

    def as_set(self) -> frozenset:
        return frozenset(self.points)

    def __str__(self):
        return "{" + ", ".join(fmt_point(p) for p in self.points) + "}"


class InvarianceReport(NamedTuple):
    invariant: bool
    minimal: bool
    extreme: bool
    escapes: list  # TransitionRecord leaving the set
    non_extreme: list  # points with |m_B| != 1
    orbits: dict  # point -> frozenset of reached points (within the set)

    @property
    def ok(self) -> bool:
        return self.invariant and self.minimal and self.extreme


def possible_transitions(fs: FilterSystem, t, tol: float = TAU_ZERO) -> list[Transition]:
    return [tr for tr in spectral_transition(fs, t) if abs(tr.weight) > tol]


def orbit(fs: FilterSystem, t, cap: int = 10_000) -> list[Point]:
    """Points reachable from ``t`` through possible transitions (BFS order).

    Raises ``RuntimeError`` when more than ``cap`` points are found.
    """
    t = as_point(t, fs.d)
    seen = {t: None}
    queue = deque([t])
    while queue:
        s = queue.popleft()
        for tr in possible_transitions(fs, s):
            if tr.target not in seen:
                if len(seen) >= cap:
                    raise RuntimeError(f"orbit of {fmt_point(t)} exceeds {cap} points")
                seen[tr.target] = None
                queue.append(tr.target)
    return list(seen)


def _candidate_interval(R: int, ls: Sequence[int]) -> tuple[Fraction, Fraction]:
    if R > 1:
        return Fraction(min(-x for x in ls), R - 1), Fraction(max(-x for x in ls), R - 1)
    # negative scale: |t| <= max|l| / (|R| - 1) is invariant for every g_i
    L = max(abs(x) for x in ls)
    return Fraction(-L, abs(R) - 1), Fraction(L, abs(R) - 1)


def _set_order(points: Sequence[Point]) -> tuple:
    p = min(points, key=lambda x: (abs(x[0]), x[0]))
    return (abs(p[0]), p[0])


def find_minimal_sets_1d(fs: FilterSystem) -> list[MinimalSet]:
    """Exact search for all finite minimal invariant sets of a 1-D alpha-form system.

    Letters with ``alpha_i = 0`` never give a possible transition and are
    ignored.  Candidates are the points of ``(1/g) Z`` (g the gcd of the
    nonzero digits) inside the hull of the fixed points of the active maps;
    the minimal sets are the sink strongly connected components of the
    possible-transition graph on the candidates.  Sets are returned ordered
    by the point closest to 0, each with its points in increasing order.
    """
    if fs.d != 1:
        raise ValueError("minimal-set search is only supported in dimension 1; use verify_invariant")
    alpha = fs.alpha
    active = [i for i in range(fs.M) if abs(alpha[i]) > TAU_ZERO]
    R = fs.ifs.R[0][0]
    lo, hi = _candidate_interval(R, [fs.l[i][0] for i in active])
    gd = 0
    for (b,) in fs.ifs.B:
        gd = math.gcd(gd, abs(b))
    if gd == 0:
        raise ValueError("need at least one nonzero digit")
    cands = [(Fraction(k, gd),) for k in range(math.ceil(lo * gd), math.floor(hi * gd) + 1)]
    cset = set(cands)
    G = nx.DiGraph()
    G.add_nodes_from(cands)
    leaks = set()
    for t in cands:
        for tr in possible_transitions(fs, t):
            if tr.target in cset:
                G.add_edge(t, tr.target)
            else:
                leaks.add(t)
    found = []
    for comp in nx.strongly_connected_components(G):
        if comp & leaks:
            continue
        if any(v not in comp for u in comp for v in G.successors(u)):
            continue
        if not all(digits_integral(fs.ifs.B, t) for t in comp):
            continue
        found.append(tuple(sorted(comp)))
    found.sort(key=_set_order)
    return [MinimalSet(pts, fs) for pts in found]


def verify_invariant(fs: FilterSystem, S: Sequence, tol: float = TAU_ZERO) -> InvarianceReport:
    """Check invariance, minimality and extremality of a finite candidate set."""
    pts = [as_point(t, fs.d) for t in S]
    pset = set(pts)
    escapes = []
    edges: dict = {t: [] for t in pts}
    for t in pts:
        for tr in possible_transitions(fs, t, tol):
            edges[t].append(tr.target)
            if tr.target not in pset:
                escapes.append(TransitionRecord(t, tr.letter, tr.target, tr.weight))
    orbits = {}
    for t in pts:
        seen = {t}
        stack = [t]
        while stack:
            s = stack.pop()
            for u in edges.get(s, ()):
                if u in pset and u not in seen:
                    seen.add(u)
                    stack.append(u)
        orbits[t] = frozenset(seen)
    # the orbit always contains its starting point (empty word)
    invariant = not escapes
    minimal = invariant and bool(pts) and all(orbits[t] == pset for t in pts)
    non_extreme = [t for t in pts if not digits_integral(fs.ifs.B, t) and abs(abs(eval_mB(fs.ifs.B, t)) - 1) > 1e-12]
    return InvarianceReport(invariant, minimal, not non_extreme, escapes, non_extreme, orbits)


class LineReport(NamedTuple):
    samples: int
    letters: tuple  # letters possible at some sample
    letters_per_sample: list
    stays_on_line: bool
    off_line: list  # TransitionRecord leaving the line
    maps: dict  # letter -> (slope, intercept) of the induced map on the parameter

    def map_str(self, letter: int) -> str:
        s, c = self.maps[letter]
        if c == 0:
            return f"x -> {s}*x"
        return f"x -> {s}*x {'-' if c < 0 else '+'} {abs(c)}"


def _line_param(P: Point, base: Point, direction: Point) -> Fraction | None:
    j = next(k for k, v in enumerate(direction) if v != 0)
    x = (P[j] - base[j]) / direction[j]
    if all(P[k] - base[k] == x * direction[k] for k in range(len(P))):
        return x
    return None


def sample_line_invariance(
    fs: FilterSystem,
    base,
    direction,
    lo,
    hi,
    samples: int,
    tol: float = TAU_ZERO,
) -> LineReport:
    """Sample ``base + x * direction`` for x in [lo, hi] and follow every possible transition.

    For each letter that is possible somewhere on the samples, the induced map
    on the line parameter is recovered exactly as ``x -> slope*x + intercept``.
    """
    if fs.d != 2:
        raise ValueError("line sampling is defined for d = 2")
    base = as_point(base, 2)
    direction = as_point(direction, 2)
    if not any(direction):
        raise ValueError("direction must be nonzero")
    lo, hi = as_point(lo)[0], as_point(hi)[0]
    if samples <= 0:
        return LineReport(0, (), [], True, [], {})
    xs = [lo] if samples == 1 else [lo + (hi - lo) * Fraction(k, samples - 1) for k in range(samples)]
    letters = set()
    per_sample = []
    off = []
    pairs: dict = {}
    for x in xs:
        P = tuple(b + x * v for b, v in zip(base, direction))
        here = []
        for tr in possible_transitions(fs, P, tol):
            here.append(tr.letter)
            letters.add(tr.letter)
            y = _line_param(tr.target, base, direction)
            if y is None:
                off.append(TransitionRecord(P, tr.letter, tr.target, tr.weight))
            else:
                pairs.setdefault(tr.letter, []).append((x, y))
        per_sample.append(tuple(here))
    maps = {}
    for i, xy in pairs.items():
        # g_i is affine, so the induced map is affine; fit exactly, then confirm on every sample
        P0 = tuple(b for b in base)
        P1 = tuple(b + v for b, v in zip(base, direction))
        y0 = _line_param(g_map(fs, i, P0), base, direction)
        y1 = _line_param(g_map(fs, i, P1), base, direction)
        if y0 is None or y1 is None:
            continue
        slope, icpt = y1 - y0, y0
        if all(slope * x + icpt == y for x, y in xy):
            maps[i] = (slope, icpt)
    return LineReport(len(xs), tuple(sorted(letters)), per_sample, not off, off, maps)


def ruelle_apply(fs: FilterSystem, f: Callable[[Point], complex], t) -> complex:
    """Transfer operator ``(Rf)(t) = sum_i |nu_i(t)|^2 f(g_i(t))``."""
    return sum((abs(tr.weight) ** 2 * f(tr.target) for tr in spectral_transition(fs, t)), 0j)


def ruelle_check(fs: FilterSystem, points: Sequence) -> float:
    """Largest ``|R1(t) - 1|`` over the given points."""
    worst = 0.0
    for t in points:
        worst = max(worst, abs(ruelle_apply(fs, lambda _: 1.0, t) - 1))
    return worst


def random_rational_points(rng: np.random.Generator, d: int, count: int, max_den: int = 1000, span: int = 10) -> list[Point]:
    out = []
    for _ in range(count):
        out.append(
            tuple(Fraction(int(rng.integers(-span * max_den, span * max_den + 1)), int(rng.integers(1, max_den + 1))) for _ in range(d))
        )
    return out


def walk_from_minimal_set(fs: FilterSystem, S) -> WalkGraph:
    """WalkGraph on the points of an invariant set, with the spectral weights.

    ``reversing`` is set when the system has b-independent coefficients and
    every point is an extreme cycle point (``b.t`` integral for all digits).
    """
    pts = tuple(S.points) if isinstance(S, MinimalSet) else tuple(as_point(t, fs.d) for t in S)
    rep = verify_invariant(fs, pts)
    if not rep.invariant:
        e = rep.escapes[0]
        raise ValueError(
            f"set is not invariant: {fmt_point(e.source)} -> {fmt_point(e.target)} through letter {e.letter} is possible"
        )
    index = {p: k for k, p in enumerate(pts)}
    T = np.full((fs.M, len(pts)), -1, dtype=np.int64)
    W = np.zeros((fs.M, len(pts)), dtype=complex)
    for k, t in enumerate(pts):
        for tr in spectral_transition(fs, t):
            W[tr.letter, k] = tr.weight
            T[tr.letter, k] = index.get(tr.target, -1)
            if abs(tr.weight) <= TAU_ZERO and T[tr.letter, k] == -1:
                W[tr.letter, k] = 0
    reversing = True if fs.is_alpha_form and all(digits_integral(fs.ifs.B, t) for t in pts) else None
    return WalkGraph(pts, T, W, reversing=reversing)
