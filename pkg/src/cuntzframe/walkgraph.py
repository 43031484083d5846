"""Finite random walks ``(M, {g_i}, {nu_i})`` and their word combinatorics.

A :class:`WalkGraph` stores, for every letter ``i`` and vertex ``c``, the
target ``g_i(c)`` and the complex weight ``nu_i(c)``.  A transition is
possible when ``|nu_i(c)| > TAU_ZERO``; impossible transitions may have no
target at all (stored as ``-1``).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Hashable, NamedTuple, Sequence

import networkx as nx
import numpy as np

from .model import TAU_NUM, TAU_RANK, TAU_ZERO, FilterSystem, as_point, fmt_point, spectral_transition
from .words import EMPTY, Word, all_words, check_alphabet, is_irreducible, word_str


class NotNormalizedError(ValueError):
    pass


class NotInjectiveError(ValueError):
    pass


class NotPeriodicError(ValueError):
    pass


_NON_INJECTIVE_MSG = (
    "the maps g_i are not one-to-one on possible transitions, so a word can end both in one "
    "cycle word and in two (e.g. 1010 = (10)(10) also ends in the cycle word 0); "
    "the suffix decomposition into cycle words is not unique"
)


@dataclass(frozen=True, eq=False)
class WalkGraph:
    """Labelled weighted graph of a random walk.

    ``targets[i, k]`` is the index of ``g_i(vertices[k])`` (or -1) and
    ``weights[i, k]`` is ``nu_i(vertices[k])``.
    """

    vertices: tuple
    targets: np.ndarray
    weights: np.ndarray
    reversing: bool | None = None

    def __post_init__(self):
        verts = tuple(self.vertices)
        if len(set(verts)) != len(verts):
            raise ValueError("vertex labels must be distinct")
        T = np.array(self.targets, dtype=np.int64)
        W = np.array(self.weights, dtype=complex)
        n = len(verts)
        if T.ndim != 2 or T.shape != W.shape or T.shape[1] != n:
            raise ValueError(f"targets {T.shape} and weights {W.shape} must both have shape (M, {n})")
        if np.any((T < -1) | (T >= n)):
            raise ValueError("target index out of range")
        if np.any((T == -1) & (np.abs(W) > TAU_ZERO)):
            raise ValueError("a possible transition (nonzero weight) has no target")
        if not np.all(np.isfinite(W)):
            raise ValueError("weights must be finite")
        T.setflags(write=False)
        W.setflags(write=False)
        object.__setattr__(self, "vertices", verts)
        object.__setattr__(self, "targets", T)
        object.__setattr__(self, "weights", W)

    @classmethod
    def from_maps(cls, vertices: Sequence[Hashable], M: int, g, nu, reversing=None) -> "WalkGraph":
        """Build from callables/dicts ``g[(i, c)] -> c'`` and ``nu[(i, c)] -> complex``.

        Missing entries of ``g`` are allowed when the weight is zero.
        """
        vertices = tuple(vertices)
        index = {v: k for k, v in enumerate(vertices)}
        get_g = g if callable(g) else (lambda i, c: g.get((i, c)))
        get_nu = nu if callable(nu) else (lambda i, c: nu.get((i, c), 0))
        T = np.full((M, len(vertices)), -1, dtype=np.int64)
        W = np.zeros((M, len(vertices)), dtype=complex)
        for i in range(M):
            for k, c in enumerate(vertices):
                W[i, k] = get_nu(i, c)
                tgt = get_g(i, c)
                if tgt is not None and tgt in index:
                    T[i, k] = index[tgt]
        return cls(vertices, T, W, reversing)

    @property
    def M(self) -> int:
        return self.targets.shape[0]

    @property
    def n(self) -> int:
        return len(self.vertices)

    def index(self, c) -> int:
        try:
            return self.vertices.index(c)
        except ValueError:
            pass
        try:
            p = as_point(c)
        except (TypeError, ValueError):
            p = None
        if p is not None and p in self.vertices:
            return self.vertices.index(p)
        raise KeyError(f"{c!r} is not a vertex")

    def possible(self) -> np.ndarray:
        return np.abs(self.weights) > TAU_ZERO

    def row_defect(self) -> float:
        return float(np.max(np.abs(np.sum(np.abs(self.weights) ** 2, axis=0) - 1)))

    def is_normalized(self, tol: float = TAU_NUM) -> bool:
        return self.row_defect() <= tol

    def walk(self, k: int, w: Sequence[int]) -> tuple[int | None, complex]:
        """Follow ``w`` from vertex index ``k``; returns (end index, nu_w).

        The end index is None as soon as an impossible transition is taken.
        """
        weight = 1 + 0j
        cur = k
        for i in w:
            nu = self.weights[i, cur]
            if abs(nu) <= TAU_ZERO:
                return None, 0j
            weight *= nu
            cur = int(self.targets[i, cur])
        return cur, weight

    def digraph(self) -> nx.DiGraph:
        G = nx.DiGraph()
        G.add_nodes_from(range(self.n))
        poss = self.possible()
        for i in range(self.M):
            for k in range(self.n):
                if poss[i, k]:
                    G.add_edge(k, int(self.targets[i, k]))
        return G


class WalkReport(NamedTuple):
    normalized: bool
    irreducible: bool
    injective: bool
    separating: bool
    reversing: bool | None
    sigma_fixed_dim: int
    simple: bool

    def as_dict(self) -> dict:
        return dict(self._asdict())


class CycleWord(NamedTuple):
    word: Word
    weight: complex
    base: Hashable

    def __str__(self):
        return word_str(self.word)


# ---------------------------------------------------------------------------
# properties


def is_irreducible_walk(g: WalkGraph) -> bool:
    return nx.is_strongly_connected(g.digraph())


def is_injective(g: WalkGraph) -> bool:
    """Each ``g_i`` is one-to-one on the vertices where letter i is possible."""
    poss = g.possible()
    for i in range(g.M):
        tg = g.targets[i][poss[i]]
        if len(set(tg.tolist())) != len(tg):
            return False
    return True


def product_graph(g: WalkGraph) -> nx.DiGraph:
    """Ordered pairs of vertices (diagonal included), one edge per common possible letter."""
    poss = g.possible()
    P = nx.DiGraph()
    n = g.n
    P.add_nodes_from((j, k) for j in range(n) for k in range(n))
    for i in range(g.M):
        idx = np.flatnonzero(poss[i])
        for j in idx:
            for k in idx:
                P.add_edge((int(j), int(k)), (int(g.targets[i, j]), int(g.targets[i, k])))
    return P


def is_separating(g: WalkGraph) -> bool:
    """No off-diagonal pair can follow arbitrarily long common possible words.

    Equivalently, no off-diagonal node of the pair graph reaches a node that
    lies on a directed cycle.
    """
    P = product_graph(g)
    cyclic = set()
    for comp in nx.strongly_connected_components(P):
        if len(comp) > 1:
            cyclic |= comp
        else:
            (v,) = comp
            if P.has_edge(v, v):
                cyclic.add(v)
    if not cyclic:
        return True
    R = P.reverse(copy=False)
    reach = set(cyclic)
    for v in cyclic:
        reach |= nx.descendants(R, v)
    return not any(j != k for (j, k) in reach)


def sigma_matrix(g: WalkGraph) -> np.ndarray:
    """Matrix of ``T -> P(sum_i V_i T V_i^*)P`` on the n x n matrices.

    Entry ``(c, c')`` of the image is
    ``sum_i conj(nu_i(c)) nu_i(c') T[g_i(c), g_i(c')]``; T is flattened row-major.
    """
    n = g.n
    Phi = np.zeros((n * n, n * n), dtype=complex)
    poss = g.possible()
    for i in range(g.M):
        idx = np.flatnonzero(poss[i])
        if idx.size == 0:
            continue
        c, cp = np.meshgrid(idx, idx, indexing="ij")
        rows = (c * n + cp).ravel()
        gi = g.targets[i]
        cols = (gi[c] * n + gi[cp]).ravel()
        vals = (g.weights[i, c].conj() * g.weights[i, cp]).ravel()
        np.add.at(Phi, (rows, cols), vals)
    return Phi


def sigma_fixed_dim(g: WalkGraph, tol: float = TAU_RANK) -> int:
    A = sigma_matrix(g) - np.eye(g.n * g.n)
    s = np.linalg.svd(A, compute_uv=False)
    scale = max(1.0, float(s[0])) if s.size else 1.0
    return int(np.sum(s <= tol * scale))


def analyze(g: WalkGraph) -> WalkReport:
    if not g.is_normalized():
        raise NotNormalizedError(
            f"walk is not normalized: max |sum_i |nu_i(c)|^2 - 1| = {g.row_defect():.3e} > {TAU_NUM:g}"
        )
    dim = sigma_fixed_dim(g)
    return WalkReport(
        normalized=True,
        irreducible=is_irreducible_walk(g),
        injective=is_injective(g),
        separating=is_separating(g),
        reversing=g.reversing,
        sigma_fixed_dim=dim,
        simple=dim == 1,
    )


# ---------------------------------------------------------------------------
# words


def is_cycle_word(g: WalkGraph, c, beta: Sequence[int]) -> bool:
    """First return to ``c`` along ``beta`` with nonzero weight."""
    if len(beta) == 0:
        return False
    k0 = g.index(c)
    cur = k0
    for pos, i in enumerate(beta):
        if abs(g.weights[i, cur]) <= TAU_ZERO:
            return False
        cur = int(g.targets[i, cur])
        if cur == k0 and pos < len(beta) - 1:
            return False
    return cur == k0


def enumerate_cycle_words(g: WalkGraph, c, Lmax: int) -> list[CycleWord]:
    """All cycle words at ``c`` of length <= Lmax, length-lexicographic."""
    k0 = g.index(c)
    base = g.vertices[k0]
    poss = g.possible()
    out: list[CycleWord] = []
    frontier = [((), k0, 1 + 0j)]
    for _ in range(Lmax):
        nxt = []
        for w, cur, weight in frontier:
            for i in range(g.M):
                if not poss[i, cur]:
                    continue
                tgt = int(g.targets[i, cur])
                wt = weight * g.weights[i, cur]
                if tgt == k0:
                    out.append(CycleWord(w + (i,), complex(wt), base))
                else:
                    nxt.append((w + (i,), tgt, wt))
        frontier = nxt
    out.sort(key=lambda cw: (len(cw.word), cw.word))
    return out


def first_passage_mass(g: WalkGraph, t, c, Lmax: int) -> float:
    """``sum |nu_w(t)|^2`` over words ``|w| <= Lmax`` reaching ``c`` for the first time.

    Computed by propagating the taboo distribution (mass not yet at ``c``);
    distinct words are distinct paths, so their probabilities add.
    """
    kt, kc = g.index(t), g.index(c)
    prob = (g.weights.real**2 + g.weights.imag**2) * g.possible()
    p = np.zeros(g.n)
    p[kt] = 1.0
    mass = 0.0
    for _ in range(Lmax):
        q = np.zeros(g.n)
        for i in range(g.M):
            flow = p * prob[i]
            tg = g.targets[i]
            hit = tg == kc
            mass += float(flow[hit].sum())
            keep = ~hit & (flow > 0)
            np.add.at(q, tg[keep], flow[keep])
        p = q
    return mass


def _require_injective(g: WalkGraph) -> None:
    if not is_injective(g):
        raise NotInjectiveError(_NON_INJECTIVE_MSG)


def ends_in_cycle_word(g: WalkGraph, c, w: Sequence[int]) -> bool:
    """True iff some nonempty suffix of ``w`` is a cycle word for ``c``."""
    _require_injective(g)
    check_alphabet(w, g.M)
    w = tuple(w)
    return any(is_cycle_word(g, c, w[k:]) for k in range(len(w)))


def enumerate_frame_words(g: WalkGraph, c, Lmax: int, letters: Sequence[int] | None = None) -> list[Word]:
    """Words of length <= Lmax that do not end in a cycle word for ``c``.

    ``letters`` restricts the alphabet (handy for skipping letters whose atoms
    vanish); the empty word is always included.
    """
    _require_injective(g)
    cycles = {cw.word for cw in enumerate_cycle_words(g, c, Lmax)}
    lengths = sorted({len(w) for w in cycles})
    out = []
    for w in all_words(g.M, Lmax, letters):
        if not any(L <= len(w) and w[len(w) - L :] in cycles for L in lengths):
            out.append(w)
    return out


def enumerate_omega_beta(M: int, beta: Sequence[int], Lmax: int) -> list[Word]:
    """Words of length <= Lmax that do not end in the irreducible word ``beta``."""
    beta = tuple(beta)
    check_alphabet(beta, M)
    if not is_irreducible(beta):
        raise ValueError(f"word {word_str(beta)!r} is not irreducible (it is empty or a power w^k, k >= 2)")
    p = len(beta)
    return [w for w in all_words(M, Lmax) if not (len(w) >= p and w[len(w) - p :] == beta)]


def build_periodic_walk(fs: FilterSystem, v0, beta: Sequence[int], tol: float = 1e-9) -> WalkGraph:
    """Walk on the orbit of a unit periodic point under the letters of ``beta``.

    Vertex k is the point reached after the first k letters.  From vertex k
    only letter ``beta[k]`` is possible (weight 1, to vertex k+1 mod p); every
    other letter has weight 0 and points back to the vertex itself.
    """
    beta = tuple(beta)
    check_alphabet(beta, fs.M)
    if not is_irreducible(beta):
        raise ValueError(f"word {word_str(beta)!r} is not irreducible")
    v0 = as_point(v0, fs.d)
    pts = [v0]
    cur = v0
    for k, i in enumerate(beta):
        tr = spectral_transition(fs, cur)[i]
        if abs(abs(tr.weight) - 1) > tol:
            raise NotPeriodicError(
                f"not a periodic unit orbit: |nu_{i}({fmt_point(cur)})| = {abs(tr.weight):.6g} != 1"
            )
        cur = tr.target
        if k < len(beta) - 1:
            pts.append(cur)
    if cur != v0:
        raise NotPeriodicError(f"not a periodic unit orbit: the orbit ends at {fmt_point(cur)}, not {fmt_point(v0)}")
    if len(set(pts)) != len(pts):
        raise NotPeriodicError("not a periodic unit orbit: orbit points repeat")
    p = len(beta)
    T = np.tile(np.arange(p), (fs.M, 1))
    W = np.zeros((fs.M, p), dtype=complex)
    for k in range(p):
        T[beta[k], k] = (k + 1) % p
        W[beta[k], k] = 1.0
    return WalkGraph(tuple(pts), T, W, reversing=True)


# ---------------------------------------------------------------------------
# random walks for property checks


def random_walk(
    rng: np.random.Generator,
    n: int,
    M: int,
    injective: bool = False,
    p_zero: float = 0.3,
    equal_moduli: bool = False,
) -> WalkGraph:
    """Random normalized walk on ``n`` vertices with ``M`` letters.

    Each vertex gets a random nonempty support of letters and a random unit
    complex weight row on it.  With ``injective=True`` every ``g_i`` is one-to-one
    on the vertices where letter i is possible.  With ``equal_moduli=True`` the
    weights on a support all have the same modulus (random phases), so every
    possible transition has probability at least ``1/M``.
    """
    W = np.zeros((M, n), dtype=complex)
    T = np.full((M, n), -1, dtype=np.int64)
    for k in range(n):
        supp = rng.random(M) >= p_zero
        if not supp.any():
            supp[rng.integers(M)] = True
        z = (rng.normal(size=M) + 1j * rng.normal(size=M)) * supp
        # keep weights away from zero so every supported letter stays possible
        scale = np.ones(M) if equal_moduli else 0.3 + rng.random(M)
        z = np.where(supp, z / np.maximum(np.abs(z), 1e-12) * scale, 0)
        W[:, k] = z / np.linalg.norm(z)
    for i in range(M):
        idx = np.flatnonzero(np.abs(W[i]) > TAU_ZERO)
        if injective:
            T[i, idx] = rng.permutation(n)[: idx.size]
        else:
            T[i, idx] = rng.integers(0, n, size=idx.size)
    return WalkGraph(tuple(range(n)), T, W)


def describe_vertex(v) -> str:
    if isinstance(v, tuple) and v and all(hasattr(x, "denominator") for x in v):
        return fmt_point(v)
    return str(v)


__all__ = [
    "EMPTY",
    "CycleWord",
    "NotInjectiveError",
    "NotNormalizedError",
    "NotPeriodicError",
    "WalkGraph",
    "WalkReport",
    "analyze",
    "build_periodic_walk",
    "ends_in_cycle_word",
    "enumerate_cycle_words",
    "enumerate_frame_words",
    "enumerate_omega_beta",
    "first_passage_mass",
    "is_cycle_word",
    "is_injective",
    "is_separating",
    "random_walk",
    "sigma_fixed_dim",
]
