"""Numerical certification of frame and basis claims.

Inner products on the invariant measure are never integrated: for
exponentials ``<e_s, e_t> = mu_hat(s - t)`` with the truncated product, and
every report carries the truncation depth and the size of the last factor's
deviation from 1.  Walsh identities are exact finite sums.
"""

from __future__ import annotations

import math
from typing import NamedTuple, Sequence

import numpy as np

from .frames import (
    FourierAtom,
    SparseRationalVector,
    StepFunction,
    apply_walsh_Vstar,
    check_walsh_matrix,
    fourier_atom,
    fourier_atoms,
    l2q_frame_vector,
    l2q_words,
    walsh_atom,
    walsh_words,
)
from .invariants import orbit, walk_from_minimal_set
from .model import _I64, _mu_hat_float, _mu_hat_nums, DEFAULT_DEPTH, TAU_ZERO, FilterSystem, as_point, digits_integral, mu_hat_many, mu_hat_shifted, mu_hat_tail
from .walkgraph import WalkGraph, enumerate_cycle_words, enumerate_frame_words, is_cycle_word, is_injective


class GramReport(NamedTuple):
    size: int
    max_offdiag: float
    max_diag_dev: float
    depth: int | None
    tail: float  # |1 - m_B((R^T)^{-depth} xi)| at the largest difference used

    @property
    def max_dev(self) -> float:
        return max(self.max_offdiag, self.max_diag_dev)


class ParsevalProfile(NamedTuple):
    cutoffs: list
    sums: list
    target: float
    depth: int | None
    tail: float

    @property
    def monotone(self) -> bool:
        return all(b >= a for a, b in zip(self.sums, self.sums[1:]))

    def bessel(self, tol: float = 1e-8) -> bool:
        return all(s <= self.target + tol for s in self.sums)

    def check(self, tol: float = 1e-8) -> None:
        if not self.monotone:
            raise AssertionError("partial sums are not nondecreasing")
        if not self.bessel(tol):
            raise AssertionError(f"partial sum {max(self.sums):.12g} exceeds ||v||^2 = {self.target:.12g} + {tol:g}")


class IncompletenessReport(NamedTuple):
    single_cycle: bool
    multi_cycle: bool
    vertex: object  # a vertex with two possible letters, if any
    letters: tuple
    verdict: str


# ---------------------------------------------------------------------------
# Gram matrices


def _summarize(G: np.ndarray, depth, tail) -> GramReport:
    n = G.shape[0]
    if n == 0:
        return GramReport(0, 0.0, 0.0, depth, tail)
    off = G - np.diag(np.diag(G))
    return GramReport(n, float(np.max(np.abs(off))), float(np.max(np.abs(np.diag(G) - 1))), depth, tail)


def _largest(diffs):
    return max(diffs, key=lambda p: sum(abs(float(x)) for x in p))


def gram_matrix(atoms: Sequence[FourierAtom], fs: FilterSystem, depth: int = DEFAULT_DEPTH) -> np.ndarray:
    """``G[j, k] = <atom_j, atom_k> = w_j conj(w_k) mu_hat(lambda_j - lambda_k)``."""
    n = len(atoms)
    diffs = [tuple(x - y for x, y in zip(a.label, b.label)) for a in atoms for b in atoms]
    mh = mu_hat_many(fs, diffs, depth).reshape(n, n) if n else np.zeros((0, 0), complex)
    w = np.array([a.weight for a in atoms], dtype=complex)
    return w[:, None] * w.conj()[None, :] * mh


def gram(atoms: Sequence[FourierAtom], fs: FilterSystem, depth: int = DEFAULT_DEPTH) -> GramReport:
    G = gram_matrix(atoms, fs, depth)
    tail = 0.0
    if atoms:
        diffs = [tuple(x - y for x, y in zip(a.label, atoms[0].label)) for a in atoms]
        tail = mu_hat_tail(fs, _largest(diffs), depth) if depth else 0.0
    return _summarize(G, depth, tail)


def walsh_gram(functions: Sequence[StepFunction]) -> GramReport:
    """Gram matrix of step functions, summarized like :func:`gram`."""
    n = len(functions)
    if n == 0:
        return GramReport(0, 0.0, 0.0, None, 0.0)
    level = max(f.level for f in functions)
    N = functions[0].N
    X = np.array([f.lift(level).values for f in functions])
    G = X @ X.conj().T / N**level
    return _summarize(G, None, 0.0)


# ---------------------------------------------------------------------------
# Parseval profiles


def frame_atoms_at(fs: FilterSystem, c, Lmax: int) -> list[FourierAtom]:
    """Atoms ``V_w e_c`` for the words of length <= Lmax not ending in a cycle word for ``c``.

    The walk is the orbit of ``c``; letters with ``alpha_i = 0`` produce zero
    atoms and are skipped.
    """
    c = as_point(c, fs.d)
    g = walk_from_minimal_set(fs, orbit(fs, c))
    alpha = fs.alpha
    letters = [i for i in range(fs.M) if abs(alpha[i]) > TAU_ZERO]
    if not is_injective(g):
        enumerate_frame_words(g, c, 0)  # raises with the explanation
    # grow by prepending: lambda(i w) = l_i + R^T lambda(w), and i w ends in a
    # cycle word iff w does or i w is itself one
    base = fourier_atoms(fs, c, [()])[0]
    RT = tuple(zip(*fs.ifs.R))
    layer = [base]
    out = [base]
    for _ in range(Lmax):
        nxt = []
        for a in layer:
            if not digits_integral(fs.ifs.B, a.label):
                raise ValueError(f"frequency {a.label} is not an extreme cycle point (b.t not integral)")
            RTs = tuple(sum(r * x for r, x in zip(row, a.label)) for row in RT)
            for i in letters:
                w = (i,) + a.word
                if is_cycle_word(g, c, w):
                    continue
                lam = tuple(li + y for li, y in zip(fs.l[i], RTs))
                nxt.append(FourierAtom(lam, a.weight * complex(alpha[i]), w, c))
        nxt.sort(key=lambda a: a.word)
        out.extend(nxt)
        layer = nxt
    return out


def _basepoints(fs: FilterSystem, c) -> list:
    if isinstance(c, (list,)) and c and isinstance(c[0], (list, tuple)) or (isinstance(c, list) and len(c) > 1):
        return [as_point(x, fs.d) for x in c]
    if isinstance(c, list) and len(c) == 1:
        return [as_point(c[0], fs.d)]
    return [as_point(c, fs.d)]


def fourier_pairings(atoms: Sequence[FourierAtom], fs: FilterSystem, t, depth: int = DEFAULT_DEPTH) -> np.ndarray:
    """``<e_t, atom> = conj(w) mu_hat(t - lambda)`` for every atom."""
    t = as_point(t, fs.d)
    diffs = [tuple(x - y for x, y in zip(t, a.label)) for a in atoms]
    w = np.array([a.weight for a in atoms], dtype=complex)
    return w.conj() * mu_hat_many(fs, diffs, depth)


def _atom_table(fs: FilterSystem, c: tuple, Lmax: int):
    """``(labels, weights, lengths)`` of :func:`frame_atoms_at` as arrays.

    For an integral basepoint the labels stay integral and the table is built
    with integer arrays; the backward walk from ``c`` marks the words that
    are cycle words (a prepended letter closes a loop at ``c`` exactly when
    the backward walk returns there).  Otherwise ``labels`` is the atom list.
    """
    if any(x.denominator != 1 for x in c):
        atoms = frame_atoms_at(fs, c, Lmax)
        w = np.array([a.weight for a in atoms], dtype=complex)
        return atoms, w, np.array([len(a.word) for a in atoms])
    g = walk_from_minimal_set(fs, orbit(fs, c))
    if not is_injective(g):
        enumerate_frame_words(g, c, 0)  # raises with the explanation
    alpha = fs.alpha
    letters = [i for i in range(fs.M) if abs(alpha[i]) > TAU_ZERO]
    k0 = g.index(c)
    inv = np.full((g.M, g.n + 1), -1, dtype=np.int64)  # column n: dead state
    poss = g.possible()
    for i in range(g.M):
        for u in np.flatnonzero(poss[i]):
            inv[i, g.targets[i, u]] = u
    R = np.array(fs.ifs.R, dtype=object)
    L = np.array(fs.l, dtype=object)
    growth = max(sum(abs(x) for x in row) for row in fs.ifs.R)
    bound, lmax_abs = max(abs(int(x)) for x in c), max(abs(x) for row in fs.l for x in row)
    for _ in range(Lmax):
        bound = lmax_abs + growth * bound
    dtype = np.int64 if bound < 2**53 else object
    R, L = R.astype(dtype), L.astype(dtype)
    lab = np.array([[int(x) for x in c]], dtype=dtype)
    wt = np.ones(1, dtype=complex)
    st = np.array([k0])
    labels, weights, lengths = [lab], [wt], [np.zeros(1, dtype=np.int64)]
    for n in range(1, Lmax + 1):
        RTs = lab @ R
        parts = []
        for i in letters:
            ns = inv[i, st]
            ns[ns < 0] = g.n
            keep = ns != k0
            parts.append((L[i] + RTs[keep], wt[keep] * complex(alpha[i]), ns[keep]))
        lab = np.concatenate([p[0] for p in parts]) if parts else lab[:0]
        wt = np.concatenate([p[1] for p in parts]) if parts else wt[:0]
        st = np.concatenate([p[2] for p in parts]) if parts else st[:0]
        labels.append(lab)
        weights.append(wt)
        lengths.append(np.full(len(wt), n, dtype=np.int64))
    return np.concatenate(labels), np.concatenate(weights), np.concatenate(lengths)


class _WordTree(NamedTuple):
    """All words over the active letters up to length Lmax, level by level."""

    parent: list  # level n: index of the length n-1 prefix
    letter: list
    member: list  # word does not end in a cycle word for c
    weight: list  # alpha_w


def _word_tree(fs: FilterSystem, c: tuple, Lmax: int) -> _WordTree:
    g = walk_from_minimal_set(fs, orbit(fs, c))
    if not is_injective(g):
        enumerate_frame_words(g, c, 0)  # raises with the explanation
    alpha = fs.alpha
    letters = [i for i in range(fs.M) if abs(alpha[i]) > TAU_ZERO]
    k0 = g.index(c)
    poss = g.possible()
    # A(x): end vertices of the walks from c along the suffixes of x that have
    # not yet returned to c; x ends in a cycle word iff c is in A(x)
    step: dict = {}

    def advance(mask: int, i: int) -> int:
        key = (mask, i)
        if key not in step:
            new = 0
            for v in range(g.n):
                if (v == k0 or (mask >> v) & 1 and v != k0) and poss[i, v]:
                    new |= 1 << int(g.targets[i, v])
            step[key] = new
        return step[key]

    masks = np.zeros(1, dtype=object)
    tree = _WordTree([np.zeros(0, dtype=np.int64)], [np.zeros(0, dtype=np.int64)], [np.ones(1, bool)], [np.ones(1, complex)])
    for _ in range(Lmax):
        uniq, inv = np.unique(masks, return_inverse=True)
        par, let, mem, wt, nm = [], [], [], [], []
        for i in letters:
            nxt = np.array([advance(int(m), i) for m in uniq], dtype=object)[inv]
            par.append(np.arange(len(masks)))
            let.append(np.full(len(masks), i))
            mem.append(np.array([(int(m) >> k0) & 1 == 0 for m in nxt], dtype=bool))
            wt.append(tree.weight[-1] * complex(alpha[i]))
            nm.append(nxt)
        tree.parent.append(np.concatenate(par))
        tree.letter.append(np.concatenate(let))
        tree.member.append(np.concatenate(mem))
        tree.weight.append(np.concatenate(wt))
        masks = np.concatenate(nm)
    return tree


def _tree_profile(fs: FilterSystem, c: tuple, tree: _WordTree, v: tuple, depth: int) -> np.ndarray:
    """Per-length sums of ``|<e_v, V_w e_c>|^2`` over the word tree.

    With ``y_0 = v`` and ``y_k = g_{w_k}(y_{k-1})`` the product defining
    ``mu_hat(v - lambda_w)`` splits as ``prod_{k <= |w|} m_B(y_k)`` times
    ``mu_hat(y_{|w|} - c)`` at the remaining depth (every suffix label is
    digit-integral), so the leading factors are shared by common prefixes.
    Points are kept exactly as ``Y_k / (q |det R|^k)`` while that fits in
    int64, and in floats afterwards (the y_k are contracted, so this costs
    ~1e-15 in the phases).
    """
    ifs = fs.ifs
    Lmax = len(tree.parent) - 1
    det = round(np.linalg.det(np.array(ifs.R, dtype=float)))
    adj = np.array([[int(x * det) for x in row] for row in ifs.RT_inv], dtype=np.int64)  # det * (R^T)^{-1}
    RTinv = np.array([[float(x) for x in row] for row in ifs.RT_inv])
    sgn, D = (1 if det > 0 else -1), abs(det)
    q = _lcm_den(v)
    lvec = np.array(fs.l, dtype=np.int64)
    B = np.array(ifs.B, dtype=np.int64)
    lmax_abs = int(np.max(np.abs(lvec)))
    rowsum = int(np.max(np.abs(adj).sum(axis=1)))
    bmax = int(np.max(np.abs(B).sum(axis=1)))
    cvec = np.array([int(x) for x in c], dtype=np.int64)
    Y, den, y = None, q, None
    ymax = max(abs(int(x * q)) for x in v)
    if ymax * bmax < _I64:
        Y = np.array([[int(x * q) for x in v]], dtype=np.int64)
    else:
        y = np.array([[float(x) for x in v]])
    prefix = np.ones(1, dtype=complex)
    per_len = np.zeros(Lmax + 1)
    for k in range(Lmax + 1):
        if k > 0:
            par, let = tree.parent[k], tree.letter[k]
            if Y is not None:
                ymax = rowsum * (ymax + den * lmax_abs)
                if ymax * bmax >= _I64 or den * D >= _I64:
                    y, Y = Y.astype(float) / den, None
            if Y is not None:
                Y = sgn * ((Y[par] - den * lvec[let]) @ adj.T)
                den *= D
                ph = 2 * np.pi * (np.mod(Y @ B.T, den) / den)
            else:
                y = (y[par] - lvec[let]) @ RTinv.T
                ph = 2 * np.pi * (y @ B.T)
            prefix = prefix[par] * ((np.cos(ph).sum(axis=1) + 1j * np.sin(ph).sum(axis=1)) / ifs.N)
        mem = tree.member[k]
        if depth > k:
            if Y is not None:
                tail = _mu_hat_nums(ifs, Y[mem] - den * cvec, den, depth - k)
            else:
                tail = _mu_hat_float(ifs, y[mem] - cvec, depth - k)
        else:
            tail = 1.0
        pair = tree.weight[k][mem].conj() * prefix[mem] * tail
        per_len[k] = float(np.sum(np.abs(pair) ** 2))
    return per_len


def _lcm_den(v) -> int:
    q = 1
    for x in v:
        q = q * x.denominator // math.gcd(q, x.denominator)
    return q


def parseval_profiles(fs: FilterSystem, c, vs: Sequence, Lmax: int, depth: int = DEFAULT_DEPTH) -> list[ParsevalProfile]:
    """:func:`parseval_profile` for several test frequencies, sharing the atoms.

    Integral basepoints use the prefix-tree evaluation (shared leading
    factors); other basepoints fall back to one ``mu_hat`` per atom.
    """
    bases = _basepoints(fs, c)
    trees = {}
    tables = {}
    out = []
    for v in vs:
        v = as_point(v, fs.d)
        per_len = np.zeros(Lmax + 1)
        tail = 0.0
        for cp in bases:
            if all(x.denominator == 1 for x in cp) and depth >= Lmax:
                if cp not in trees:
                    trees[cp] = _word_tree(fs, cp, Lmax)
                res = _tree_profile(fs, cp, trees[cp], v, depth)
            else:
                if cp not in tables:
                    tables[cp] = _atom_table(fs, cp, Lmax)
                labels, w, lengths = tables[cp]
                if isinstance(labels, list):
                    pair = fourier_pairings(labels, fs, v, depth)
                else:
                    pair = w.conj() * mu_hat_shifted(fs, v, labels, depth)
                res = np.bincount(lengths, weights=np.abs(pair) ** 2, minlength=Lmax + 1)[: Lmax + 1]
            per_len += res
            if depth:
                tail = max(tail, _profile_tail(fs, cp, v, Lmax, depth))
        out.append(ParsevalProfile(list(range(Lmax + 1)), np.cumsum(per_len).tolist(), 1.0, depth, tail))
    return out


def _profile_tail(fs: FilterSystem, c: tuple, v: tuple, Lmax: int, depth: int) -> float:
    """Last-factor deviation at the labels of the constant words ``i^Lmax``."""
    alpha = fs.alpha
    worst = 0.0
    for i in range(fs.M):
        if abs(alpha[i]) <= TAU_ZERO:
            continue
        try:
            lam = fourier_atom(fs, c, (i,) * Lmax).label
        except ValueError:
            continue
        worst = max(worst, mu_hat_tail(fs, tuple(x - y for x, y in zip(v, lam)), depth))
    return worst


def parseval_profile(fs: FilterSystem, c, v, Lmax: int, depth: int = DEFAULT_DEPTH) -> ParsevalProfile:
    """Partial sums ``s_n = sum_{|w| <= n} |<e_v, V_w e_c>|^2`` for n = 0..Lmax.

    The sum runs over words not ending in a cycle word for ``c``.  ``c`` may
    be a single basepoint or a list of basepoints (one per minimal set); the
    atoms are then pooled.  The target is ``||e_v||^2 = 1``.
    """
    return parseval_profiles(fs, c, [v], Lmax, depth)[0]


def walsh_parseval_profile(A, f: StepFunction, Lmax: int) -> ParsevalProfile:
    A = check_walsh_matrix(A)
    sums = []
    s = 0.0
    for n in range(Lmax + 1):
        for w in walsh_words(A.shape[0], n):
            if len(w) == n:
                s += abs(f.inner(walsh_atom(A, w))) ** 2
        sums.append(s)
    return ParsevalProfile(list(range(Lmax + 1)), sums, f.norm_sq(), None, 0.0)


def walsh_atom_matrix(A, n: int) -> np.ndarray:
    """Rows are the cell values of ``V_w 1`` lifted to level n, words in length-lex order."""
    A = check_walsh_matrix(A)
    return np.array([walsh_atom(A, w).lift(n).values for w in walsh_words(A.shape[0], n)])


def walsh_parseval_defects(A, n: int, F) -> np.ndarray:
    """:func:`walsh_parseval_exact` for every row of ``F`` (cell values at level n)."""
    A = check_walsh_matrix(A)
    N = A.shape[1]
    F = np.atleast_2d(np.asarray(F, dtype=complex))
    if F.shape[1] != N**n:
        raise ValueError(f"expected {N ** n} cell values per row, got {F.shape[1]}")
    X = walsh_atom_matrix(A, n)
    pair = F @ X.conj().T / N**n
    norms = np.sum(np.abs(F) ** 2, axis=1) / N**n
    return np.abs(np.sum(np.abs(pair) ** 2, axis=1) - norms)


def walsh_parseval_exact(A, n: int, f: StepFunction) -> float:
    """``| sum_{w not ending in 0, |w| <= n} |<f, V_w 1>|^2 - ||f||^2 |`` for f of level <= n."""
    A = check_walsh_matrix(A)
    if f.N != A.shape[1]:
        raise ValueError("step-function base differs from the number of columns of A")
    if f.level > n:
        raise ValueError(f"f has level {f.level} > n = {n}")
    return float(walsh_parseval_defects(A, n, f.lift(n).values)[0])


def walsh_parseval_by_adjoints(A, f: StepFunction) -> float:
    """``sum_{|w| = level} ||V_w^* f||^2`` computed with the adjoint operators only."""
    A = check_walsh_matrix(A)
    layer = [f]
    for _ in range(f.level):
        layer = [apply_walsh_Vstar(A, k, g) for g in layer for k in range(A.shape[0])]
    return float(sum(g.norm_sq() for g in layer))


# ---------------------------------------------------------------------------
# frame bounds


def frame_bounds(atoms: Sequence, tests: Sequence, fs: FilterSystem | None = None, depth: int = DEFAULT_DEPTH) -> tuple[float, float]:
    """Empirical frame bounds ``min/max over tests of sum |<v, atom>|^2 / ||v||^2``.

    Atoms and tests may be Fourier atoms with frequency tests (``fs`` required),
    step functions, or sparse l^2(Q) vectors.
    """
    if len(tests) == 0:
        raise ValueError("empty test set")
    ratios = []
    if atoms and isinstance(atoms[0], FourierAtom):
        if fs is None:
            raise ValueError("Fourier atoms need the filter system")
        for t in tests:
            ratios.append(float(np.sum(np.abs(fourier_pairings(atoms, fs, t, depth)) ** 2)))
    else:
        for v in tests:
            nrm = v.norm_sq()
            if nrm == 0:
                raise ValueError("zero test vector")
            ratios.append(sum(abs(v.inner(a)) ** 2 for a in atoms) / nrm)
    return min(ratios), max(ratios)


def l2q_frame_bounds(ms: Sequence[int], Lmax: int) -> tuple[float, float]:
    """Bounds of ``{V_w v_0 : w not ending in 0, |w| <= Lmax}`` on the tests ``e_{2^m}``."""
    atoms = [l2q_frame_vector(w) for w in l2q_words(Lmax)]
    tests = [SparseRationalVector.basis(2**m) for m in ms]
    return frame_bounds(atoms, tests)


# ---------------------------------------------------------------------------
# incompleteness


def incompleteness_check(g: WalkGraph, c) -> IncompletenessReport:
    """Classify the walk by the two hypotheses on its weights.

    ``single_cycle``: every ``|nu_i(c)|`` is 0 or 1, so the atoms at ``c`` are
    orthonormal.  ``multi_cycle``: some vertex has two possible letters, so
    that vertex has two cycle words and the family is incomplete in the space
    it generates under the Cuntz isometries.  The second verdict is
    combinatorial; the dilation space itself is never built.
    """
    k0 = g.index(c)
    mods = np.abs(g.weights)
    poss = g.possible()
    single = bool(np.all((mods <= TAU_ZERO) | (np.abs(mods - 1) <= 1e-9)))
    vertex, letters = None, ()
    for k in range(g.n):
        lk = tuple(int(i) for i in np.flatnonzero(poss[:, k]))
        if len(lk) >= 2:
            vertex, letters = g.vertices[k], lk
            if k == k0:
                break
    multi = vertex is not None
    if single:
        verdict = "single cycle: atoms at c form an orthonormal basis of their span"
    elif multi:
        verdict = "multiple cycle words: the family is incomplete in the generated space (combinatorial criterion)"
    else:  # pragma: no cover - a normalized walk is always one of the two
        verdict = "undetermined"
    return IncompletenessReport(single, multi, vertex, letters, verdict)


def cycle_summary(g: WalkGraph, c, Lmax: int = 8) -> list[str]:
    from .words import word_str

    return [word_str(cw.word) for cw in enumerate_cycle_words(g, c, Lmax)]


__all__ = [
    "GramReport",
    "IncompletenessReport",
    "ParsevalProfile",
    "fourier_pairings",
    "frame_atoms_at",
    "frame_bounds",
    "gram",
    "gram_matrix",
    "incompleteness_check",
    "is_injective",
    "l2q_frame_bounds",
    "parseval_profile",
    "parseval_profiles",
    "walsh_atom_matrix",
    "walsh_gram",
    "walsh_parseval_by_adjoints",
    "walsh_parseval_defects",
    "walsh_parseval_exact",
    "walsh_parseval_profile",
]
