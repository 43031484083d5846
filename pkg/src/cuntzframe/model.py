"""Affine IFS data, filter systems and the spectral transition maps.

Spectral points are tuples of :class:`fractions.Fraction`; every map
``g_i(t) = (R^T)^{-1}(t - l_i)`` is evaluated exactly.  Weights ``nu_i(t)``
are complex floats, computed from phases that are first reduced mod 1 in
exact arithmetic, so sums of roots of unity that vanish in the examples
come out as exact zeros.
"""

from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, reduce
from typing import NamedTuple, Sequence

import numpy as np

# tolerances
TAU_ZERO = 1e-9  # |nu| below this: transition not possible
TAU_NUM = 1e-10  # row normalization of walks
TAU_MAT = 1e-10  # isometry / unitarity of the filter matrix
TAU_RANK = 1e-8  # singular values counted as zero
DEFAULT_DEPTH = 40

Point = tuple  # tuple of Fraction


# ---------------------------------------------------------------------------
# exact rational helpers


def as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, np.integer)):
        return Fraction(int(x))
    if isinstance(x, str):
        return Fraction(x.strip())
    if isinstance(x, (float, np.floating)):
        if not math.isfinite(x):
            raise ValueError(f"non-finite coordinate {x!r}")
        return Fraction(float(x))
    raise TypeError(f"cannot read {x!r} as a rational number")


def as_point(x, d: int | None = None) -> Point:
    """Coerce a scalar or a sequence into an exact rational point."""
    if isinstance(x, (list, tuple, np.ndarray)):
        p = tuple(as_fraction(c) for c in x)
    else:
        p = (as_fraction(x),)
    if d is not None and len(p) != d:
        raise ValueError(f"point {fmt_point(p)} has dimension {len(p)}, expected {d}")
    return p


def fmt_point(p: Sequence[Fraction]) -> str:
    if len(p) == 1:
        return str(p[0])
    return "(" + ", ".join(str(c) for c in p) + ")"


def is_integral(p: Sequence[Fraction]) -> bool:
    return all(c.denominator == 1 for c in p)


def _matvec(A, v):
    return tuple(sum((a * x for a, x in zip(row, v)), Fraction(0)) for row in A)


def _matmul(A, B):
    cols = list(zip(*B))
    return tuple(tuple(sum((a * b for a, b in zip(row, col)), Fraction(0)) for col in cols) for row in A)


def _transpose(A):
    return tuple(zip(*A))


def _identity(d):
    return tuple(tuple(Fraction(int(i == j)) for j in range(d)) for i in range(d))


def frac_inverse(A) -> tuple:
    """Exact inverse of a square rational matrix (Gauss-Jordan)."""
    n = len(A)
    M = [[as_fraction(x) for x in row] + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(A)]
    for col in range(n):
        piv = next((r for r in range(col, n) if M[r][col] != 0), None)
        if piv is None:
            raise ZeroDivisionError("matrix is singular")
        M[col], M[piv] = M[piv], M[col]
        p = M[col][col]
        M[col] = [x / p for x in M[col]]
        for r in range(n):
            if r != col and M[r][col] != 0:
                f = M[r][col]
                M[r] = [x - f * y for x, y in zip(M[r], M[col])]
    return tuple(tuple(row[n:]) for row in M)


def _dot(u, v) -> Fraction:
    return sum((a * b for a, b in zip(u, v)), Fraction(0))


_EXACT_PHASES = {Fraction(0): 1 + 0j, Fraction(1, 2): -1 + 0j, Fraction(1, 4): 1j, Fraction(3, 4): -1j}


def phase(x: Fraction) -> complex:
    """``exp(2 pi i x)`` with x reduced mod 1 exactly; quarter turns are exact."""
    r = x - math.floor(x)
    hit = _EXACT_PHASES.get(r)
    if hit is not None:
        return hit
    return cmath.exp(2j * math.pi * float(r))


# ---------------------------------------------------------------------------
# data


def _int_matrix(R) -> tuple:
    arr = np.atleast_2d(np.asarray(R))
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ValueError(f"R must be a square matrix, got shape {arr.shape}")
    out = []
    for row in arr.tolist():
        r = []
        for x in row:
            if int(x) != x:
                raise ValueError(f"R must have integer entries, got {x!r}")
            r.append(int(x))
        out.append(tuple(r))
    return tuple(out)


def _int_rows(rows, d: int, what: str) -> tuple:
    out = []
    for k, row in enumerate(rows):
        vec = row if isinstance(row, (list, tuple, np.ndarray)) else [row]
        vec = list(np.asarray(vec).ravel().tolist())
        if len(vec) != d:
            raise ValueError(f"{what}[{k}] has length {len(vec)}, expected {d}")
        if any(int(x) != x for x in vec):
            raise ValueError(f"{what}[{k}] must be an integer vector, got {vec}")
        out.append(tuple(int(x) for x in vec))
    return tuple(out)


def is_expansive(R) -> bool:
    ev = np.linalg.eigvals(np.asarray(R, dtype=float))
    return bool(np.all(np.abs(ev) > 1 + 1e-12))


@dataclass(frozen=True)
class IFSSpec:
    """Expansive integer matrix ``R`` and digit set ``B`` (with ``0 in B``)."""

    R: tuple
    B: tuple

    def __init__(self, R, B):
        Rm = _int_matrix(R)
        d = len(Rm)
        Bm = _int_rows(B, d, "B")
        if len(Bm) < 1:
            raise ValueError("digit set B is empty")
        if len(set(Bm)) != len(Bm):
            raise ValueError("digits in B must be pairwise distinct")
        if (0,) * d not in Bm:
            raise ValueError("0 must be one of the digits")
        if not is_expansive(Rm):
            raise ValueError(f"R = {[list(r) for r in Rm]} is not expansive (some eigenvalue has modulus <= 1)")
        object.__setattr__(self, "R", Rm)
        object.__setattr__(self, "B", Bm)

    @property
    def d(self) -> int:
        return len(self.R)

    @property
    def N(self) -> int:
        return len(self.B)

    @cached_property
    def R_inv(self) -> tuple:
        return frac_inverse(self.R)

    @cached_property
    def RT_inv(self) -> tuple:
        """Exact ``(R^T)^{-1}``; the contraction driving the spectral maps."""
        return _transpose(self.R_inv)

    def RT_power(self, n: int, v: Sequence[Fraction]) -> Point:
        """``(R^T)^n v`` exactly (n >= 0)."""
        RT = _transpose(tuple(tuple(Fraction(x) for x in row) for row in self.R))
        out = tuple(as_fraction(x) for x in v)
        for _ in range(n):
            out = _matvec(RT, out)
        return out


@dataclass(frozen=True, eq=False)
class FilterSystem:
    """IFS plus frequencies ``l_i`` and coefficients ``a[i, b]`` (M x N)."""

    ifs: IFSSpec
    l: tuple
    a: np.ndarray
    name: str = field(default="")

    def __post_init__(self):
        l = _int_rows(self.l, self.ifs.d, "l")
        a = np.array(self.a, dtype=complex)
        if a.ndim == 1:
            a = a.reshape(-1, 1)
        if a.shape != (len(l), self.ifs.N):
            raise ValueError(f"coefficient matrix a has shape {a.shape}, expected (M, N) = ({len(l)}, {self.ifs.N})")
        if not np.all(np.isfinite(a)):
            raise ValueError("coefficient matrix a has non-finite entries")
        if len(l) == 0 or any(l[0]):
            raise ValueError("l_0 must be the zero vector")
        a.setflags(write=False)
        object.__setattr__(self, "l", l)
        object.__setattr__(self, "a", a)

    @classmethod
    def from_alpha(cls, R, B, l, alpha, name: str = "") -> "FilterSystem":
        """b-independent coefficients ``a[i, b] = alpha[i]``."""
        ifs = IFSSpec(R, B)
        alpha = np.asarray(alpha, dtype=complex).ravel()
        return cls(ifs, l, np.repeat(alpha[:, None], ifs.N, axis=1), name=name)

    @property
    def M(self) -> int:
        return len(self.l)

    @property
    def N(self) -> int:
        return self.ifs.N

    @property
    def d(self) -> int:
        return self.ifs.d

    @property
    def is_alpha_form(self) -> bool:
        return bool(np.all(self.a == self.a[:, :1]))

    @property
    def alpha(self) -> np.ndarray:
        if not self.is_alpha_form:
            raise ValueError("coefficients depend on the digit b; no alpha vector")
        return self.a[:, 0].copy()

    def __eq__(self, other):
        if not isinstance(other, FilterSystem):
            return NotImplemented
        return (
            self.ifs == other.ifs
            and self.l == other.l
            and self.a.shape == other.a.shape
            and bool(np.array_equal(self.a, other.a))
        )

    def __hash__(self):
        return hash((self.ifs, self.l, self.a.tobytes()))


def _ifs(system) -> IFSSpec:
    return system.ifs if isinstance(system, FilterSystem) else system


# ---------------------------------------------------------------------------
# operations


class MatrixClass(str, enum.Enum):
    UNITARY = "Unitary"
    ISOMETRY = "Isometry"
    INVALID = "Invalid"


class FilterCheck(NamedTuple):
    kind: MatrixClass
    max_defect: float
    column_defect: float
    row_defect: float | None


def filter_matrix(fs: FilterSystem) -> np.ndarray:
    """``(1/sqrt N) (exp(2 pi i R^{-1} b . l_i) a[i, b])``, shape (M, N)."""
    ifs = fs.ifs
    U = np.empty((fs.M, fs.N), dtype=complex)
    for j, b in enumerate(ifs.B):
        Rb = _matvec(ifs.R_inv, b)
        for i, li in enumerate(fs.l):
            U[i, j] = phase(_dot(Rb, li)) * fs.a[i, j]
    return U / math.sqrt(fs.N)


def check_filter_matrix(fs: FilterSystem, tol: float = TAU_MAT) -> FilterCheck:
    """Classify the filter matrix as unitary, isometry or invalid.

    The reported defect for an invalid matrix is the largest entry of
    ``|U^* U - I_N|``, i.e. the worst deviation of the column conditions.
    """
    if fs.a.shape != (fs.M, fs.N):
        raise ValueError(f"coefficient matrix has shape {fs.a.shape}, expected {(fs.M, fs.N)}")
    U = filter_matrix(fs)
    col = float(np.max(np.abs(U.conj().T @ U - np.eye(fs.N))))
    row = float(np.max(np.abs(U @ U.conj().T - np.eye(fs.M)))) if fs.M == fs.N else None
    if col <= tol and row is not None and row <= tol:
        return FilterCheck(MatrixClass.UNITARY, max(col, row), col, row)
    if col <= tol:
        return FilterCheck(MatrixClass.ISOMETRY, col, col, row)
    return FilterCheck(MatrixClass.INVALID, col, col, row)


def eval_mB(B, t) -> complex:
    """``m_B(t) = (1/N) sum_b exp(2 pi i b.t)``."""
    if isinstance(B, (IFSSpec, FilterSystem)):
        B = _ifs(B).B
    d = len(B[0])
    t = as_point(t, d)
    return sum((phase(_dot(b, t)) for b in B), 0j) / len(B)


def digits_integral(B, t) -> bool:
    """Exact test ``b.t in Z`` for every digit, i.e. ``|m_B(t)| = 1``."""
    if isinstance(B, (IFSSpec, FilterSystem)):
        B = _ifs(B).B
    t = as_point(t, len(B[0]))
    return all(_dot(b, t).denominator == 1 for b in B)


class Transition(NamedTuple):
    letter: int
    target: Point
    weight: complex


def g_map(fs: FilterSystem, i: int, t) -> Point:
    t = as_point(t, fs.d)
    return _matvec(fs.ifs.RT_inv, tuple(x - y for x, y in zip(t, fs.l[i])))


def spectral_transition(fs: FilterSystem, t) -> list[Transition]:
    """All M transitions ``t -> g_i(t)`` with weights ``nu_i(t)``.

    ``nu_i(t) = (1/N) sum_b exp(2 pi i g_i(t).b) conj(a[i, b])``.
    """
    t = as_point(t, fs.d)
    out = []
    for i in range(fs.M):
        try:
            g = g_map(fs, i, t)
        except ZeroDivisionError as exc:  # pragma: no cover - IFSSpec rejects these
            raise ValueError("R is singular") from exc
        nu = 0j
        for j, b in enumerate(fs.ifs.B):
            nu += phase(_dot(g, b)) * fs.a[i, j].conjugate()
        out.append(Transition(i, g, nu / fs.N))
    return out


def mu_hat(system, xi, depth: int = DEFAULT_DEPTH) -> complex:
    """Truncated product ``prod_{k=1..depth} m_B((R^T)^{-k} xi)``.

    This is the Fourier transform of the invariant measure, with every
    argument computed exactly.  ``depth = 0`` gives 1 by convention.
    """
    ifs = _ifs(system)
    if depth < 0:
        raise ValueError("depth must be >= 0")
    y = as_point(xi, ifs.d)
    if not any(y):
        return 1 + 0j
    out = 1 + 0j
    for _ in range(depth):
        y = _matvec(ifs.RT_inv, y)
        out *= eval_mB(ifs.B, y)
        if out == 0:
            break
    return out


def mu_hat_tail(system, xi, depth: int = DEFAULT_DEPTH) -> float:
    """Convergence diagnostic ``|1 - m_B((R^T)^{-depth} xi)|``."""
    ifs = _ifs(system)
    y = as_point(xi, ifs.d)
    for _ in range(depth):
        y = _matvec(ifs.RT_inv, y)
    return abs(1 - eval_mB(ifs.B, y))


_I64 = 2**62


def _lcm(xs) -> int:
    return reduce(lambda a, b: a * b // math.gcd(a, b), xs, 1)


def _phases(w: Sequence[Fraction], nums: np.ndarray, q: int, maxabs: list[int]) -> np.ndarray:
    """Fractional part of ``w . num / q`` for every row of ``nums``."""
    Lw = _lcm([c.denominator for c in w])
    c = [int(x * Lw) for x in w]
    D = Lw * q
    bound = sum(abs(cj) * m for cj, m in zip(c, maxabs))
    if nums.dtype != object and bound < _I64 and D < _I64:
        s = nums @ np.array(c, dtype=np.int64)
        return np.mod(s, D) / D
    mag = sum(abs(float(wj)) * m for wj, m in zip(w, maxabs)) / q
    if mag < 1e3:
        return (nums.astype(float) @ np.array([float(x) for x in w])) / q
    return np.array([(sum(cj * int(nj) for cj, nj in zip(c, row)) % D) / D for row in nums], dtype=float)


_CHUNK = 1 << 14
_SMALL = 1e-2  # below this (radians) cos/sin come from a short Taylor series
_TAIL = 1e-3  # below this the rest of the product is summed in closed form


def _cis(ang: np.ndarray) -> np.ndarray:
    """``exp(i ang)`` elementwise."""
    if ang.size and np.max(np.abs(ang)) <= _SMALL:
        a2 = ang * ang
        c = 1 - a2 / 2 * (1 - a2 / 12 * (1 - a2 / 30 * (1 - a2 / 56)))
        s = ang * (1 - a2 / 6 * (1 - a2 / 20 * (1 - a2 / 42 * (1 - a2 / 72))))
        return c + 1j * s
    return np.cos(ang) + 1j * np.sin(ang)


class _DigitSum:
    """``sum_{b != 0} exp(2 pi i (R^{-k} b).x)`` at one step k.

    When there are more nonzero digits than dimensions, the d basis phases
    are exponentiated once and each digit is a product of integer powers.
    """

    def __init__(self, W, digits):
        self.digits = digits
        self.by_basis = len(digits) > len(W) and max(abs(v) for b in digits for v in b) <= 8
        if self.by_basis:
            # column j of x @ R^{-k} is (R^{-k} e_j).x
            self.mat = 2 * np.pi * np.array([[float(v) for v in row] for row in W])
        else:
            self.mat = 2 * np.pi * np.array([[float(v) for v in _matvec(W, b)] for b in digits]).T

    def __call__(self, x: np.ndarray) -> np.ndarray:
        if not self.by_basis:
            return _cis(x @ self.mat).sum(axis=1)
        E = _cis(x @ self.mat)  # column j: exp(2 pi i (R^{-k} e_j).x)
        powers = {}
        total = np.zeros(x.shape[0], dtype=complex)
        for b in self.digits:
            term = np.ones(x.shape[0], dtype=complex)
            for j, e in enumerate(b):
                if e == 0:
                    continue
                key = (j, abs(e))
                if key not in powers:
                    powers[key] = E[:, j] ** abs(e)
                term = term * (powers[key] if e > 0 else powers[key].conj())
            total += term
        return total


def _tail_tables(ifs: IFSSpec, depth: int):
    """Per start step j: a bound on the digit phases and the first four
    cumulants of ``sum_{k >= j} log m_B((R^T)^{-k} x)`` as forms in x.

    ``log m_B`` at phases below 1e-3 is its cumulant series truncated after
    the fourth term with an error under 1e-17, so the remaining factors
    multiply to ``exp(sum_m (i^m / m!) kappa_m[x, ..., x])``.
    """
    Rinv = np.array([[float(v) for v in row] for row in ifs.R_inv])
    Bf = np.array(ifs.B, dtype=float)
    d = ifs.d
    Wk = np.eye(d)
    tabs = [np.zeros((depth + 1,) + (d,) * m) for m in range(1, 5)]
    bound = np.zeros(depth + 1)
    us = []
    for _ in range(depth):
        Wk = Wk @ Rinv
        us.append(2 * np.pi * (Bf @ Wk.T))  # rows: 2 pi R^{-k} b
    for j in range(depth - 1, -1, -1):
        u = us[j]
        m = u.mean(axis=0)
        v = u - m
        C = np.einsum("ni,nj->ij", v, v) / len(u)
        k3 = np.einsum("ni,nj,nk->ijk", v, v, v) / len(u)
        k4 = np.einsum("ni,nj,nk,nl->ijkl", v, v, v, v) / len(u) - (
            np.einsum("ij,kl->ijkl", C, C) + np.einsum("ik,jl->ijkl", C, C) + np.einsum("il,jk->ijkl", C, C)
        )
        for tab, kap in zip(tabs, (m, C, k3, k4)):
            tab[j] = tab[j + 1] + kap
        bound[j] = max(bound[j + 1], float(np.max(np.abs(u).sum(axis=1))))
    return tabs, bound


def _tail_factor(tabs, j: int, x: np.ndarray) -> np.ndarray:
    k1, k2, k3, k4 = (t[j] for t in tabs)
    lin = x @ k1
    quad = np.einsum("ni,ij,nj->n", x, k2, x)
    cube = np.einsum("ni,nj,nk,ijk->n", x, x, x, k3)
    quart = np.einsum("ni,nj,nk,nl,ijkl->n", x, x, x, x, k4)
    return np.exp(1j * lin - quad / 2 - 1j * cube / 6 + quart / 24)


def _mu_hat_nums(ifs: IFSSpec, nums: np.ndarray, q: int, depth: int) -> np.ndarray:
    """``mu_hat(num / q)`` for the integer rows of ``nums`` (int64 or object array).

    While the phases ``b.(R^T)^{-k} xi`` can be large they are reduced mod 1
    exactly; once they are below 1e3 in size a float product loses at most
    ~1e-13 and all digits are handled in one matrix product.
    """
    n = nums.shape[0]
    if n == 0 or depth == 0:
        return np.ones(n, dtype=complex)
    maxabs = [int(np.max(np.abs(nums[:, j]))) for j in range(ifs.d)]
    if nums.dtype == object and max(maxabs) < _I64:
        nums = nums.astype(np.int64)
    return _product(ifs, nums.astype(float) / q, depth, (nums, q, maxabs))


def _mu_hat_float(ifs: IFSSpec, x: np.ndarray, depth: int) -> np.ndarray:
    """``mu_hat`` at float points of moderate size (|b.x| well below 1e3)."""
    return _product(ifs, x, depth, None)


def _product(ifs: IFSSpec, x: np.ndarray, depth: int, exact) -> np.ndarray:
    """Chunked evaluation of the truncated product at the rows of ``x``.

    ``exact = (nums, q, maxabs)`` gives the integer form ``x = nums / q`` used
    for the steps whose phases are too large for floats.  Each chunk stops
    multiplying factors once its phases are below 1e-3 and finishes with the
    closed-form tail.
    """
    n = x.shape[0]
    out = np.ones(n, dtype=complex)
    if n == 0 or depth == 0:
        return out
    digits = [b for b in ifs.B if any(b)]  # the zero digit contributes exactly 1
    tabs, bound = _tail_tables(ifs, depth)
    xabs = [float(np.max(np.abs(x[:, j]))) for j in range(ifs.d)]
    steps = []  # per k: ("float", matrix) or ("exact", digit vectors)
    W = _identity(ifs.d)
    for _ in range(depth):
        W = _matmul(W, ifs.R_inv)  # R^{-k}; b.(R^T)^{-k} xi = (R^{-k} b).xi
        ws = [_matvec(W, b) for b in digits]
        mag = max(sum(abs(float(v)) * m for v, m in zip(w, xabs)) for w in ws)
        if mag < 1e3 or exact is None:
            steps.append(("float", _DigitSum(W, digits)))
        else:
            steps.append(("exact", ws))
    for lo in range(0, n, _CHUNK):
        xb = x[lo : lo + _CHUNK]
        xmax = float(np.max(np.abs(xb))) if xb.size else 0.0
        res = np.ones(xb.shape[0], dtype=complex)
        scale = 1.0
        for j, (kind, data) in enumerate(steps):
            if bound[j] * xmax <= _TAIL:
                res *= _tail_factor(tabs, j, xb)
                break
            if kind == "float":
                acc = 1 + data(xb)
            else:
                nums, q, maxabs = exact
                blk = nums[lo : lo + _CHUNK]
                acc = np.ones(xb.shape[0], dtype=complex)
                for w in data:
                    ang = 2 * np.pi * _phases(w, blk, q, maxabs)
                    acc += np.cos(ang) + 1j * np.sin(ang)
            res *= acc
            scale *= ifs.N
        out[lo : lo + _CHUNK] = res / scale
    return out


def mu_hat_many(system, xis, depth: int = DEFAULT_DEPTH) -> np.ndarray:
    """Vectorised :func:`mu_hat` over many rational frequencies.

    Phases are reduced mod 1 in integer arithmetic whenever the numbers
    fit; once ``(R^T)^{-k} xi`` is small a float dot product is exact
    enough.
    """
    ifs = _ifs(system)
    pts = [as_point(x, ifs.d) for x in xis]
    if not pts or depth == 0:
        return np.ones(len(pts), dtype=complex)
    q = _lcm({c.denominator for p in pts for c in p})
    nums = np.array([[int(c * q) for c in p] for p in pts], dtype=object)
    return _mu_hat_nums(ifs, nums, q, depth)


def mu_hat_shifted(system, t, labels: np.ndarray, depth: int = DEFAULT_DEPTH) -> np.ndarray:
    """``mu_hat(t - lambda)`` for every row of an integer label array."""
    ifs = _ifs(system)
    t = as_point(t, ifs.d)
    labels = np.asarray(labels).reshape(-1, ifs.d)
    q = _lcm([c.denominator for c in t])
    tq = [int(c * q) for c in t]
    big = labels.dtype == object or (labels.size and int(np.max(np.abs(labels))) * q + max(map(abs, tq)) >= _I64)
    if big:
        nums = np.array(tq, dtype=object) - labels.astype(object) * q
    else:
        nums = np.array(tq, dtype=np.int64) - labels.astype(np.int64) * q
    return _mu_hat_nums(ifs, nums, q, depth)


def check_no_overlap(system) -> bool:
    """True iff no two distinct digits are congruent modulo ``R Z^d``."""
    ifs = _ifs(system)
    for j, b in enumerate(ifs.B):
        for bp in ifs.B[j + 1 :]:
            x = _matvec(ifs.R_inv, tuple(Fraction(u - v) for u, v in zip(b, bp)))
            if is_integral(x):
                return False
    return True
