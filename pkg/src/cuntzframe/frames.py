"""Frame atoms generated by words.

Three families live here:

* weighted exponentials ``alpha_w e_lambda`` on the invariant measure of an
  affine IFS (identified with their frequency ``lambda``),
* generalized Walsh functions ``V_w 1`` on [0, 1], held exactly as step
  functions on the N-adic cells of some level,
* the finitely supported vectors of the l^2(Q) model in which the iterates
  ``V_w v_0`` fail to be a frame.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce
from typing import NamedTuple, Sequence

import numpy as np

from .model import TAU_MAT, FilterSystem, Point, as_point, digits_integral, fmt_point
from .words import EMPTY, Word, all_words, check_alphabet, word_str


# ---------------------------------------------------------------------------
# Fourier side


class FourierAtom(NamedTuple):
    label: Point
    weight: complex
    word: Word
    base: Point


def _RT(fs: FilterSystem):
    return tuple(zip(*fs.ifs.R))


def fourier_atom(fs: FilterSystem, c, w: Sequence[int]) -> FourierAtom:
    """``V_w e_c = alpha_{w_1}...alpha_{w_n} e_lambda`` with
    ``lambda = l_{w_1} + R^T l_{w_2} + ... + (R^T)^{n-1} l_{w_n} + (R^T)^n c``.

    Each ``V_i e_s = alpha_i e_{l_i + R^T s}`` needs ``s.b`` integral for every
    digit; this is checked at every step.
    """
    alpha = fs.alpha
    c = as_point(c, fs.d)
    w = tuple(w)
    check_alphabet(w, fs.M)
    RT = _RT(fs)
    lam = c
    weight = 1 + 0j
    for i in reversed(w):
        if not digits_integral(fs.ifs.B, lam):
            raise ValueError(f"frequency {fmt_point(lam)} is not an extreme cycle point (b.t not integral)")
        lam = tuple(li + sum(r * x for r, x in zip(row, lam)) for li, row in zip(fs.l[i], RT))
        weight *= alpha[i]
    return FourierAtom(lam, complex(weight), w, c)


def fourier_atoms(fs: FilterSystem, c, words: Sequence[Sequence[int]]) -> list[FourierAtom]:
    """One weighted exponential per word, based at the extreme cycle point ``c``."""
    c = as_point(c, fs.d)
    if not fs.is_alpha_form:
        raise ValueError("Fourier atoms need b-independent coefficients a[i, b] = alpha_i")
    if not digits_integral(fs.ifs.B, c):
        raise ValueError(f"basepoint {fmt_point(c)} violates b.c integral for all digits")
    return [fourier_atom(fs, c, w) for w in words]


# ---------------------------------------------------------------------------
# Walsh side


class WalshNormalizationError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class StepFunction:
    """Function on [0, 1) constant on the cells ``[j/N^level, (j+1)/N^level)``."""

    N: int
    level: int
    values: np.ndarray
    word: Word | None = field(default=None)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex).ravel()
        if self.N < 2 or self.level < 0:
            raise ValueError("need N >= 2 and level >= 0")
        if v.size != self.N**self.level:
            raise ValueError(f"expected {self.N ** self.level} values at level {self.level}, got {v.size}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def constant(cls, N: int, value: complex = 1.0) -> "StepFunction":
        return cls(N, 0, np.array([value], dtype=complex))

    def lift(self, level: int) -> "StepFunction":
        if level < self.level:
            raise ValueError("cannot lift to a coarser level")
        return StepFunction(self.N, level, np.repeat(self.values, self.N ** (level - self.level)), self.word)

    def inner(self, other: "StepFunction") -> complex:
        """``<f, g> = int f conj(g) dx`` (Lebesgue measure)."""
        if other.N != self.N:
            raise ValueError("step functions use different bases")
        n = max(self.level, other.level)
        a, b = self.lift(n).values, other.lift(n).values
        return complex(np.vdot(b, a)) / self.N**n

    def norm_sq(self) -> float:
        return float(np.sum(np.abs(self.values) ** 2)) / self.N**self.level

    def __add__(self, other):
        n = max(self.level, other.level)
        return StepFunction(self.N, n, self.lift(n).values + other.lift(n).values)

    def __sub__(self, other):
        n = max(self.level, other.level)
        return StepFunction(self.N, n, self.lift(n).values - other.lift(n).values)


def walsh_matrix(A) -> np.ndarray:
    A = np.atleast_2d(np.asarray(A, dtype=complex))
    if A.ndim != 2:
        raise ValueError("A must be a matrix")
    return A


def check_walsh_matrix(A, tol: float = TAU_MAT) -> np.ndarray:
    """Validate ``(1/N) A^* A = I_N`` and a first row of ones; returns A as an array."""
    A = walsh_matrix(A)
    M, N = A.shape
    if N < 2:
        raise WalshNormalizationError("need at least two columns")
    defect = float(np.max(np.abs(A.conj().T @ A / N - np.eye(N))))
    if defect > tol:
        raise WalshNormalizationError(f"(1/N) A^* A deviates from I_N by {defect:.3e}")
    if np.max(np.abs(A[0] - 1)) > tol:
        raise WalshNormalizationError("the first row of A must be all ones")
    return A


def apply_walsh_V(A, k: int, f: StepFunction) -> StepFunction:
    """``(V_k f)(x) = m_k(x) f(N x mod 1)``; raises the level by one."""
    A = walsh_matrix(A)
    if A.shape[1] != f.N:
        raise ValueError("matrix width and step-function base differ")
    return StepFunction(f.N, f.level + 1, np.kron(A[k], f.values))


def apply_walsh_Vstar(A, k: int, f: StepFunction) -> StepFunction:
    """``(V_k^* f)(x) = (1/N) sum_j conj(a_kj) f((x + j)/N)``; lowers the level by one."""
    A = walsh_matrix(A)
    N = f.N
    if A.shape[1] != N:
        raise ValueError("matrix width and step-function base differ")
    if f.level < 1:
        raise ValueError("V^* needs a step function of level >= 1")
    F = f.values.reshape(N, N ** (f.level - 1))
    return StepFunction(N, f.level - 1, A[k].conj() @ F / N)


def walsh_atom(A, w: Sequence[int]) -> StepFunction:
    """``V_w 1``: the value on cell j is the product of ``A[w_k, d_k]`` over the base-N digits of j."""
    A = walsh_matrix(A)
    w = tuple(w)
    check_alphabet(w, A.shape[0])
    vals = reduce(np.kron, (A[i] for i in w), np.ones(1, dtype=complex))
    return StepFunction(A.shape[1], len(w), vals, w)


def walsh_words(M: int, Lmax: int) -> list[Word]:
    """Words of length <= Lmax not ending in the letter 0."""
    return [w for w in all_words(M, Lmax) if not w or w[-1] != 0]


def walsh_atoms(A, Lmax: int) -> list[StepFunction]:
    """``V_w 1`` for every word ``w`` not ending in 0 with ``|w| <= Lmax`` (length-lex)."""
    A = check_walsh_matrix(A)
    return [walsh_atom(A, w) for w in walsh_words(A.shape[0], Lmax)]


# ---------------------------------------------------------------------------
# l^2(Q) model


class SparseRationalVector:
    """Finitely supported vector in l^2(Q), indexed by exact rationals."""

    __slots__ = ("entries",)

    def __init__(self, entries=None):
        self.entries: dict[Fraction, complex] = {}
        for r, z in (entries or {}).items():
            if z != 0:
                self.entries[Fraction(r)] = complex(z)

    @classmethod
    def basis(cls, r) -> "SparseRationalVector":
        return cls({Fraction(r): 1.0})

    def __getitem__(self, r) -> complex:
        return self.entries.get(Fraction(r), 0j)

    def inner(self, other: "SparseRationalVector") -> complex:
        """``<self, other> = sum self(q) conj(other(q))``."""
        small, big = (self, other) if len(self.entries) <= len(other.entries) else (other, self)
        s = 0j
        for r in sorted(small.entries):
            if r in big.entries:
                s += self.entries[r] * other.entries[r].conjugate()
        return s

    def norm_sq(self) -> float:
        return sum(abs(z) ** 2 for z in self.entries.values())

    def support(self) -> list[Fraction]:
        return sorted(self.entries)

    def __repr__(self):
        body = ", ".join(f"{r}: {z:.6g}" for r, z in sorted(self.entries.items()))
        return f"SparseRationalVector({{{body}}})"


_INV_SQRT2 = 1 / math.sqrt(2)


def l2q_lambda(i: int, r) -> float:
    """Coefficients of the model: lambda^0_0 = 1, lambda^1_0 = 0, else 1/sqrt 2."""
    if Fraction(r) == 0:
        return 1.0 if i == 0 else 0.0
    return _INV_SQRT2


def l2q_Vstar(i: int, v: SparseRationalVector) -> SparseRationalVector:
    """``V_i^* e_r = lambda^i_r e_{f_i(r)}`` with f_0(r) = r/2, f_1(r) = (r-1)/2."""
    out: dict = {}
    for r, z in v.entries.items():
        s = (r - i) / 2
        out[s] = out.get(s, 0j) + l2q_lambda(i, r) * z
    return SparseRationalVector(out)


def l2q_V(i: int, v: SparseRationalVector) -> SparseRationalVector:
    """``V_i e_r = conj(lambda^i_{h_i(r)}) e_{h_i(r)}`` with h_i(r) = 2r + i."""
    out: dict = {}
    for r, z in v.entries.items():
        s = 2 * r + i
        out[s] = out.get(s, 0j) + l2q_lambda(i, s) * z
    return SparseRationalVector(out)


def l2q_frame_vector(w: Sequence[int]) -> SparseRationalVector:
    """``V_w v_0`` with ``v_0 = e_0`` (the rightmost letter acts first)."""
    w = tuple(w)
    check_alphabet(w, 2)
    v = SparseRationalVector.basis(0)
    for i in reversed(w):
        v = l2q_V(i, v)
    return v


def l2q_inner(r, w: Sequence[int]) -> complex:
    """``<e_r, V_w v_0>``."""
    return SparseRationalVector.basis(r).inner(l2q_frame_vector(w))


def l2q_pairing(m: int, w: Sequence[int]) -> complex:
    """``<e_{2^m}, V_w v_0>``.

    Writing ``w = i_1 ... i_n 1`` (so ``V_w v_0 = V_{i_1}...V_{i_n}(V_1 v_0)``),
    this is ``(1/sqrt 2)^{m+1}`` when ``w = 0^m 1`` and 0 otherwise.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    return l2q_inner(2**m, w)


def l2q_words(Lmax: int) -> list[Word]:
    """The index set: words over {0, 1} not ending in 0 (``V_0^* v_0 = v_0``)."""
    return walsh_words(2, Lmax)


__all__ = [
    "EMPTY",
    "FourierAtom",
    "SparseRationalVector",
    "StepFunction",
    "WalshNormalizationError",
    "apply_walsh_V",
    "apply_walsh_Vstar",
    "check_walsh_matrix",
    "fourier_atom",
    "fourier_atoms",
    "l2q_V",
    "l2q_Vstar",
    "l2q_frame_vector",
    "l2q_inner",
    "l2q_lambda",
    "l2q_pairing",
    "l2q_words",
    "walsh_atom",
    "walsh_atoms",
    "walsh_words",
    "word_str",
]
