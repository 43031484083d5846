import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cuntzframe.frames import (
    SparseRationalVector,
    StepFunction,
    WalshNormalizationError,
    apply_walsh_V,
    apply_walsh_Vstar,
    check_walsh_matrix,
    fourier_atom,
    fourier_atoms,
    l2q_frame_vector,
    l2q_inner,
    l2q_pairing,
    l2q_V,
    l2q_Vstar,
    l2q_words,
    walsh_atom,
    walsh_atoms,
    walsh_words,
)
from cuntzframe.invariants import walk_from_minimal_set
from cuntzframe.serialize import load_fixture
from cuntzframe.verify import frame_atoms_at
from cuntzframe.walkgraph import enumerate_frame_words
from cuntzframe.words import all_words

words4 = st.lists(st.integers(0, 3), max_size=6).map(tuple)


def label_oracle(fs, c, w):
    RT = np.array(fs.ifs.R, dtype=object).T
    lam = np.array([Fraction(x) for x in c], dtype=object)
    P = np.identity(fs.d, dtype=object)
    out = np.zeros(fs.d, dtype=object)
    for i in w:
        out = out + P.dot(np.array(fs.l[i], dtype=object))
        P = P.dot(RT)
    return tuple(out + P.dot(lam))


def random_step(rng, N, level):
    return StepFunction(N, level, rng.normal(size=N**level) + 1j * rng.normal(size=N**level))


class TestFourierAtoms:
    @given(words4)
    def test_label_formula_2d(self, w):
        fs = load_fixture("ex421").system
        assert fourier_atom(fs, (0, 0), w).label == label_oracle(fs, (0, 0), w)

    @given(st.lists(st.integers(0, 3), max_size=8).map(tuple))
    def test_label_and_weight_1d(self, w):
        fs = load_fixture("ex411_reduced").system
        a = fourier_atom(fs, -1, w)
        assert a.label == label_oracle(fs, (-1,), w)
        assert a.weight == pytest.approx(np.prod([fs.alpha[i] for i in w]) if w else 1)

    def test_mu4_labels(self):
        fs = load_fixture("mu4").system
        labels = [int(fourier_atom(fs, 0, w).label[0]) for w in [(), (1,), (0, 1), (1, 1), (0, 0, 1)]]
        assert labels == [0, 1, 4, 5, 16]

    def test_non_extreme_basepoint_rejected(self):
        fs = load_fixture("mu4").system
        with pytest.raises(ValueError, match="integral"):
            fourier_atoms(fs, Fraction(1, 4), [(1,)])

    def test_b_dependent_rejected(self):
        with pytest.raises(ValueError, match="b-independent"):
            fourier_atoms(load_fixture("ex411").system, (0, 0), [()])

    def test_frame_atoms_match_word_enumeration(self):
        fs = load_fixture("ex411_reduced").system
        g = walk_from_minimal_set(fs, [(-4,), (-1,)])
        letters = [i for i in range(fs.M) if abs(fs.alpha[i]) > 0]
        words = enumerate_frame_words(g, -1, 5, letters)
        want = fourier_atoms(fs, -1, words)
        got = frame_atoms_at(fs, -1, 5)
        assert [a.word for a in got] == [a.word for a in want]
        assert [a.label for a in got] == [a.label for a in want]
        assert np.allclose([a.weight for a in got], [a.weight for a in want])


class TestStepFunction:
    def test_size_checked(self):
        with pytest.raises(ValueError, match="expected 4"):
            StepFunction(2, 2, np.ones(3))

    def test_lift_preserves_inner(self, rng):
        f, g = random_step(rng, 3, 2), random_step(rng, 3, 1)
        assert f.inner(g) == pytest.approx(f.lift(4).inner(g.lift(3)))
        assert f.norm_sq() == pytest.approx(f.lift(3).norm_sq())

    def test_arithmetic(self, rng):
        f, g = random_step(rng, 2, 3), random_step(rng, 2, 1)
        assert np.allclose((f + g - g).values, f.values)

    def test_lift_down_rejected(self, rng):
        with pytest.raises(ValueError):
            random_step(rng, 2, 3).lift(1)


class TestWalsh:
    def test_normalization(self):
        with pytest.raises(WalshNormalizationError, match="deviates"):
            check_walsh_matrix([[1, 1], [1, 1]])
        with pytest.raises(WalshNormalizationError, match="first row"):
            check_walsh_matrix([[1, -1], [1, 1]])

    def test_word_counts(self):
        assert len(walsh_words(2, 6)) == 64
        assert len(walsh_words(3, 2)) == 1 + 2 + 6
        assert len(walsh_atoms(load_fixture("walsh32").walsh, 2)) == 9

    def test_atom_values_digit_product(self):
        A = load_fixture("walsh32").walsh
        w = (2, 1, 0)
        f = walsh_atom(A, w)
        for j in range(8):
            digits = [(j >> (2 - k)) & 1 for k in range(3)]
            assert f.values[j] == pytest.approx(np.prod([A[w[k], digits[k]] for k in range(3)]))

    @pytest.mark.parametrize("name", ["walsh2", "walsh32"])
    def test_adjoint(self, name, rng):
        A = load_fixture(name).walsh
        for k in range(A.shape[0]):
            f, g = random_step(rng, 2, 2), random_step(rng, 2, 3)
            assert apply_walsh_V(A, k, f).inner(g) == pytest.approx(f.inner(apply_walsh_Vstar(A, k, g)))

    @pytest.mark.parametrize("name", ["walsh2", "walsh32"])
    def test_row_coisometry(self, name, rng):
        A = load_fixture(name).walsh
        f = random_step(rng, 2, 4)
        s = sum((apply_walsh_V(A, k, apply_walsh_Vstar(A, k, f)) for k in range(A.shape[0])), StepFunction(2, 4, np.zeros(16)))
        assert np.max(np.abs(s.values - f.values)) < 1e-14

    def test_unitary_gives_cuntz_isometries(self, rng):
        A = load_fixture("walsh2").walsh
        f = random_step(rng, 2, 3)
        for j in range(2):
            for k in range(2):
                out = apply_walsh_Vstar(A, j, apply_walsh_V(A, k, f)).values
                assert np.allclose(out, f.values if j == k else 0)

    def test_vstar_needs_level(self):
        with pytest.raises(ValueError, match="level"):
            apply_walsh_Vstar(load_fixture("walsh2").walsh, 0, StepFunction.constant(2))


class TestL2Q:
    @pytest.mark.parametrize("m", range(1, 11))
    def test_pairing_value(self, m):
        assert l2q_pairing(m, (0,) * m + (1,)) == pytest.approx((1 / math.sqrt(2)) ** (m + 1), abs=1e-15)

    @given(st.integers(1, 10), st.lists(st.integers(0, 1), max_size=12).map(lambda w: tuple(w) + (1,)))
    def test_pairing_zero_elsewhere(self, m, w):
        if w != (0,) * m + (1,):
            assert l2q_pairing(m, w) == 0

    def test_vstar_v_on_basis(self):
        # V_i^* V_i e_r = |lambda^i_{2r+i}|^2 e_r
        for r in (Fraction(0), Fraction(1), Fraction(-3, 2)):
            for i in (0, 1):
                out = l2q_Vstar(i, l2q_V(i, SparseRationalVector.basis(r)))
                lam = 1.0 if (i == 0 and 2 * r == 0) else (0.0 if (i == 1 and 2 * r + 1 == 0) else 0.5)
                assert out[r] == pytest.approx(lam)

    def test_v0_fixes_e0(self):
        assert l2q_frame_vector((0, 0, 0)).entries == {Fraction(0): 1.0}

    def test_support_of_iterates(self):
        assert l2q_frame_vector((1,)).support() == [Fraction(1)]
        # rightmost letter first: 0 -> 1 -> 3 -> 6
        assert l2q_frame_vector((0, 1, 1)).support() == [Fraction(6)]
        assert l2q_inner(6, (0, 1, 1)) != 0

    def test_words(self):
        assert all(not w or w[-1] == 1 for w in l2q_words(5))
        assert len(l2q_words(5)) == 32

    def test_inner_conjugate_linear(self):
        v = SparseRationalVector({1: 1j, 2: 2})
        assert v.inner(SparseRationalVector({1: 1j})) == pytest.approx(1)
        assert v.norm_sq() == pytest.approx(5)

    def test_words_alphabet(self):
        assert len(list(all_words(2, 3))) == 15
