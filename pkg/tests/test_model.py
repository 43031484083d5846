import cmath
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cuntzframe.model import (
    FilterSystem,
    IFSSpec,
    MatrixClass,
    as_point,
    check_filter_matrix,
    check_no_overlap,
    digits_integral,
    eval_mB,
    filter_matrix,
    g_map,
    mu_hat,
    mu_hat_many,
    mu_hat_shifted,
    mu_hat_tail,
    spectral_transition,
)
from cuntzframe.serialize import load_fixture

rationals = st.fractions(min_value=-50, max_value=50, max_denominator=200)


def mu4_closed_form(x, depth=40):
    # m_B(y) = (1 + e(2y)) / 2 = e(y) cos(2 pi y) for B = {0, 2}
    p = 1 + 0j
    for k in range(1, depth + 1):
        y = x / 4**k
        p *= cmath.exp(2j * math.pi * y) * math.cos(2 * math.pi * y)
    return p


def float_product(fs, xi, depth=40):
    RTi = np.linalg.inv(np.array(fs.ifs.R, dtype=float).T)
    B = np.array(fs.ifs.B, dtype=float)
    y = np.array([float(c) for c in xi])
    p = 1 + 0j
    for _ in range(depth):
        y = RTi @ y
        p *= np.mean(np.exp(2j * np.pi * (B @ y)))
    return p


class TestIFSSpec:
    def test_rejects_non_expansive(self):
        with pytest.raises(ValueError, match="not expansive"):
            IFSSpec([[1]], [[0], [1]])

    def test_rejects_eigenvalue_one_in_2d(self):
        with pytest.raises(ValueError, match="not expansive"):
            IFSSpec([[2, 0], [0, 1]], [[0, 0], [1, 0]])

    def test_needs_zero_digit(self):
        with pytest.raises(ValueError, match="0 must be"):
            IFSSpec(4, [[1], [2]])

    def test_distinct_digits(self):
        with pytest.raises(ValueError, match="distinct"):
            IFSSpec(4, [[0], [2], [2]])

    def test_exact_inverse_transpose(self):
        ifs = IFSSpec([[4, 0], [1, 4]], [[0, 0], [1, 0]])
        RT = np.array(ifs.R, dtype=object).T
        prod = [[sum(RT[i][k] * ifs.RT_inv[k][j] for k in range(2)) for j in range(2)] for i in range(2)]
        assert prod == [[1, 0], [0, 1]]


class TestFilterMatrix:
    def test_classes(self, fixture):
        assert check_filter_matrix(fixture("mu4").system).kind is MatrixClass.UNITARY
        assert check_filter_matrix(fixture("l03").system).kind is MatrixClass.UNITARY
        assert check_filter_matrix(fixture("ex411").system).kind is MatrixClass.UNITARY
        assert check_filter_matrix(fixture("ex411_reduced").system).kind is MatrixClass.ISOMETRY
        assert check_filter_matrix(fixture("ex421").system).kind is MatrixClass.UNITARY

    def test_invalid(self):
        fs = FilterSystem.from_alpha(4, [0, 2], [0, 2], [1, 1])
        chk = check_filter_matrix(fs)
        assert chk.kind is MatrixClass.INVALID
        assert chk.max_defect > 0.5

    def test_mu4_matrix_entries(self, fixture):
        U = filter_matrix(fixture("mu4").system)
        # rows l = 0, 1; columns b = 0, 2; entries e(b l / 4) / sqrt 2
        want = np.array([[1, 1], [1, -1]]) / math.sqrt(2)
        assert np.allclose(U, want, atol=1e-15)

    def test_wrong_shape_rejected(self):
        with pytest.raises(ValueError, match="shape"):
            FilterSystem(IFSSpec(4, [[0], [2]]), [[0], [1]], np.ones((2, 3)))

    def test_l0_must_be_zero(self):
        with pytest.raises(ValueError, match="l_0"):
            FilterSystem.from_alpha(4, [0, 2], [1, 0], [1, 1])


class TestNoOverlap:
    def test_fixtures(self, fixture):
        for name in ("mu4", "l03", "ex411", "ex421"):
            assert check_no_overlap(fixture(name).system)

    def test_congruent_digits(self):
        assert not check_no_overlap(IFSSpec(2, [[0], [2]]))
        assert not check_no_overlap(IFSSpec([[2, 0], [0, 2]], [[0, 0], [2, 2]]))


class TestSpectralMaps:
    def test_g_map_exact(self, fixture):
        fs = fixture("ex411_reduced").system
        assert g_map(fs, 1, -1) == (Fraction(-1),)
        assert g_map(fs, 3, -1) == (Fraction(-4),)
        assert g_map(fs, 0, -4) == (Fraction(-1),)

    def test_eval_mB(self, fixture):
        B = fixture("mu4").system.ifs.B
        assert abs(eval_mB(B, Fraction(1, 4))) < 1e-15
        assert eval_mB(B, 0) == 1
        assert abs(eval_mB(B, Fraction(1, 8)) - (1 + 1j) / 2) < 1e-15

    def test_digits_integral(self, fixture):
        B = fixture("mu4").system.ifs.B
        assert digits_integral(B, Fraction(-1, 2))
        assert not digits_integral(B, Fraction(1, 4))

    @given(rationals)
    def test_weights_normalized_1d(self, t):
        for name in ("mu4", "l03", "ex411_reduced"):
            fs = load_fixture(name).system
            s = sum(abs(tr.weight) ** 2 for tr in spectral_transition(fs, t))
            assert abs(s - 1) < 1e-12

    @given(rationals, rationals)
    def test_weights_normalized_2d(self, x, y):
        for name in ("ex411", "ex421"):
            fs = load_fixture(name).system
            s = sum(abs(tr.weight) ** 2 for tr in spectral_transition(fs, (x, y)))
            assert abs(s - 1) < 1e-12


class TestMuHat:
    def test_zero(self, fixture):
        assert mu_hat(fixture("mu4").system, 0) == 1

    def test_depth_zero(self, fixture):
        assert mu_hat(fixture("mu4").system, Fraction(1, 3), 0) == 1

    def test_negative_depth(self, fixture):
        with pytest.raises(ValueError):
            mu_hat(fixture("mu4").system, 1, -1)

    @pytest.mark.parametrize("x", [0.3712, 1.0, 5.0, 17.25, 1000.5])
    def test_mu4_closed_form(self, fixture, x):
        fs = fixture("mu4").system
        assert abs(mu_hat(fs, x) - mu4_closed_form(x)) < 1e-13

    def test_mu4_spectrum_orthogonal(self, fixture):
        # labels 0, 1, 4, 5 are in the spectrum {sum 4^k l_k}, so all differences vanish
        fs = fixture("mu4").system
        for s in (1, 4, 5, 3, 16, 21):
            assert abs(mu_hat(fs, s)) < 1e-15

    def test_2d_float_oracle(self, fixture, rng):
        fs = fixture("ex421").system
        for _ in range(10):
            xi = tuple(Fraction(int(rng.integers(-500, 500)), int(rng.integers(1, 30))) for _ in range(2))
            assert abs(mu_hat(fs, xi) - float_product(fs, xi)) < 1e-10

    @pytest.mark.parametrize("name", ["mu4", "l03", "ex411", "ex421"])
    def test_vectorized_matches_exact(self, fixture, rng, name):
        fs = fixture(name).system
        pts = []
        for scale in (1, 10, 10**7):
            for _ in range(15):
                pts.append(tuple(Fraction(int(rng.integers(-scale * 97, scale * 97)), int(rng.integers(1, 97))) for _ in range(fs.d)))
        got = mu_hat_many(fs, pts)
        want = np.array([mu_hat(fs, p) for p in pts])
        assert np.max(np.abs(got - want)) < 1e-12

    def test_vectorized_depths(self, fixture):
        fs = fixture("l03").system
        pts = [Fraction(7, 3), Fraction(-22, 5), Fraction(123456789, 7)]
        for depth in (0, 1, 3, 12):
            assert np.allclose(mu_hat_many(fs, pts, depth), [mu_hat(fs, p, depth) for p in pts], atol=1e-13)

    def test_shifted(self, fixture):
        fs = fixture("ex421").system
        t = (Fraction(1, 3), Fraction(-5, 7))
        labels = np.array([[0, 0], [2, 0], [10, 8], [-6, 42]])
        got = mu_hat_shifted(fs, t, labels)
        want = [mu_hat(fs, (t[0] - a, t[1] - b)) for a, b in labels]
        assert np.allclose(got, want, atol=1e-13)

    def test_tail_diagnostic_small(self, fixture):
        fs = fixture("mu4").system
        assert mu_hat_tail(fs, 1000) < 1e-12
        assert mu_hat_tail(fs, 1001, 2) > 1e-3

    @given(rationals)
    def test_conjugate_symmetry_and_bound(self, x):
        fs = load_fixture("l03").system
        a, b = mu_hat(fs, x), mu_hat(fs, -x)
        assert abs(a - b.conjugate()) < 1e-14
        assert abs(a) <= 1 + 1e-14

    def test_as_point(self):
        assert as_point("1/3") == (Fraction(1, 3),)
        with pytest.raises(ValueError):
            as_point([1, 2], 1)
