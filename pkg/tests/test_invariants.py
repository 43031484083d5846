from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cuntzframe.invariants import (
    find_minimal_sets_1d,
    orbit,
    random_rational_points,
    ruelle_apply,
    ruelle_check,
    sample_line_invariance,
    verify_invariant,
    walk_from_minimal_set,
)
from cuntzframe.model import FilterSystem, digits_integral
from cuntzframe.serialize import load_fixture


def as_ints(sets):
    return [[int(p[0]) for p in S] for S in sets]


class TestMinimalSets1d:
    def test_mu4(self):
        assert as_ints(find_minimal_sets_1d(load_fixture("mu4").system)) == [[0]]

    def test_l03(self):
        assert as_ints(find_minimal_sets_1d(load_fixture("l03").system)) == [[0], [-1]]

    def test_ex411(self):
        assert as_ints(find_minimal_sets_1d(load_fixture("ex411_reduced").system)) == [[0], [-4, -1]]

    def test_rejects_2d(self):
        with pytest.raises(ValueError, match="dimension 1"):
            find_minimal_sets_1d(load_fixture("ex421").system)

    @pytest.mark.parametrize("name", ["mu4", "l03", "ex411_reduced"])
    def test_matches_lattice_scan(self, name):
        # oracle: scan a wider, finer lattice and keep the points whose orbit is finite and minimal
        fs = load_fixture(name).system
        found = set()
        for q in range(1, 5):
            for k in range(-12 * q, 12 * q + 1):
                try:
                    orb = orbit(fs, (Fraction(k, q),), cap=60)
                except RuntimeError:
                    continue
                if verify_invariant(fs, orb).ok:
                    found.add(frozenset(orb))
        assert found == {S.as_set() for S in find_minimal_sets_1d(fs)}

    @pytest.mark.parametrize("name", ["mu4", "l03", "ex411_reduced"])
    def test_found_sets_verify(self, name):
        fs = load_fixture(name).system
        for S in find_minimal_sets_1d(fs):
            rep = verify_invariant(fs, S.points)
            assert rep.ok

    def test_negative_scale(self):
        fs = FilterSystem.from_alpha(-2, [0, 1], [0, 1], [1, 1])
        sets = find_minimal_sets_1d(fs)
        for S in sets:
            assert verify_invariant(fs, S.points).ok
        assert any(0 in S for S in sets)


class TestVerifyInvariant:
    def test_partial_set_escapes(self):
        fs = load_fixture("ex411_reduced").system
        rep = verify_invariant(fs, [-1])
        assert not rep.invariant
        assert rep.escapes[0].target == (Fraction(-4),)

    def test_union_is_not_minimal(self):
        fs = load_fixture("ex411_reduced").system
        rep = verify_invariant(fs, [0, -1, -4])
        assert rep.invariant and not rep.minimal

    def test_2d_candidate(self):
        fs = load_fixture("ex421").system
        assert verify_invariant(fs, [(0, 0)]).ok


class TestLine:
    def test_ex421_line(self):
        cfg = load_fixture("ex421")
        ln = cfg.line
        rep = sample_line_invariance(cfg.system, ln["base"], ln["direction"], ln["lo"], ln["hi"], ln["samples"])
        assert rep.letters == (2, 3)
        assert rep.stays_on_line
        assert rep.maps == {2: (Fraction(1, 4), Fraction(1, 6)), 3: (Fraction(1, 4), Fraction(-1, 3))}
        assert rep.map_str(2) == "x -> 1/4*x + 1/6"
        assert rep.map_str(3) == "x -> 1/4*x - 1/3"

    def test_no_samples(self):
        rep = sample_line_invariance(load_fixture("ex421").system, [0, 0], [1, 0], 0, 1, 0)
        assert rep.samples == 0 and rep.stays_on_line

    def test_zero_direction(self):
        with pytest.raises(ValueError, match="nonzero"):
            sample_line_invariance(load_fixture("ex421").system, [0, 0], [0, 0], 0, 1, 3)


class TestRuelle:
    @pytest.mark.parametrize("name", ["mu4", "l03", "ex411", "ex411_reduced", "ex421"])
    def test_R1_is_one(self, name):
        fs = load_fixture(name).system
        pts = random_rational_points(np.random.default_rng(3), fs.d, 100)
        assert ruelle_check(fs, pts) < 1e-12

    @given(st.fractions(min_value=-5, max_value=5, max_denominator=50))
    def test_positive_preserving(self, t):
        fs = load_fixture("l03").system
        assert ruelle_apply(fs, lambda s: 1 + float(s[0]) ** 2, t).real >= 1 - 1e-12


class TestWalkFromSet:
    def test_reversing_on_extreme_points(self):
        fs = load_fixture("ex411_reduced").system
        g = walk_from_minimal_set(fs, [(-4,), (-1,)])
        assert g.reversing is True
        assert all(digits_integral(fs.ifs.B, v) for v in g.vertices)
        assert g.is_normalized()

    def test_rejects_non_invariant(self):
        with pytest.raises(ValueError, match="not invariant"):
            walk_from_minimal_set(load_fixture("ex411_reduced").system, [(-1,)])

    def test_b_dependent_coefficients_leave_reversing_unset(self):
        fs = load_fixture("ex411").system
        g = walk_from_minimal_set(fs, [(0, 0)])
        assert g.reversing is None
