import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cuntzframe.invariants import walk_from_minimal_set
from cuntzframe.serialize import load_fixture
from cuntzframe.walkgraph import (
    NotInjectiveError,
    NotNormalizedError,
    NotPeriodicError,
    WalkGraph,
    analyze,
    build_periodic_walk,
    ends_in_cycle_word,
    enumerate_cycle_words,
    enumerate_frame_words,
    enumerate_omega_beta,
    first_passage_mass,
    is_cycle_word,
    is_injective,
    is_irreducible_walk,
    is_separating,
    random_walk,
    sigma_fixed_dim,
)
from cuntzframe.words import all_words, word_str


def ex411_walk():
    return walk_from_minimal_set(load_fixture("ex411_reduced").system, [(-4,), (-1,)])


def loop_walk():
    return WalkGraph((0,), [[0]], [[1.0]])


walk_params = st.tuples(st.integers(0, 2**32 - 1), st.integers(1, 4), st.integers(1, 3), st.booleans())


def make_walk(params):
    seed, n, M, inj = params
    return random_walk(np.random.default_rng(seed), n, M, injective=inj)


def brute_first_passage(g, t, c, L):
    kt, kc = g.index(t), g.index(c)
    total = 0.0
    for n in range(1, L + 1):
        for w in itertools.product(range(g.M), repeat=n):
            cur, ok, p = kt, True, 1.0
            for pos, i in enumerate(w):
                nu = g.weights[i, cur]
                if abs(nu) <= 1e-9:
                    ok = False
                    break
                p *= abs(nu) ** 2
                cur = int(g.targets[i, cur])
                if cur == kc and pos < n - 1:
                    ok = False
                    break
            if ok and cur == kc:
                total += p
    return total


def brute_separating(g):
    # a common possible word of length n^2 forces a repeated pair, hence arbitrarily long ones
    L = g.n * g.n
    poss = g.possible()
    for a in range(g.n):
        for b in range(g.n):
            if a == b:
                continue
            frontier = {(a, b)}
            for _ in range(L):
                frontier = {
                    (int(g.targets[i, x]), int(g.targets[i, y])) for x, y in frontier for i in range(g.M) if poss[i, x] and poss[i, y]
                }
            if frontier:
                return False
    return True


class TestWalkGraph:
    def test_rejects_shape_mismatch(self):
        with pytest.raises(ValueError, match="shape"):
            WalkGraph((0, 1), [[0, 1]], [[1.0]])

    def test_rejects_missing_target(self):
        with pytest.raises(ValueError, match="no target"):
            WalkGraph((0,), [[-1]], [[1.0]])

    def test_rejects_duplicate_vertices(self):
        with pytest.raises(ValueError, match="distinct"):
            WalkGraph((0, 0), [[0, 1]], [[1.0, 1.0]])

    def test_from_maps(self):
        g = WalkGraph.from_maps(["a", "b"], 2, {(0, "a"): "b", (0, "b"): "a", (1, "a"): "a"}, {(0, "a"): 1, (0, "b"): 1})
        assert g.targets.tolist() == [[1, 0], [0, -1]]
        assert g.is_normalized()

    def test_analyze_requires_normalization(self):
        g = WalkGraph((0,), [[0]], [[0.5]])
        with pytest.raises(NotNormalizedError, match="not normalized"):
            analyze(g)

    @given(walk_params)
    def test_random_walks_normalized(self, params):
        assert make_walk(params).row_defect() < 1e-10

    @given(walk_params)
    def test_injective_option(self, params):
        seed, n, M, _ = params
        assert is_injective(random_walk(np.random.default_rng(seed), n, M, injective=True))


class TestProperties:
    def test_remmc(self):
        g = load_fixture("remmc").walk
        rep = analyze(g)
        assert (rep.irreducible, rep.injective, rep.separating, rep.sigma_fixed_dim, rep.simple) == (True, False, False, 1, True)

    def test_ex411(self):
        rep = analyze(ex411_walk())
        assert rep.irreducible and rep.injective and rep.separating and rep.sigma_fixed_dim == 1
        assert rep.reversing is True

    def test_two_fixed_vertices_not_simple(self):
        # both vertices loop to themselves: every matrix is fixed
        g = WalkGraph((0, 1), [[0, 1]], [[1.0, 1.0]])
        assert not is_irreducible_walk(g)
        assert sigma_fixed_dim(g) == 4

    def test_disjoint_cycles_reducible(self):
        g = WalkGraph((0, 1, 2), [[1, 0, 2]], [[1.0, 1.0, 1.0]])
        assert not is_irreducible_walk(g)

    @given(walk_params)
    def test_separating_matches_brute_force(self, params):
        g = make_walk(params)
        assert is_separating(g) == brute_separating(g)

    @given(st.integers(0, 2**32 - 1))
    def test_irreducible_separating_simple(self, seed):
        rng = np.random.default_rng(seed)
        for _ in range(20):
            g = random_walk(rng, int(rng.integers(1, 6)), int(rng.integers(2, 4)), injective=True, p_zero=0.5)
            if is_irreducible_walk(g) and is_separating(g):
                assert analyze(g).sigma_fixed_dim == 1


class TestCycleWords:
    def test_single_loop(self):
        assert [word_str(c.word) for c in enumerate_cycle_words(loop_walk(), 0, 5)] == ["0"]

    def test_remmc(self):
        g = load_fixture("remmc").walk
        assert [word_str(c.word) for c in enumerate_cycle_words(g, 1, 2)] == ["0", "10"]

    def test_ex411(self):
        cws = enumerate_cycle_words(ex411_walk(), -1, 4)
        assert [word_str(c.word) for c in cws] == ["1", "30"]
        assert abs(sum(abs(c.weight) ** 2 for c in cws) - 1) < 1e-12

    @given(walk_params, st.integers(1, 5))
    def test_matches_brute_force(self, params, L):
        g = make_walk(params)
        for v in g.vertices:
            got = [c.word for c in enumerate_cycle_words(g, v, L)]
            want = [w for w in all_words(g.M, L) if is_cycle_word(g, v, w)]
            assert got == want

    def test_empty_word_is_not_cycle(self):
        assert not is_cycle_word(loop_walk(), 0, ())

    def test_ends_in_cycle_word_refuses_non_injective(self):
        with pytest.raises(NotInjectiveError, match="not unique"):
            ends_in_cycle_word(load_fixture("remmc").walk, 1, (0,))

    def test_frame_words_definitional(self):
        g = ex411_walk()
        frame = set(enumerate_frame_words(g, -1, 6))
        for w in all_words(g.M, 6):
            assert (w in frame) == (not ends_in_cycle_word(g, -1, w))

    def test_suffix_decomposition_unique(self):
        # on an injective walk a word ends in at most one cycle word
        g = ex411_walk()
        cycles = {c.word for c in enumerate_cycle_words(g, -1, 8)}
        for v in g.vertices:
            cyc = {c.word for c in enumerate_cycle_words(g, v, 8)}
            for w in all_words(g.M, 8):
                assert sum(w[len(w) - k :] in cyc for k in range(1, len(w) + 1)) <= 1
        assert cycles

    def test_omega_beta(self):
        words = enumerate_omega_beta(2, (1,), 3)
        assert len(words) == 8 and all(not w or w[-1] != 1 for w in words)
        with pytest.raises(ValueError, match="irreducible"):
            enumerate_omega_beta(2, (0, 0), 3)


class TestFirstPassage:
    def test_ex411_exact(self):
        assert first_passage_mass(ex411_walk(), -1, -1, 2) == pytest.approx(1.0, abs=1e-12)

    def test_ex411_length_one(self):
        g = ex411_walk()
        nu = g.weights[1, g.index(-1)]
        assert first_passage_mass(g, -1, -1, 1) == pytest.approx(abs(nu) ** 2, abs=1e-15)

    def test_no_path(self):
        g = WalkGraph((0, 1), [[0, 1]], [[1.0, 1.0]])
        assert first_passage_mass(g, 0, 1, 10) == 0.0

    @given(walk_params, st.integers(1, 5))
    def test_matches_brute_force(self, params, L):
        g = make_walk(params)
        for t in g.vertices:
            for c in g.vertices:
                assert abs(first_passage_mass(g, t, c, L) - brute_first_passage(g, t, c, L)) < 1e-12

    @given(walk_params)
    def test_monotone_and_bounded(self, params):
        g = make_walk(params)
        masses = [first_passage_mass(g, 0, g.n - 1, L) for L in range(0, 30)]
        assert all(b >= a - 1e-15 for a, b in zip(masses, masses[1:]))
        assert masses[-1] <= 1 + 1e-10


class TestPeriodicWalk:
    def test_fixed_point(self):
        g = build_periodic_walk(load_fixture("l03").system, -1, (1,))
        assert g.vertices == ((Fraction(-1),),)
        assert analyze(g).simple

    def test_not_periodic(self):
        with pytest.raises(NotPeriodicError):
            build_periodic_walk(load_fixture("ex411_reduced").system, -1, (3, 0))

    def test_reducible_word(self):
        with pytest.raises(ValueError, match="irreducible"):
            build_periodic_walk(load_fixture("mu4").system, 0, (0, 0))
