"""Cross-checks between the production engines and the enumeration oracle."""

import random

from hypothesis import given, settings
from hypothesis import strategies as st

from gctl.flat_checker import (check_flat, count_globally, count_next,
                               count_until, oracle_check, oracle_count)
from gctl.formula import (Atom, ExistsG, ExistsU, ExistsX, ForallF, ForallG,
                          ForallU, ForallX, Not, TrueF, render)
from gctl.gen import random_formula, random_kripke


@st.composite
def small_structures(draw):
    n = draw(st.integers(min_value=1, max_value=6))
    seed = draw(st.integers(min_value=0, max_value=10_000))
    return random_kripke(n, seed)


class TestCountsAgainstOracle:
    @settings(max_examples=120, deadline=None)
    @given(small_structures(), st.integers(min_value=0, max_value=3))
    def test_globally_counts(self, ks, grade):
        p = [("p" in l) for l in ks.labels]
        counts = count_globally(ks, p, grade)
        for s in range(ks.n_states):
            assert counts[s] == oracle_count(ks, s, "G", grade, p)

    @settings(max_examples=120, deadline=None)
    @given(small_structures(), st.integers(min_value=0, max_value=3))
    def test_until_counts(self, ks, grade):
        p = [("p" in l) for l in ks.labels]
        q = [("q" in l) for l in ks.labels]
        counts = count_until(ks, p, q, grade)
        for s in range(ks.n_states):
            assert counts[s] == oracle_count(ks, s, "U", grade, p, q)

    @settings(max_examples=60, deadline=None)
    @given(small_structures(), st.integers(min_value=0, max_value=3))
    def test_next_counts(self, ks, grade):
        p = [("p" in l) for l in ks.labels]
        for s in range(ks.n_states):
            assert count_next(ks, s, p, grade + 1) == \
                oracle_count(ks, s, "X", grade, p)


class TestFullFormulaAgainstOracle:
    def test_seeded_sweep(self):
        for seed in range(120):
            rng = random.Random(seed)
            ks = random_kripke(rng.randint(1, 6), seed + 40_000)
            f = random_formula(rng, ["p", "q", "r"], depth=3)
            assert check_flat(ks, f).root_row() == oracle_check(ks, f), \
                (seed, render(f))


class TestDualities:
    """The universal forms must agree with their existential rewrites,
    judged by the independent oracle."""

    def test_forall_next_duality(self):
        for seed in range(40):
            rng = random.Random(seed)
            ks = random_kripke(rng.randint(1, 6), seed + 1000)
            for k in range(4):
                lhs = oracle_check(ks, ForallX(k, Atom("p")))
                rhs = oracle_check(ks, Not(ExistsX(k, Not(Atom("p")))))
                assert lhs == rhs

    def test_forall_globally_duality(self):
        for seed in range(40):
            rng = random.Random(seed)
            ks = random_kripke(rng.randint(1, 6), seed + 2000)
            for k in range(4):
                lhs = oracle_check(ks, ForallG(k, Atom("p")))
                rhs = oracle_check(ks, Not(ExistsU(k, TrueF(), Not(Atom("p")))))
                assert lhs == rhs

    def test_forall_finally_duality(self):
        for seed in range(40):
            rng = random.Random(seed)
            ks = random_kripke(rng.randint(1, 6), seed + 3000)
            for k in range(4):
                lhs = oracle_check(ks, ForallF(k, Atom("p")))
                rhs = oracle_check(ks, Not(ExistsG(k, Not(Atom("p")))))
                assert lhs == rhs

    def test_forall_until_grade0_equals_classical_expansion(self):
        for seed in range(40):
            rng = random.Random(seed)
            ks = random_kripke(rng.randint(1, 6), seed + 4000)
            f = ForallU(0, Atom("p"), Atom("q"))
            assert oracle_check(ks, f) == check_flat(ks, f).root_row()
