import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from eigenpath.paths import SecretWord
from eigenpath.queries import (
    AncillaNotRestored,
    OracleRegisterState,
    _V,
    apply_Q,
    apply_R,
    hamiltonian_query_equivalence,
    q_from_double_r,
)


def words(max_n):
    return st.integers(1, max_n).flatmap(
        lambda n: st.tuples(st.integers(0, 2**n - 1), st.integers(1, n), st.integers(0, 2**n - 1)).map(
            lambda t: (SecretWord(n, t[0]), t[1], t[2])
        )
    )


class TestR:
    def test_x_zero_flips_everything(self):
        for a in range(8):
            assert apply_R(SecretWord(3, 0), OracleRegisterState(a)).phase == -1

    def test_threshold(self):
        x = SecretWord(2, 2)
        assert apply_R(x, OracleRegisterState(1)).phase == 1
        assert apply_R(x, OracleRegisterState(2)).phase == -1

    def test_sentinel_never_flips(self):
        for x in SecretWord.all(3):
            state = OracleRegisterState(0, sentinel=True)
            assert apply_R(x, state, "ancilla").phase == 1

    @given(words(6))
    def test_involution(self, args):
        x, _, a = args
        state = OracleRegisterState(a)
        assert apply_R(x, apply_R(x, state)).phase == 1

    def test_unknown_register(self):
        with pytest.raises(ValueError):
            apply_R(SecretWord(1, 0), OracleRegisterState(0), "clock")


class TestQ:
    def test_examples(self):
        x = SecretWord(3, 5)
        assert apply_Q(x, 3, 5) == -1
        assert apply_Q(x, 2, 0b011) == 1
        assert apply_Q(SecretWord.from_bits([1, 0]), 1, 0b11) == -1

    def test_level_range(self):
        with pytest.raises(ValueError):
            apply_Q(SecretWord(2, 0), 0, 0)
        with pytest.raises(ValueError):
            q_from_double_r(SecretWord(2, 0), 3, 0)

    def test_double_r_exhaustive(self):
        for n in range(1, 7):
            for x in SecretWord.all(n):
                for l in range(1, n + 1):
                    for a in range(2**n):
                        assert q_from_double_r(x, l, a) == apply_Q(x, l, a)

    def test_edge_cases(self):
        # matching prefix: queries straddle x
        assert q_from_double_r(SecretWord(3, 5), 2, 4) == -1
        # prefix above x: both queries flip
        assert q_from_double_r(SecretWord(3, 1), 1, 6) == 1
        # all-zero prefix with x above: sentinel and c(a) < x both leave the phase
        assert q_from_double_r(SecretWord(3, 6), 2, 1) == 1

    def test_pipeline_guards_ancilla(self):
        with pytest.raises(AncillaNotRestored):
            _V(1, 2, OracleRegisterState(system=2, ancilla=0))


class TestHamiltonianEquivalence:
    def test_exhaustive_small(self):
        for n in range(1, 6):
            for x in SecretWord.all(n):
                for l in range(1, n + 1):
                    rep = hamiltonian_query_equivalence(x, l)
                    assert rep.passed, rep
                    assert rep.worst_fidelity >= 1 - 1e-9
                    assert rep.sign_errors == 0

    def test_frozen_case(self):
        rep = hamiltonian_query_equivalence(SecretWord(3, 5), 2, delta=2.5)
        assert (rep.matches, rep.total) == (4, 4)

    def test_size_limit(self):
        with pytest.raises(ValueError):
            hamiltonian_query_equivalence(SecretWord(9, 0), 1)
