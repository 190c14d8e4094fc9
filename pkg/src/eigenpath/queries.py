"""Phase queries for ordered search, modelled on computational basis states.

``R_x`` marks positions at or after the secret ``x``; ``Q_x^l`` marks inputs
whose first ``l`` bits equal ``x(l)``. A ``Q_x^l`` query is rebuilt from two
``R_x`` calls on an ancilla register, and the Hamiltonian ``Delta P`` run for
``pi/Delta`` is checked to act as the same phase query.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .numerics import propagate
from .paths import SecretWord, prefix_plus_state

__all__ = [
    "OracleRegisterState",
    "AncillaNotRestored",
    "apply_R",
    "apply_Q",
    "q_from_double_r",
    "EquivalenceReport",
    "hamiltonian_query_equivalence",
]


class AncillaNotRestored(RuntimeError):
    pass


@dataclass(frozen=True)
class OracleRegisterState:
    """System index, ancilla value (or the underflow sentinel) and phase."""

    system: int
    ancilla: int = 0
    sentinel: bool = False
    phase: int = 1


def apply_R(x: SecretWord, state: OracleRegisterState, register: str = "system") -> OracleRegisterState:
    """Multiply the phase by -1 iff the register value is ``>= x``.

    The sentinel stands for the out-of-range value ``-1`` and never flips.
    """
    if register == "system":
        value, sentinel = state.system, False
    elif register == "ancilla":
        value, sentinel = state.ancilla, state.sentinel
    else:
        raise ValueError(f"unknown register {register!r}")
    flip = (not sentinel) and value >= x.x
    return replace(state, phase=-state.phase if flip else state.phase)


def _check_level(x: SecretWord, l: int):
    if not 1 <= l <= x.n:
        raise ValueError(f"l must be in 1..{x.n}, got {l}")


def apply_Q(x: SecretWord, l: int, a: int) -> int:
    _check_level(x, l)
    return -1 if (a >> (x.n - l)) == x.prefix_value(l) else 1


def _W(l: int, n: int, state: OracleRegisterState) -> OracleRegisterState:
    # ancilla <- [a(l), 1, ..., 1]
    tail = n - l
    prefix = state.system >> tail
    return replace(state, ancilla=state.ancilla ^ ((prefix << tail) | ((1 << tail) - 1)))


def _V(l: int, n: int, state: OracleRegisterState) -> OracleRegisterState:
    # [a(l), 1, ..., 1] -> [a(l), 0, ..., 0] - 1, sentinel on underflow
    tail = n - l
    prefix = state.system >> tail
    expected = (prefix << tail) | ((1 << tail) - 1)
    if state.ancilla != expected or state.sentinel:
        raise AncillaNotRestored(f"V^{l} received unexpected ancilla {state.ancilla}")
    if prefix == 0:
        return replace(state, ancilla=0, sentinel=True)
    return replace(state, ancilla=(prefix << tail) - 1)


def _U(l: int, n: int, state: OracleRegisterState) -> OracleRegisterState:
    # uncompute [a(l), 0, ..., 0] - 1 back to 0
    tail = n - l
    prefix = state.system >> tail
    if prefix == 0:
        if not state.sentinel:
            raise AncillaNotRestored("U^l expected the underflow sentinel")
        return replace(state, sentinel=False)
    return replace(state, ancilla=state.ancilla ^ ((prefix << tail) - 1))


def q_from_double_r(x: SecretWord, l: int, a: int) -> int:
    """Evaluate ``Q_x^l`` on basis input ``a`` as ``U^l R_x V^l R_x W^l``."""
    _check_level(x, l)
    n = x.n
    state = OracleRegisterState(system=a)
    state = _W(l, n, state)
    state = apply_R(x, state, "ancilla")
    state = _V(l, n, state)
    state = apply_R(x, state, "ancilla")
    state = _U(l, n, state)
    if state.ancilla != 0 or state.sentinel:
        raise AncillaNotRestored(f"ancilla left at {state.ancilla} (sentinel={state.sentinel})")
    return state.phase


@dataclass
class EquivalenceReport:
    x: int
    l: int
    matches: int
    total: int
    worst_fidelity: float
    sign_errors: int

    @property
    def passed(self) -> bool:
        return self.matches == self.total


def hamiltonian_query_equivalence(x: SecretWord, l: int, delta: float = 1.0, tol: float = 1e-9) -> EquivalenceReport:
    """Check ``exp(-i pi H_x^l / delta) |a(l),+..+> = Q_x^l |a(l),+..+>`` for all prefixes."""
    _check_level(x, l)
    if x.n > 8:
        raise ValueError("exhaustive check limited to n <= 8")
    marked = prefix_plus_state(x, l)
    h = delta * np.outer(marked, marked)
    worst, matches, sign_errors = 1.0, 0, 0
    for p in range(2**l):
        probe = SecretWord(x.n, p << (x.n - l))
        psi = prefix_plus_state(probe, l).astype(np.complex128)
        out = propagate(h, np.pi / delta, psi)
        expected = apply_Q(x, l, probe.x) * psi
        overlap = np.vdot(expected, out)
        fid = abs(overlap) ** 2
        worst = min(worst, fid)
        if overlap.real < 0:
            sign_errors += 1
        if fid >= 1 - tol and overlap.real > 0:
            matches += 1
    return EquivalenceReport(x.x, l, matches, 2**l, float(worst), sign_errors)
