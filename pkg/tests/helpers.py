"""Small circuit and path factories shared by several test modules."""

import numpy as np

from eigenpath.circuits import CircuitSpec, gate_matrix, parse_circuit
from eigenpath.numerics import basis_state
from eigenpath.paths import build_clock_path

BELL_TEXT = "QUBITS 2\nGATE H 0\nGATE CNOT 0 1\n"


def bell_circuit():
    return parse_circuit(BELL_TEXT)


def mixed_circuit(n_gates, nqubits=2):
    """Deterministic circuit alternating U3 rotations and CNOTs."""
    gates = []
    for k in range(n_gates):
        if k % 3 == 2 and nqubits > 1:
            gates.append(gate_matrix("CNOT", [k % nqubits, (k + 1) % nqubits], nqubits))
        else:
            params = (0.4 + 0.3 * k, 0.1 * k, 0.7 - 0.2 * k)
            gates.append(gate_matrix("U3", [k % nqubits], nqubits, params))
    return CircuitSpec(nqubits, tuple(gates))


def clock_path(circuit, delta=1.0):
    return build_clock_path(circuit, delta, basis_state(0, circuit.dim))


# (criterion, passed, detail) lines collected by the acceptance suite and
# printed in the terminal summary
ACCEPTANCE_LINES = []
