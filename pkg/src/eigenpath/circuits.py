"""Small quantum circuits: gate matrices and the line-based circuit file format.

A circuit file holds one gate per line::

    # Bell pair
    QUBITS 2
    GATE H 0
    GATE CNOT 0 1
    GATE U3(0.1,0.2,0.3) 1      # or: GATE U3 1 0.1 0.2 0.3

Qubit 0 is the most significant tensor factor. Blank lines and ``#``
comments are ignored; ``QUBITS`` is optional and otherwise inferred from the
largest target index.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = ["CircuitSpec", "CircuitParseError", "gate_matrix", "parse_circuit", "load_circuit"]

_SINGLE = {
    "H": np.array([[1, 1], [1, -1]], dtype=np.complex128) / np.sqrt(2),
    "X": np.array([[0, 1], [1, 0]], dtype=np.complex128),
    "Z": np.array([[1, 0], [0, -1]], dtype=np.complex128),
    "T": np.array([[1, 0], [0, np.exp(1j * np.pi / 4)]], dtype=np.complex128),
}


class CircuitParseError(ValueError):
    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


def u3(theta: float, phi: float, lam: float) -> np.ndarray:
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array(
        [[c, -np.exp(1j * lam) * s], [np.exp(1j * phi) * s, np.exp(1j * (phi + lam)) * c]],
        dtype=np.complex128,
    )


def _embed_single(u: np.ndarray, target: int, nqubits: int) -> np.ndarray:
    out = np.ones((1, 1), dtype=np.complex128)
    for q in range(nqubits):
        out = np.kron(out, u if q == target else np.eye(2))
    return out


def _cnot(control: int, target: int, nqubits: int) -> np.ndarray:
    dim = 2**nqubits
    out = np.zeros((dim, dim), dtype=np.complex128)
    cbit = 1 << (nqubits - 1 - control)
    tbit = 1 << (nqubits - 1 - target)
    for i in range(dim):
        out[i ^ tbit if i & cbit else i, i] = 1.0
    return out


def gate_matrix(name: str, targets, nqubits: int, params=()) -> np.ndarray:
    """Full ``2**nqubits`` unitary for a named gate."""
    name = name.upper()
    targets = list(targets)
    for t in targets:
        if not 0 <= t < nqubits:
            raise ValueError(f"qubit {t} out of range for {nqubits} qubits")
    if name in _SINGLE:
        if len(targets) != 1 or params:
            raise ValueError(f"{name} takes one target and no parameters")
        return _embed_single(_SINGLE[name], targets[0], nqubits)
    if name == "U3":
        if len(targets) != 1 or len(params) != 3:
            raise ValueError("U3 takes one target and three angles")
        return _embed_single(u3(*params), targets[0], nqubits)
    if name == "CNOT":
        if len(targets) != 2 or targets[0] == targets[1] or params:
            raise ValueError("CNOT takes two distinct targets (control, target)")
        return _cnot(targets[0], targets[1], nqubits)
    raise ValueError(f"unknown gate {name!r}")


@dataclass(frozen=True, eq=False)
class CircuitSpec:
    """Ordered gate list ``U_1, ..., U_n`` on ``nqubits`` qubits."""

    nqubits: int
    gates: tuple

    def __post_init__(self):
        dim = 2**self.nqubits
        for k, g in enumerate(self.gates, start=1):
            g = np.asarray(g)
            if g.shape != (dim, dim):
                raise ValueError(f"gate {k} has shape {g.shape}, expected {(dim, dim)}")
            dev = np.max(np.abs(g.conj().T @ g - np.eye(dim)))
            if dev > 1e-10:
                raise ValueError(f"gate {k} is not unitary (deviation {dev:.2e})")

    @property
    def dim(self) -> int:
        return 2**self.nqubits

    def __len__(self) -> int:
        return len(self.gates)

    def apply(self, psi, upto: int | None = None) -> np.ndarray:
        """``U_upto ... U_1 psi`` (all gates when ``upto`` is None)."""
        out = np.asarray(psi, dtype=np.complex128)
        for g in self.gates[: len(self.gates) if upto is None else upto]:
            out = g @ out
        return out


_GATE_RE = re.compile(r"^GATE\s+([A-Za-z0-9]+)(?:\(([^)]*)\))?\s*(.*)$", re.IGNORECASE)


def parse_circuit(text: str) -> CircuitSpec:
    raw = []
    nqubits = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        head = line.split()[0].upper()
        if head == "QUBITS":
            parts = line.split()
            if len(parts) != 2 or not parts[1].isdigit() or int(parts[1]) < 1:
                raise CircuitParseError(lineno, f"bad QUBITS line {line!r}")
            nqubits = int(parts[1])
            continue
        m = _GATE_RE.match(line)
        if head != "GATE" or m is None:
            raise CircuitParseError(lineno, f"expected 'GATE <name> <targets> [params]', got {line!r}")
        name, inline, rest = m.group(1).upper(), m.group(2), m.group(3).split()
        try:
            if name == "U3":
                if inline is not None:
                    params = tuple(float(p) for p in inline.split(","))
                    targets = [int(t) for t in rest]
                else:
                    targets, params = [int(rest[0])], tuple(float(p) for p in rest[1:])
            else:
                if inline is not None:
                    raise ValueError(f"{name} takes no parameters")
                targets, params = [int(t) for t in rest], ()
        except (ValueError, IndexError) as exc:
            raise CircuitParseError(lineno, str(exc) or "malformed arguments") from None
        raw.append((lineno, name, targets, params))
    if not raw:
        raise CircuitParseError(0, "circuit has no gates")
    if nqubits is None:
        nqubits = max(max(t) for _, _, t, _ in raw if t) + 1
    gates = []
    for lineno, name, targets, params in raw:
        try:
            gates.append(gate_matrix(name, targets, nqubits, params))
        except ValueError as exc:
            raise CircuitParseError(lineno, str(exc)) from None
    return CircuitSpec(nqubits, tuple(gates))


def load_circuit(path) -> CircuitSpec:
    return parse_circuit(Path(path).read_text())
