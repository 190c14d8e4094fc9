"""Hamiltonian path families and their analytic eigenpaths.

Every path is a concatenation of ``n_segments`` pieces; segment ``l`` (1-based)
covers ``(l-1)/n <= r < l/n`` and is parametrised locally by ``s = r*n - l + 1``.
The final point ``r = 1`` belongs to the last segment at ``s = 1``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from .circuits import CircuitSpec
from .numerics import as_state, basis_state

__all__ = [
    "TRACK_TOP",
    "TRACK_BOTTOM",
    "TRACK_CONTINUATION",
    "HamiltonianPath",
    "SecretWord",
    "GapProfile",
    "prefix_plus_state",
    "build_grover_path",
    "build_clock_path",
    "build_ordered_search_path",
    "apply_gap_profile",
    "reparametrized",
    "reference_eigenpath",
]

TRACK_TOP = "top"
TRACK_BOTTOM = "bottom"
TRACK_CONTINUATION = "continuation"


@dataclass(frozen=True, eq=False)
class HamiltonianPath:
    """A piecewise-defined path ``r -> H(r)`` with a tracked eigenstate branch.

    Parameters
    ----------
    segment_hamiltonian
        ``(l, s) -> H`` for segment ``l`` in ``1..n_segments`` and ``s`` in [0, 1].
    dim
        Hilbert space dimension.
    n_segments
        Number of segments ``n``.
    delta
        Nominal gap of the construction.
    kind
        One of ``grover``, ``clock``, ``ordered-search``, ``scaled``.
    track
        ``top`` / ``bottom`` select an extremal eigenvalue; ``continuation``
        follows the eigenvector of maximal overlap, starting at ``seed``.
    info
        Construction data (secret word, circuit, endpoint states, ...).
    """

    segment_hamiltonian: Callable[[int, float], np.ndarray]
    dim: int
    n_segments: int
    delta: float
    kind: str
    track: str
    seed: np.ndarray | None = None
    info: Mapping = field(default_factory=dict)

    def locate(self, r: float) -> tuple[int, float]:
        if not -1e-12 <= r <= 1 + 1e-12:
            raise ValueError(f"r must lie in [0, 1], got {r}")
        n = self.n_segments
        l = min(int(np.floor(r * n + 1e-12)) + 1, n)
        s = min(max(r * n - (l - 1), 0.0), 1.0)
        return l, s

    def at(self, l: int, s: float) -> np.ndarray:
        return self.segment_hamiltonian(l, s)

    def __call__(self, r: float) -> np.ndarray:
        return self.at(*self.locate(r))

    hamiltonian = __call__

    @property
    def breakpoints(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.n_segments + 1)

    def to_r(self, l: int, s: float) -> float:
        return (l - 1 + s) / self.n_segments


@dataclass(frozen=True)
class SecretWord:
    """An n-bit input ``x``; bit ``x_0`` is the most significant."""

    n: int
    x: int

    def __post_init__(self):
        if not 1 <= self.n <= 16:
            raise ValueError(f"word length must be in 1..16, got {self.n}")
        if not 0 <= self.x < 2**self.n:
            raise ValueError(f"x={self.x} out of range for n={self.n}")

    @classmethod
    def from_bits(cls, bits) -> "SecretWord":
        bits = [int(b) for b in bits]
        return cls(len(bits), int("".join(map(str, bits)), 2))

    @property
    def bits(self) -> tuple[int, ...]:
        return tuple((self.x >> (self.n - 1 - j)) & 1 for j in range(self.n))

    def prefix(self, l: int) -> tuple[int, ...]:
        return self.bits[:l]

    def prefix_value(self, l: int) -> int:
        return self.x >> (self.n - l)

    @classmethod
    def all(cls, n: int):
        return [cls(n, x) for x in range(2**n)]


@dataclass(frozen=True)
class GapProfile:
    """Positive multiplier ``q(r)`` applied to a path."""

    q: Callable[[float], float]
    name: str = "custom"

    @classmethod
    def constant(cls, value: float) -> "GapProfile":
        return cls(lambda r: float(value), name=f"const({value:g})")

    @classmethod
    def linear_ramp(cls) -> "GapProfile":
        return cls(lambda r: 1.0 + float(r), name="1+r")

    @classmethod
    def from_table(cls, rs, qs) -> "GapProfile":
        rs = np.asarray(rs, dtype=float)
        qs = np.asarray(qs, dtype=float)
        return cls(lambda r: float(np.interp(r, rs, qs)), name="table")

    def __call__(self, r: float) -> float:
        return self.q(r)

    def minimum(self, resolution: int = 257) -> float:
        return min(self.q(r) for r in np.linspace(0.0, 1.0, resolution))


def prefix_plus_state(word: SecretWord, l: int) -> np.ndarray:
    """``|x(l), +, ..., +>`` as a real vector of length ``2**n``."""
    n = word.n
    head = np.zeros(2**l)
    head[word.prefix_value(l) if l else 0] = 1.0
    tail = np.full(2 ** (n - l), 2 ** (-(n - l) / 2))
    return np.kron(head, tail)


def build_grover_path(N: int, marked: int) -> HamiltonianPath:
    if N < 2 or N & (N - 1):
        raise ValueError(f"N must be a power of 2, got {N}")
    if not 0 <= marked < N:
        raise ValueError(f"marked={marked} out of range for N={N}")
    uniform = np.full(N, 1 / np.sqrt(N))
    target = np.zeros(N)
    target[marked] = 1.0
    p_uniform = np.outer(uniform, uniform)
    p_target = np.outer(target, target)
    eye = np.eye(N)

    def segment(l, s):
        return (1 - s) * (eye - p_uniform) + s * (eye - p_target)

    return HamiltonianPath(
        segment, N, 1, 1 / np.sqrt(N), "grover", TRACK_BOTTOM,
        info={"N": N, "marked": marked, "uniform": uniform, "target": target},
    )


def build_clock_path(circuit: CircuitSpec, delta: float, seed) -> HamiltonianPath:
    """Piecewise path whose tracked eigenstate carries out ``circuit`` on ``seed``."""
    n = len(circuit)
    if n == 0:
        raise ValueError("circuit must contain at least one gate")
    if delta <= 0:
        raise ValueError(f"delta must be positive, got {delta}")
    psi = as_state(seed)
    if psi.shape[0] != circuit.dim:
        raise ValueError(f"seed has dim {psi.shape[0]}, circuit acts on {circuit.dim}")
    nclock = n + 1
    eye = np.eye(circuit.dim)

    def clock_op(i, j):
        e = np.zeros((nclock, nclock))
        e[i, j] = 1.0
        return e

    gammas = [np.kron(circuit.apply(psi, upto=l), basis_state(l, nclock)) for l in range(nclock)]

    def segment(l, s):
        u = circuit.gates[l - 1]
        diag = np.kron(eye, clock_op(l - 1, l - 1) - clock_op(l, l))
        hop = np.kron(u, clock_op(l, l - 1))
        hop = hop + hop.conj().T
        return -0.5 * delta * (np.cos(np.pi * s) * diag + np.sin(np.pi * s) * hop)

    return HamiltonianPath(
        segment, circuit.dim * nclock, n, delta, "clock", TRACK_CONTINUATION,
        seed=gammas[0],
        info={"circuit": circuit, "system_state": psi, "gammas": gammas},
    )


def build_ordered_search_path(word: SecretWord, delta: float, lowest: bool = False) -> HamiltonianPath:
    """Ordered-search path through ``|x(l),+,...,+>``, ``l = 0..n``.

    The projector Hamiltonians make the tracked branch the top one; with
    ``lowest=True`` the whole path is negated so that it becomes the ground
    branch instead.
    """
    if delta <= 0:
        raise ValueError(f"delta must be positive, got {delta}")
    sign = -1.0 if lowest else 1.0
    endpoints = [prefix_plus_state(word, l) for l in range(word.n + 1)]

    def segment(l, s):
        u, v = endpoints[l - 1], endpoints[l]
        a, b = np.cos(np.pi * s / 2), np.sin(np.pi * s / 2)
        return sign * delta * (a * np.outer(u, u) + b * np.outer(v, v))

    return HamiltonianPath(
        segment, 2**word.n, word.n, delta, "ordered-search",
        TRACK_BOTTOM if lowest else TRACK_TOP,
        info={"word": word, "endpoints": endpoints, "sign": sign},
    )


def apply_gap_profile(path: HamiltonianPath, profile: GapProfile, resolution: int = 257) -> HamiltonianPath:
    """Rescale an ordered-search path pointwise by ``q(r) > 0``."""
    if path.kind != "ordered-search":
        raise ValueError(f"gap profiles apply to ordered-search paths, got {path.kind!r}")
    for r in np.linspace(0.0, 1.0, resolution):
        if not profile(r) > 0:
            raise ValueError(f"gap profile must be positive, q({r:g}) = {profile(r)}")
    base = path

    def segment(l, s):
        return profile(base.to_r(l, s)) * base.at(l, s)

    return HamiltonianPath(
        segment, base.dim, base.n_segments, base.delta, "scaled", base.track,
        seed=base.seed, info={**base.info, "base": base, "profile": profile},
    )


def reparametrized(path: HamiltonianPath, f: Callable[[float], float]) -> HamiltonianPath:
    """Compose every segment with a monotone bijection ``f`` of [0, 1]."""
    base = path

    def segment(l, s):
        return base.at(l, float(np.clip(f(s), 0.0, 1.0)))

    return HamiltonianPath(
        segment, base.dim, base.n_segments, base.delta, base.kind, base.track,
        seed=base.seed, info={**base.info, "reparam_base": base, "reparam": f},
    )


def _top_in_frame(m00, m01, m11):
    """Angle of the top eigenvector of a real symmetric 2x2 matrix."""
    return 0.5 * np.arctan2(2 * m01, m00 - m11)


def _reference(path: HamiltonianPath, l: int, s: float) -> np.ndarray:
    if "reparam" in path.info:
        return _reference(path.info["reparam_base"], l, float(np.clip(path.info["reparam"](s), 0, 1)))
    kind = path.kind
    if kind == "scaled":
        return _reference(path.info["base"], l, s)
    if kind == "clock":
        g = path.info["gammas"]
        return np.cos(np.pi * s / 2) * g[l - 1] + np.sin(np.pi * s / 2) * g[l]
    if kind == "ordered-search":
        u, v = path.info["endpoints"][l - 1], path.info["endpoints"][l]
        u_perp = np.sqrt(2) * v - u
        theta = np.pi * s / 4
        return (np.cos(theta) * u + np.sin(theta) * u_perp).astype(np.complex128)
    if kind == "grover":
        N = path.info["N"]
        target, uniform = path.info["target"], path.info["uniform"]
        a, b = 1 / np.sqrt(N), np.sqrt(1 - 1 / N)
        rest = (uniform - a * target) / b
        m00 = (1 - s) * a * a + s
        m01 = (1 - s) * a * b
        m11 = (1 - s) * b * b
        theta = _top_in_frame(m00, m01, m11)
        return (np.cos(theta) * target + np.sin(theta) * rest).astype(np.complex128)
    raise ValueError(f"no analytic eigenpath for path kind {kind!r}")


def reference_eigenpath(path: HamiltonianPath, r: float, segment: int | None = None) -> np.ndarray:
    """Analytic tracked eigenstate at ``r``.

    ``segment`` selects the segment explicitly, which only matters at a
    breakpoint; both neighbouring segments give the same state there.
    """
    if segment is None:
        l, s = path.locate(r)
    else:
        l, s = segment, r * path.n_segments - segment + 1
    return _reference(path, l, s)
