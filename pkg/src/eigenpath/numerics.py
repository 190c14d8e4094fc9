"""Dense complex linear algebra: states, Hermitian operators, spectra, propagation."""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
import scipy.linalg as sla

__all__ = [
    "Tolerances",
    "DEFAULT_TOLERANCES",
    "HermiticityError",
    "SpectralDecomposition",
    "as_state",
    "check_hermitian",
    "hermitian_eigendecomposition",
    "operator_norm",
    "propagate",
    "fidelity",
    "basis_state",
    "plus_state",
    "kron_all",
]


@dataclass(frozen=True)
class Tolerances:
    """Numerical tolerances shared across the package.

    Every function that checks an invariant accepts a ``tol`` argument so
    that tests and experiments can pin their own values.
    """

    hermitian: float = 1e-12
    normalization: float = 1e-10
    dense_cutoff: int = 64
    krylov_dim: int = 30
    krylov_residual: float = 1e-12
    norm_drift: float = 1e-9


DEFAULT_TOLERANCES = Tolerances()


class HermiticityError(ValueError):
    """Raised when an operator fails the Hermiticity check."""

    def __init__(self, deviation: float):
        super().__init__(f"operator is not Hermitian: max |H - H^dagger| = {deviation:.3e}")
        self.deviation = deviation


class SpectralDecomposition(NamedTuple):
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T


def as_state(vec, tol: Tolerances = DEFAULT_TOLERANCES) -> np.ndarray:
    """Return ``vec`` as a complex128 array after checking it is a unit vector."""
    psi = np.asarray(vec, dtype=np.complex128)
    if psi.ndim != 1 or psi.size < 2:
        raise ValueError(f"state must be a 1-d vector of length >= 2, got shape {psi.shape}")
    norm = np.linalg.norm(psi)
    if abs(norm - 1.0) > tol.normalization:
        raise ValueError(f"state is not normalized: |psi| = {norm!r}")
    return psi


def check_hermitian(h, tol: Tolerances = DEFAULT_TOLERANCES) -> np.ndarray:
    h = np.asarray(h)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise ValueError(f"operator must be square, got shape {h.shape}")
    if not np.all(np.isfinite(h)):
        raise ValueError("operator has non-finite entries")
    deviation = float(np.max(np.abs(h - h.conj().T))) if h.size else 0.0
    scale = max(1.0, float(np.max(np.abs(h)))) if h.size else 1.0
    if deviation > tol.hermitian * scale:
        raise HermiticityError(deviation)
    return h


def hermitian_eigendecomposition(h, tol: Tolerances = DEFAULT_TOLERANCES) -> SpectralDecomposition:
    """Full eigendecomposition of a Hermitian matrix, eigenvalues ascending."""
    h = check_hermitian(h, tol)
    w, v = np.linalg.eigh(h)
    return SpectralDecomposition(w, v)


def operator_norm(a) -> float:
    """Largest singular value of ``a``."""
    a = np.asarray(a)
    if a.ndim != 2:
        raise ValueError(f"expected a matrix, got shape {a.shape}")
    if a.size == 0:
        return 0.0
    if a.shape[0] == a.shape[1] and np.array_equal(a, a.conj().T):
        return float(np.max(np.abs(np.linalg.eigvalsh(a))))
    return float(np.linalg.norm(a, 2))


def fidelity(psi, chi) -> float:
    """Squared overlap ``|<psi|chi>|^2``."""
    psi = np.asarray(psi)
    chi = np.asarray(chi)
    if psi.shape != chi.shape:
        raise ValueError(f"dimension mismatch: {psi.shape} vs {chi.shape}")
    return float(min(1.0, abs(np.vdot(psi, chi)) ** 2))


def _dense_expm_action(h, tau, psi):
    w, v = np.linalg.eigh(h)
    return v @ (np.exp(-1j * tau * w) * (v.conj().T @ psi))


def _lanczos_step(h, tau, psi, m_max):
    """One Krylov approximation of exp(-i h tau) psi; returns (result, error estimate)."""
    beta0 = np.linalg.norm(psi)
    d = psi.shape[0]
    m_max = min(m_max, d)
    basis = np.zeros((d, m_max + 1), dtype=np.complex128)
    alpha = np.zeros(m_max)
    beta = np.zeros(m_max)
    basis[:, 0] = psi / beta0
    scale = max(1.0, float(np.max(np.abs(h))) * d)
    m = m_max
    for j in range(m_max):
        w = h @ basis[:, j]
        alpha[j] = np.vdot(basis[:, j], w).real
        # full reorthogonalisation; cheap for m <= 30
        w -= basis[:, : j + 1] @ (basis[:, : j + 1].conj().T @ w)
        w -= basis[:, : j + 1] @ (basis[:, : j + 1].conj().T @ w)
        beta[j] = np.linalg.norm(w)
        if beta[j] < 1e-13 * scale:
            m = j + 1
            break
        basis[:, j + 1] = w / beta[j]
    else:
        m = m_max
    if m == 1:
        evals = alpha[:1]
        evecs = np.ones((1, 1))
    else:
        evals, evecs = sla.eigh_tridiagonal(alpha[:m], beta[: m - 1])
    coeff = evecs @ (np.exp(-1j * tau * evals) * evecs[0].conj())
    breakdown = beta[m - 1] < 1e-13 * scale
    err = 0.0 if breakdown else beta0 * beta[m - 1] * abs(coeff[m - 1])
    return beta0 * (basis[:, :m] @ coeff), err


def _krylov_expm_action(h, tau, psi, m_max, residual):
    out = psi
    remaining = tau
    step = tau
    while remaining > 0:
        step = min(step, remaining)
        trial, err = _lanczos_step(h, step, out, m_max)
        if err > residual and step > tau * 1e-12:
            step /= 2
            continue
        out = trial
        remaining -= step
        step *= 2
    return out


def _propagate_unchecked(h, tau, psi, tol: Tolerances = DEFAULT_TOLERANCES):
    if tau == 0:
        return np.array(psi, dtype=np.complex128)
    if h.shape[0] <= tol.dense_cutoff:
        return _dense_expm_action(h, tau, psi)
    return _krylov_expm_action(h, tau, psi, tol.krylov_dim, tol.krylov_residual)


def propagate(h, tau: float, psi, tol: Tolerances = DEFAULT_TOLERANCES) -> np.ndarray:
    """Apply ``exp(-i h tau)`` to ``psi``.

    Dense spectral exponentiation is used up to ``tol.dense_cutoff``
    dimensions and a Lanczos exponential action above it.
    """
    if tau < 0:
        raise ValueError(f"propagation time must be >= 0, got {tau}")
    h = check_hermitian(h, tol)
    psi = np.asarray(psi, dtype=np.complex128)
    if psi.shape != (h.shape[0],):
        raise ValueError(f"state of shape {psi.shape} does not match operator {h.shape}")
    return _propagate_unchecked(h, tau, psi, tol)


def basis_state(index: int, dim: int) -> np.ndarray:
    psi = np.zeros(dim, dtype=np.complex128)
    psi[index] = 1.0
    return psi


def plus_state() -> np.ndarray:
    return np.array([1.0, 1.0], dtype=np.complex128) / np.sqrt(2.0)


def kron_all(factors) -> np.ndarray:
    out = np.ones(1, dtype=np.complex128)
    for f in factors:
        out = np.kron(out, f)
    return out
