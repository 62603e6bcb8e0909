"""Four-dimensional matrix model of the two-source one-photon state.

The one-photon density operator and its parameter derivatives live in the
span of four orthonormal vectors built from the shifted PSFs and their
derivatives:

    e1 = (psi1 - psi2) / sqrt(2 (1 - delta))
    e2 = (psi1 + psi2) / sqrt(2 (1 + delta))
    e3 = [ (d1 + d2)/sqrt(2) - (gamma / sqrt(1 - delta)) e1 ] / eta3
    e4 = [ (d1 - d2)/sqrt(2) + (gamma / sqrt(1 + delta)) e2 ] / eta4

where psi_j(x) = psi(x - X_j) and d_j is the derivative of psi_j with
respect to its own source position, i.e. d_j(x) = -psi'(x - X_j).

In this basis the state is diagonal,

    rho = diag((1 - delta)/2, (1 + delta)/2, 0, 0),

and the canonical symmetric logarithmic derivatives L1 (centroid) and L2
(separation) are explicit real symmetric 4x4 matrices in the overlap
scalars.  The derivative matrices are defined through the SLD equation
``drho_j = (L_j rho + rho L_j) / 2``.

Quantum Fisher information entries follow as ``F_jk = tr(rho L_j L_k)``;
for this model F11 = 4 (kappa - gamma^2), F22 = kappa and F12 = 0.  The
incompatibility coefficient is evaluated two independent ways: from its
trace-norm definition

    c = tr| sqrt(rho) [L1, L2] sqrt(rho) | / (2 sqrt(F11 F22))

and from the closed form c^2 = beta^2 / (kappa (kappa - gamma^2)); the
report records the discrepancy between the two.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ShapeError, SingularBasis
from .psf import (
    OverlapSet,
    PsfSpec,
    SceneParams,
    compute_overlaps,
    psf_derivative,
    psf_value,
)

#: relative symmetry tolerance for 4x4 model matrices
SYMMETRY_TOLERANCE = 1e-14


def require_symmetric4(m: np.ndarray, name: str = "matrix") -> np.ndarray:
    """Validate a real symmetric 4x4 matrix, returning it as float64."""
    m = np.asarray(m, dtype=float)
    if m.shape != (4, 4):
        raise ShapeError(f"{name} must be 4x4, got shape {m.shape}")
    scale = max(np.abs(m).max(), 1.0)
    if np.abs(m - m.T).max() > SYMMETRY_TOLERANCE * scale:
        raise ShapeError(f"{name} is not symmetric within {SYMMETRY_TOLERANCE} relative")
    return m


@dataclass(frozen=True, eq=False)
class QuantumModel:
    """Density matrix, canonical SLDs and rho-derivatives in the e-basis."""

    scene: SceneParams
    overlaps: OverlapSet
    rho: np.ndarray
    L1: np.ndarray
    L2: np.ndarray
    drho1: np.ndarray
    drho2: np.ndarray


@dataclass(frozen=True, eq=False)
class QfiReport:
    """Quantum Fisher information matrix and incompatibility coefficient.

    ``c`` comes from the trace-norm definition; ``c_closed_form`` from the
    beta/kappa/gamma closed form, with ``c_discrepancy`` their absolute
    difference.
    """

    qfi: np.ndarray
    c: float
    c_closed_form: float
    c_discrepancy: float


def canonical_slds(ov: OverlapSet) -> tuple[np.ndarray, np.ndarray]:
    """Canonical SLD matrices for centroid (L1) and separation (L2)."""
    delta, gamma, eta3, eta4 = ov.delta, ov.gamma, ov.eta3, ov.eta4
    sq1m = math.sqrt(1.0 - delta)
    sq1p = math.sqrt(1.0 + delta)
    L1 = np.zeros((4, 4))
    L1[0, 1] = L1[1, 0] = 2.0 * gamma * delta / (sq1m * sq1p)
    L1[0, 3] = L1[3, 0] = 2.0 * eta4 / sq1m
    L1[1, 2] = L1[2, 1] = 2.0 * eta3 / sq1p
    L2 = np.zeros((4, 4))
    L2[0, 0] = -gamma / (1.0 - delta)
    L2[1, 1] = gamma / (1.0 + delta)
    L2[0, 2] = L2[2, 0] = -eta3 / sq1m
    L2[1, 3] = L2[3, 1] = -eta4 / sq1p
    return L1, L2


def build_model(psf: PsfSpec, scene: SceneParams) -> QuantumModel:
    """Assemble the 4x4 model at a parameter point.

    Raises the overlap-domain errors of :func:`compute_overlaps`, including
    :class:`SingularBasis` when the sources are unresolvably close.
    """
    ov = compute_overlaps(psf, scene.theta2)
    rho = np.diag([(1.0 - ov.delta) / 2.0, (1.0 + ov.delta) / 2.0, 0.0, 0.0])
    L1, L2 = canonical_slds(ov)
    drho1 = 0.5 * (L1 @ rho + rho @ L1)
    drho2 = 0.5 * (L2 @ rho + rho @ L2)
    return QuantumModel(scene=scene, overlaps=ov, rho=rho, L1=L1, L2=L2,
                        drho1=drho1, drho2=drho2)


def qfi_matrix(model: QuantumModel) -> QfiReport:
    """Quantum Fisher information matrix and incompatibility coefficient."""
    rho, L1, L2 = model.rho, model.L1, model.L2
    f11 = float(np.trace(rho @ L1 @ L1))
    f22 = float(np.trace(rho @ L2 @ L2))
    f12 = 0.5 * float(np.trace(rho @ (L1 @ L2 + L2 @ L1)))
    qfi = np.array([[f11, f12], [f12, f22]])
    if f11 <= 0.0 or f22 <= 0.0:
        raise DomainError(f"QFI diagonal must be positive, got {f11}, {f22}")

    sqrt_rho = np.diag(np.sqrt(np.diag(rho)))
    w = sqrt_rho @ (L1 @ L2 - L2 @ L1) @ sqrt_rho
    # rho has rank 2, so only the upper-left 2x2 block of w can be nonzero
    assert np.abs(w[2:, :]).max() < 1e-14 and np.abs(w[:, 2:]).max() < 1e-14
    trace_norm = float(np.linalg.svd(w, compute_uv=False).sum())
    c = trace_norm / (2.0 * math.sqrt(f11 * f22))
    c = min(max(c, 0.0), 1.0)

    ov = model.overlaps
    denom = ov.kappa * (ov.kappa - ov.gamma**2)
    if denom <= 0.0:
        raise DomainError("kappa (kappa - gamma^2) must be positive for the closed-form c")
    c_closed = math.sqrt(ov.beta**2 / denom)
    return QfiReport(qfi=qfi, c=c, c_closed_form=c_closed, c_discrepancy=abs(c - c_closed))


def basis_wavefunction(psf: PsfSpec, scene: SceneParams, k: int, x):
    """Position representation e_k(x) of the k-th basis vector, k in 1..4."""
    if k not in (1, 2, 3, 4):
        raise DomainError(f"basis index must be 1..4, got {k}")
    ov = compute_overlaps(psf, scene.theta2)
    x = np.asarray(x, dtype=float)
    p1 = psf_value(psf, x - scene.x1)
    p2 = psf_value(psf, x - scene.x2)
    e1 = (p1 - p2) / math.sqrt(2.0 * (1.0 - ov.delta))
    if k == 1:
        out = e1
    elif k == 2:
        out = (p1 + p2) / math.sqrt(2.0 * (1.0 + ov.delta))
    else:
        # d_j(x) = d psi(x - X_j) / d X_j = -psi'(x - X_j)
        d1 = -psf_derivative(psf, x - scene.x1)
        d2 = -psf_derivative(psf, x - scene.x2)
        if k == 3:
            if ov.eta3 <= 1e-9:
                raise SingularBasis(f"eta3 = {ov.eta3!r} too small for basis vector e3")
            out = ((d1 + d2) / math.sqrt(2.0)
                   - (ov.gamma / math.sqrt(1.0 - ov.delta)) * e1) / ov.eta3
        else:
            if ov.eta4 <= 1e-9:
                raise SingularBasis(f"eta4 = {ov.eta4!r} too small for basis vector e4")
            e2 = (p1 + p2) / math.sqrt(2.0 * (1.0 + ov.delta))
            out = ((d1 - d2) / math.sqrt(2.0)
                   + (ov.gamma / math.sqrt(1.0 + ov.delta)) * e2) / ov.eta4
    return out if out.ndim else float(out)
