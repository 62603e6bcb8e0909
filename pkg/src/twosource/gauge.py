"""Gauge freedom of the logarithmic derivatives and the joint measurement basis.

The SLD equation ``drho = (L rho + rho L)/2`` determines an SLD only up to a
Hermitian block acting inside the kernel of rho.  Splitting the four
dimensional space into the support S = span{e1, e2} and kernel
K = span{e3, e4} of rho, every valid SLD for parameter j has the block form

    L_j = [[A_j,   B_j],
           [B_j^T, K_j]]

with A_j, B_j fixed by the model and K_j a free 2x2 symmetric "gauge"
block.  The canonical SLDs have K_j = 0.  A pair of gauged SLDs commutes
exactly when three block conditions hold:

    (C0)  A1 A2 - A2 A1 = B2 B1^T - B1 B2^T        (gauge independent)
    (C1)  B1 K2 - B2 K1 = A2 B1 - A1 B2
    (C2)  K1 K2 - K2 K1 = B2^T B1 - B1^T B2

(C0) is a necessary condition on the model itself; for the Gaussian
two-source model its residual is proportional to |beta| and vanishes only at
the Rayleigh separation.  Expanding K1 and K2 over the identity and the
three Pauli matrices turns (C1) into four real linear equations and (C2)
into three real equations that are bilinear in the unknowns: a system of 7
equations in 8 unknowns with infinitely many solutions.

Two solvers are provided:

* :func:`closed_form_gauge` evaluates the explicit solution

      K1 = (2 gamma/(1 - delta^2) - 2 kappa/gamma) s0 - (2 delta gamma/(1 - delta^2)) s3
      K2 = (eta3 eta4 / gamma) s1 + ((1 + delta^2) gamma/(1 - delta^2)) s3

  and verifies the (C1)/(C2) residuals before returning.

* :func:`solve_gauge_least_norm` pins the trace part of K1 (from the closed
  form when the caller has one, else zero), solves the linear (C1) system
  by least-norm pseudo-inverse, then runs one fixed-point refinement pass:
  (C2) becomes linear in K2 once K1 is substituted, so the stacked
  (C1)+(C2) system is re-solved and the true residuals are checked a
  posteriori.  The two solvers generally return *different* gauge pairs;
  both must assemble into commuting SLDs.

The common eigenbasis of a commuting pair is extracted by diagonalizing the
single matrix ``L1' + t L2'`` with a fixed irrational mixing weight
t = (sqrt(5) - 1)/2, which breaks accidental degeneracies deterministically;
any residually degenerate eigenspace is refined against L2' alone.  Column
order and signs follow fixed conventions so repeated runs are bit-identical.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DegeneracyUnresolved,
    DomainError,
    GaugeInvalid,
    NoSolution,
    NotCommuting,
    ShapeError,
)
from .psf import OverlapSet, PsfSpec, SceneParams
from .state import basis_wavefunction, canonical_slds, require_symmetric4

#: identity plus Pauli matrices; sigma_2 is the only complex one
PAULI = (
    np.eye(2, dtype=complex),
    np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex),
    np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex),
    np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex),
)

#: accept a gauge pair when its condition residuals are below this (times scale)
GAUGE_RESIDUAL_TOLERANCE = 1e-8

#: eigenvalue gap below which M(t) eigenspaces are treated as degenerate
DEGENERACY_GAP = 1e-9

#: deterministic mixing weight for simultaneous diagonalization
MIXING_WEIGHT = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True, eq=False)
class BlockDecomposition:
    """Support/off-diagonal/kernel blocks of a 4x4 symmetric matrix."""

    a: np.ndarray
    b: np.ndarray
    k: np.ndarray

    def reassemble(self) -> np.ndarray:
        return np.block([[self.a, self.b], [self.b.T, self.k]])


@dataclass(frozen=True)
class PauliVector:
    """Real coefficients of a 2x2 Hermitian matrix over (identity, Pauli)."""

    v0: float
    v1: float
    v2: float
    v3: float

    @classmethod
    def from_matrix(cls, m: np.ndarray) -> "PauliVector":
        m = np.asarray(m, dtype=complex)
        if m.shape != (2, 2):
            raise ShapeError(f"Pauli expansion needs a 2x2 matrix, got {m.shape}")
        scale = max(np.abs(m).max(), 1.0)
        if np.abs(m - m.conj().T).max() > 1e-12 * scale:
            raise ShapeError("Pauli expansion needs a Hermitian matrix")
        coeffs = [0.5 * np.trace(s @ m) for s in PAULI]
        return cls(*(float(c.real) for c in coeffs))

    def to_matrix(self) -> np.ndarray:
        m = sum(v * s for v, s in zip((self.v0, self.v1, self.v2, self.v3), PAULI))
        if abs(self.v2) == 0.0:
            return m.real.copy()
        return m

    def as_array(self) -> np.ndarray:
        return np.array([self.v0, self.v1, self.v2, self.v3])


@dataclass(frozen=True, eq=False)
class GaugePair:
    """A kernel-block pair (K1, K2) with its condition residuals."""

    k1: np.ndarray
    k2: np.ndarray
    source: str  # "closed_form" or "least_norm_solver"
    residual_c1: float
    residual_c2: float


@dataclass(frozen=True, eq=False)
class JointBasis:
    """Common eigenbasis of a commuting SLD pair.

    ``eigenvalues`` has shape (4, 2): column 0 holds the L1' eigenvalue of
    each basis vector, column 1 the L2' eigenvalue.  ``vectors`` is the
    orthogonal 4x4 matrix whose columns are the basis vectors in e-basis
    components.
    """

    eigenvalues: np.ndarray
    vectors: np.ndarray


def decompose_blocks(L: np.ndarray) -> BlockDecomposition:
    """Split a symmetric 4x4 matrix into support/off-diagonal/kernel blocks."""
    L = require_symmetric4(L, "SLD")
    return BlockDecomposition(a=L[:2, :2].copy(), b=L[:2, 2:].copy(), k=L[2:, 2:].copy())


def necessary_condition_residual(d1: BlockDecomposition, d2: BlockDecomposition) -> float:
    """Max-norm residual of the gauge-independent commutation condition (C0)."""
    lhs = d1.a @ d2.a - d2.a @ d1.a
    rhs = d2.b @ d1.b.T - d1.b @ d2.b.T
    return float(np.abs(lhs - rhs).max())


def _condition_residuals(
    d1: BlockDecomposition, d2: BlockDecomposition, k1: np.ndarray, k2: np.ndarray
) -> tuple[float, float]:
    r1 = d1.b @ k2 - d2.b @ k1 - (d2.a @ d1.b - d1.a @ d2.b)
    r2 = k1 @ k2 - k2 @ k1 - (d2.b.T @ d1.b - d1.b.T @ d2.b)
    return float(np.abs(r1).max()), float(np.abs(r2).max())


def _block_scale(d1: BlockDecomposition, d2: BlockDecomposition, *extra: np.ndarray) -> float:
    mats = [d1.a, d1.b, d2.a, d2.b, *extra]
    return max(1.0, *(float(np.abs(m).max()) for m in mats))


def closed_form_gauge(overlaps: OverlapSet) -> GaugePair:
    """The explicit gauge pair in the overlap scalars (divides by gamma).

    Raises :class:`DomainError` when |gamma| <= 1e-12 and
    :class:`GaugeInvalid` when the evaluated pair fails the (C1)/(C2)
    residual check, which happens whenever beta != 0.
    """
    delta, kappa, gamma = overlaps.delta, overlaps.kappa, overlaps.gamma
    if abs(gamma) <= 1e-12:
        raise DomainError(f"closed-form gauge divides by gamma = {gamma!r}")
    one_m_d2 = 1.0 - delta**2
    k1 = PauliVector(
        v0=2.0 * gamma / one_m_d2 - 2.0 * kappa / gamma,
        v1=0.0,
        v2=0.0,
        v3=-2.0 * delta * gamma / one_m_d2,
    ).to_matrix()
    k2 = PauliVector(
        v0=0.0,
        v1=overlaps.eta3 * overlaps.eta4 / gamma,
        v2=0.0,
        v3=(1.0 + delta**2) * gamma / one_m_d2,
    ).to_matrix()
    L1, L2 = canonical_slds(overlaps)
    d1, d2 = decompose_blocks(L1), decompose_blocks(L2)
    res1, res2 = _condition_residuals(d1, d2, k1, k2)
    scale = _block_scale(d1, d2, k1, k2)
    if max(res1, res2) > GAUGE_RESIDUAL_TOLERANCE * scale:
        raise GaugeInvalid(
            f"closed-form gauge fails commutation conditions: "
            f"C1 residual {res1!r}, C2 residual {res2!r}"
        )
    return GaugePair(k1=k1, k2=k2, source="closed_form", residual_c1=res1, residual_c2=res2)


def _c1_system(
    d1: BlockDecomposition, d2: BlockDecomposition, w0: float
) -> tuple[np.ndarray, np.ndarray]:
    """(C1) as real linear rows over x = (w1, w2, w3, u0, u1, u2, u3).

    w are the Pauli coefficients of K1 (trace part w0 pinned and moved to
    the right-hand side), u those of K2.
    """
    rhs_mat = (d2.a @ d1.b - d1.a @ d2.b).astype(complex) + d2.b * w0
    cols = [-d2.b @ PAULI[a] for a in (1, 2, 3)]
    cols += [d1.b @ PAULI[a] for a in (0, 1, 2, 3)]
    m = np.stack([c.reshape(-1) for c in cols], axis=1)
    rows = np.vstack([m.real, m.imag])
    rhs = np.concatenate([rhs_mat.reshape(-1).real, rhs_mat.reshape(-1).imag])
    return rows, rhs


def _c2_system_frozen_k1(
    d1: BlockDecomposition, d2: BlockDecomposition, k1: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """(C2) with K1 substituted: linear rows in u = Pauli coefficients of K2."""
    rhs_mat = (d2.b.T @ d1.b - d1.b.T @ d2.b).astype(complex)
    zeros = np.zeros((2, 2), dtype=complex)
    cols = [zeros, zeros, zeros]  # w1, w2, w3 absent
    cols += [k1 @ PAULI[a] - PAULI[a] @ k1 for a in (0, 1, 2, 3)]
    m = np.stack([c.reshape(-1) for c in cols], axis=1)
    rows = np.vstack([m.real, m.imag])
    rhs = np.concatenate([rhs_mat.reshape(-1).real, rhs_mat.reshape(-1).imag])
    return rows, rhs


def _k_from_solution(x: np.ndarray, w0: float) -> tuple[np.ndarray, np.ndarray]:
    k1 = PauliVector(w0, x[0], x[1], x[2]).to_matrix()
    k2 = PauliVector(x[3], x[4], x[5], x[6]).to_matrix()
    return k1, k2


def solve_gauge_least_norm(
    d1: BlockDecomposition,
    d2: BlockDecomposition,
    v0_k1: float | None = None,
) -> GaugePair:
    """Least-norm gauge pair from the Pauli-coefficient linear system.

    ``v0_k1`` pins the trace part of K1; pass the closed-form value when one
    is available (the deterministic default is 0).  Raises
    :class:`NoSolution` when (C0) fails or the post-solve residuals exceed
    tolerance.
    """
    scale = _block_scale(d1, d2)
    c0 = necessary_condition_residual(d1, d2)
    if c0 > GAUGE_RESIDUAL_TOLERANCE * scale:
        raise NoSolution(
            f"necessary condition residual {c0!r} exceeds "
            f"{GAUGE_RESIDUAL_TOLERANCE * scale!r}; no commuting gauge exists"
        )
    w0 = 0.0 if v0_k1 is None else float(v0_k1)

    rows1, rhs1 = _c1_system(d1, d2, w0)
    x, *_ = np.linalg.lstsq(rows1, rhs1, rcond=None)
    k1_pass1, _ = _k_from_solution(x, w0)

    # one fixed-point refinement: (C2) is linear once K1 is frozen
    rows2, rhs2 = _c2_system_frozen_k1(d1, d2, k1_pass1.astype(complex))
    x, *_ = np.linalg.lstsq(np.vstack([rows1, rows2]), np.concatenate([rhs1, rhs2]), rcond=None)

    # the imaginary parts of (C1) force the sigma_2 components to zero
    if max(abs(x[1]), abs(x[5])) > 1e-10 * scale:
        raise NoSolution(f"solver produced non-real gauge blocks: v2 = {x[1]!r}, {x[5]!r}")
    x[1] = 0.0
    x[5] = 0.0
    k1, k2 = _k_from_solution(x, w0)
    res1, res2 = _condition_residuals(d1, d2, k1, k2)
    if max(res1, res2) > GAUGE_RESIDUAL_TOLERANCE * scale:
        raise NoSolution(
            f"gauge residuals after refinement too large: C1 {res1!r}, C2 {res2!r}"
        )
    return GaugePair(k1=k1, k2=k2, source="least_norm_solver",
                     residual_c1=res1, residual_c2=res2)


def assemble_sld(d: BlockDecomposition, k: np.ndarray) -> np.ndarray:
    """Replace the kernel block of a decomposed SLD; A and B are untouched."""
    k = np.asarray(k, dtype=float)
    if k.shape != (2, 2):
        raise ShapeError(f"kernel block must be 2x2, got {k.shape}")
    if np.abs(k - k.T).max() > 1e-12 * max(1.0, np.abs(k).max()):
        raise ShapeError("kernel block must be symmetric")
    return BlockDecomposition(a=d.a, b=d.b, k=k).reassemble()


def joint_eigenbasis(L1p: np.ndarray, L2p: np.ndarray, tol: float = 1e-10) -> JointBasis:
    """Simultaneously diagonalize a commuting symmetric pair.

    Columns are ordered by descending L1' eigenvalue (ties by descending L2'
    eigenvalue) and signed so the largest-magnitude component of each column
    is positive, making the output deterministic.
    """
    L1p = require_symmetric4(L1p, "L1'")
    L2p = require_symmetric4(L2p, "L2'")
    scale = max(np.abs(L1p).max(), np.abs(L2p).max(), 1.0)
    comm = np.abs(L1p @ L2p - L2p @ L1p).max()
    if comm > tol * scale:
        raise NotCommuting(f"commutator max-norm {comm!r} exceeds {tol * scale!r}")

    mixed = L1p + MIXING_WEIGHT * L2p
    evals, vecs = np.linalg.eigh(mixed)

    # refine any near-degenerate eigenspace of the mixed matrix against L2'
    gap = DEGENERACY_GAP * max(1.0, np.abs(evals).max())
    start = 0
    while start < 4:
        stop = start + 1
        while stop < 4 and evals[stop] - evals[stop - 1] < gap:
            stop += 1
        if stop - start > 1:
            sub = vecs[:, start:stop]
            _, rot = np.linalg.eigh(sub.T @ L2p @ sub)
            vecs[:, start:stop] = sub @ rot
        start = stop

    lam1 = np.einsum("ij,ik,kj->j", vecs, L1p, vecs)
    lam2 = np.einsum("ij,ik,kj->j", vecs, L2p, vecs)
    off1 = np.abs(vecs.T @ L1p @ vecs - np.diag(lam1)).max()
    off2 = np.abs(vecs.T @ L2p @ vecs - np.diag(lam2)).max()
    if max(off1, off2) > tol * scale:
        raise DegeneracyUnresolved(
            f"off-diagonal residuals {off1!r}, {off2!r} exceed {tol * scale!r}"
        )

    order = np.lexsort((-lam2, -lam1))
    vecs = vecs[:, order]
    lam1, lam2 = lam1[order], lam2[order]
    for j in range(4):
        if vecs[np.argmax(np.abs(vecs[:, j])), j] < 0.0:
            vecs[:, j] = -vecs[:, j]
    return JointBasis(eigenvalues=np.column_stack([lam1, lam2]), vectors=vecs)


def joint_basis_wavefunction(basis: JointBasis, psf: PsfSpec, scene: SceneParams, j: int, x):
    """Position representation q_j(x) = sum_k phi_jk e_k(x), j in 1..4."""
    if j not in (1, 2, 3, 4):
        raise DomainError(f"basis index must be 1..4, got {j}")
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x, dtype=float)
    for k in range(4):
        coeff = basis.vectors[k, j - 1]
        if coeff != 0.0:
            out = out + coeff * basis_wavefunction(psf, scene, k + 1, x)
    return out if out.ndim else float(out)


def gauge_diagnostics(
    d1: BlockDecomposition, d2: BlockDecomposition, pair: GaugePair | None = None
) -> dict:
    """Structured dump of blocks, Pauli coefficients and residuals.

    The schema is documented in the README; it is diagnostic output, not a
    bit-stable contract.
    """
    out = {
        "blocks": {
            "A1": d1.a.tolist(), "B1": d1.b.tolist(), "K1_canonical": d1.k.tolist(),
            "A2": d2.a.tolist(), "B2": d2.b.tolist(), "K2_canonical": d2.k.tolist(),
        },
        "equation_count": {"C1": 4, "C2": 3, "total": 7, "unknowns": 8},
        "residuals": {"C0": necessary_condition_residual(d1, d2)},
    }
    if pair is not None:
        out["gauge"] = {
            "source": pair.source,
            "K1_pauli": PauliVector.from_matrix(pair.k1).as_array().tolist(),
            "K2_pauli": PauliVector.from_matrix(pair.k2).as_array().tolist(),
        }
        out["residuals"]["C1"] = pair.residual_c1
        out["residuals"]["C2"] = pair.residual_c2
    return out
