"""Measurement catalogue: direct imaging, mode sorting, projective bases.

Three measurement families are modeled, each yielding an outcome
distribution with analytic parameter derivatives:

* Direct imaging: intensity binned into pixels of fixed width over
  [-half_range, half_range] plus two tail bins.  For the Gaussian PSF the
  bin probabilities are error-function differences of the two-component
  normal mixture ``p(x) = (psi(x - x1)^2 + psi(x - x2)^2) / 2``.

* Mode sorting (SPADE): projection onto Hermite-Gaussian modes of width
  sigma centered at an alignment point, outcomes q = 0..q_max plus a
  residual bucket.  The displaced-Gaussian overlap has the closed form

      <phi_q | psi(. - X)> = exp(-s^2/(8 sigma^2)) (s/(2 sigma))^q / sqrt(q!)

  with s = X - alignment, so each source contributes a Poissonian mode
  distribution.  A Gauss-Hermite quadrature twin of the same overlap is
  provided as an independent oracle.

* Projective measurement in the model's four-dimensional basis: any
  orthonormal set of four vectors (typically a joint SLD eigenbasis), with
  a fifth complement outcome carrying the remaining probability (zero at
  the true state).

From an outcome distribution the classical Fisher information matrix is

    F_jk = sum_x (dp_x/dtheta_j)(dp_x/dtheta_k) / p_x ,

where projective outcomes with p_x below 1e-12 contribute their
perturbation limit Re <q_x| L_j rho L_k |q_x> instead of the 0/0 ratio.
Normalized information regrets and the incompatibility tradeoff slack

    slack = D1^2 + D2^2 + 2 sqrt(1 - c^2) D1 D2 - c^2   (>= 0)

are assembled by :func:`regret_report`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np
from scipy.special import ndtr

from .errors import (
    AlignmentOutOfRange,
    DomainError,
    FimExceedsQfi,
    QuadratureError,
    ShapeError,
)
from .gauge import JointBasis
from .psf import GaussianPsf, PsfSpec, SceneParams
from .state import QfiReport, QuantumModel

#: outcomes with probability at or below this use the zero-probability limit
PROBABILITY_FLOOR = 1e-12

#: mode-sorter alignment farther than this many sigma from the centroid is rejected
ALIGNMENT_RANGE_SIGMAS = 6.0


@dataclass(frozen=True)
class DirectImaging:
    """Pixelated intensity measurement on [-half_range, half_range]."""

    pixel_width: float
    half_range: float

    def __post_init__(self):
        if not self.pixel_width > 0.0:
            raise DomainError(f"pixel_width must be positive, got {self.pixel_width}")
        if not self.half_range > 0.0:
            raise DomainError(f"half_range must be positive, got {self.half_range}")

    def edges(self) -> np.ndarray:
        n = max(1, int(round(2.0 * self.half_range / self.pixel_width)))
        return np.linspace(-self.half_range, self.half_range, n + 1)


@dataclass(frozen=True)
class Spade:
    """Hermite-Gaussian mode sorter centered at ``alignment``, modes 0..q_max."""

    alignment: float
    q_max: int = 20

    def __post_init__(self):
        if self.q_max < 2:
            raise DomainError(f"q_max must be >= 2, got {self.q_max}")


@dataclass(frozen=True, eq=False)
class ProjectiveE:
    """Projective measurement given by orthonormal columns in the e-basis."""

    vectors: np.ndarray

    def __post_init__(self):
        if isinstance(self.vectors, JointBasis):
            object.__setattr__(self, "vectors", self.vectors.vectors)
        v = np.asarray(self.vectors, dtype=float)
        object.__setattr__(self, "vectors", v)
        if v.shape != (4, 4):
            raise ShapeError(f"projective basis must be 4x4, got {v.shape}")
        if np.abs(v.T @ v - np.eye(4)).max() > 1e-12:
            raise ShapeError("projective basis columns are not orthonormal within 1e-12")


PovmSpec = Union[DirectImaging, Spade, ProjectiveE]


@dataclass(eq=False)
class OutcomeDistribution:
    """Outcome probabilities with derivatives in (theta1, theta2).

    ``limit_terms`` (projective measurements only) holds per-outcome 2x2
    matrices Re <q|L_j rho L_k|q> used for zero-probability outcomes in
    :func:`classical_fim`.
    """

    probs: np.ndarray
    dp1: np.ndarray
    dp2: np.ndarray
    limit_terms: np.ndarray | None = None

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        if not np.all(np.isfinite(p)):
            raise QuadratureError("non-finite outcome probabilities")
        if p.min() < -1e-14:
            raise QuadratureError(f"probability {p.min()!r} below -1e-14")
        self.probs = np.maximum(p, 0.0)
        self.dp1 = np.asarray(self.dp1, dtype=float)
        self.dp2 = np.asarray(self.dp2, dtype=float)
        if abs(self.probs.sum() - 1.0) > 1e-10:
            raise QuadratureError(f"probabilities sum to {self.probs.sum()!r}, not 1")
        for dp in (self.dp1, self.dp2):
            if abs(dp.sum()) > 1e-10:
                raise QuadratureError(f"derivative sum {dp.sum()!r} not 0")


def _require_gaussian(psf: PsfSpec, what: str) -> GaussianPsf:
    if not isinstance(psf, GaussianPsf):
        raise DomainError(f"{what} outcome models are implemented for Gaussian PSFs only")
    return psf


def _direct_terms(povm: DirectImaging, sigma: float, x1, x2):
    """Bin probabilities and their dX derivatives, broadcast over sources."""
    edges = povm.edges()

    def bins_for(center):
        center = np.asarray(center, dtype=float)[..., None]
        cdf = ndtr((edges - center) / sigma)
        cdf = np.concatenate(
            [np.zeros_like(cdf[..., :1]), cdf, np.ones_like(cdf[..., :1])], axis=-1
        )
        pdf = np.exp(-((edges - center) ** 2) / (2.0 * sigma**2)) / math.sqrt(
            2.0 * math.pi * sigma**2
        )
        pdf = np.concatenate(
            [np.zeros_like(pdf[..., :1]), pdf, np.zeros_like(pdf[..., :1])], axis=-1
        )
        return np.diff(cdf, axis=-1), -np.diff(pdf, axis=-1)

    p_a, dx_a = bins_for(x1)
    p_b, dx_b = bins_for(x2)
    probs = 0.5 * (p_a + p_b)
    dp_x1 = 0.5 * dx_a
    dp_x2 = 0.5 * dx_b
    return probs, dp_x1, dp_x2


def spade_amplitude(x_source, alignment: float, sigma: float, q: np.ndarray):
    """Closed-form mode overlap <phi_q | psi(. - X)> and its d/dX derivative."""
    s = np.asarray(x_source, dtype=float)[..., None] - alignment
    q = np.asarray(q)
    fact = np.array([math.factorial(int(m)) for m in q.ravel()], dtype=float).reshape(q.shape)
    envelope = np.exp(-(s**2) / (8.0 * sigma**2))
    halfwidth = 2.0 * sigma
    amp = envelope * (s / halfwidth) ** q / np.sqrt(fact)
    poly = np.where(q == 0, 0.0, q * s ** np.maximum(q - 1, 0)) / halfwidth**q
    poly = poly - s ** (q + 1) / (halfwidth**q * 4.0 * sigma**2)
    damp = envelope * poly / np.sqrt(fact)
    return amp, damp


def spade_amplitude_quadrature(
    x_source: float, alignment: float, sigma: float, q: int, order: int = 120
) -> float:
    """Gauss-Hermite evaluation of the same mode overlap; oracle for
    :func:`spade_amplitude`."""
    nodes, weights = np.polynomial.hermite.hermgauss(order)
    mid = 0.5 * (alignment + x_source)
    x = sigma * math.sqrt(2.0) * nodes + mid
    u = (x - alignment) / (sigma * math.sqrt(2.0))
    herm = np.polynomial.hermite.hermval(u, [0.0] * q + [1.0])
    mode_poly = herm / math.sqrt(2.0**q * math.factorial(q))
    norm = (2.0 * math.pi * sigma**2) ** (-0.5)
    # both Gaussian envelopes absorbed into the Hermite weight exp(-u^2)
    residual = math.exp(-((x_source - alignment) ** 2) / (8.0 * sigma**2))
    return float(norm * residual * sigma * math.sqrt(2.0) * (weights @ mode_poly))


def _spade_terms(povm: Spade, sigma: float, x1, x2):
    q = np.arange(povm.q_max + 1)
    amp_a, damp_a = spade_amplitude(x1, povm.alignment, sigma, q)
    amp_b, damp_b = spade_amplitude(x2, povm.alignment, sigma, q)
    probs = 0.5 * (amp_a**2 + amp_b**2)
    dp_x1 = amp_a * damp_a
    dp_x2 = amp_b * damp_b
    # residual bucket completes the POVM
    probs = np.concatenate([probs, 1.0 - probs.sum(axis=-1, keepdims=True)], axis=-1)
    dp_x1 = np.concatenate([dp_x1, -dp_x1.sum(axis=-1, keepdims=True)], axis=-1)
    dp_x2 = np.concatenate([dp_x2, -dp_x2.sum(axis=-1, keepdims=True)], axis=-1)
    return probs, dp_x1, dp_x2


def outcome_distribution(
    povm: PovmSpec, psf: PsfSpec, scene: SceneParams, model: QuantumModel
) -> OutcomeDistribution:
    """Born-rule outcome probabilities and theta-derivatives at the true scene."""
    if isinstance(povm, ProjectiveE):
        v = povm.vectors
        probs = np.einsum("ij,ik,kj->j", v, model.rho, v)
        dp1 = np.einsum("ij,ik,kj->j", v, model.drho1, v)
        dp2 = np.einsum("ij,ik,kj->j", v, model.drho2, v)
        limit = np.empty((5, 2, 2))
        for j in range(4):
            col = v[:, j]
            l1q = model.L1 @ col
            l2q = model.L2 @ col
            limit[j, 0, 0] = l1q @ model.rho @ l1q
            limit[j, 1, 1] = l2q @ model.rho @ l2q
            limit[j, 0, 1] = limit[j, 1, 0] = l1q @ model.rho @ l2q
        limit[4] = 0.0  # complement projector vanishes on the 4-d span
        probs = np.append(probs, 1.0 - probs.sum())
        dp1 = np.append(dp1, -dp1.sum())
        dp2 = np.append(dp2, -dp2.sum())
        return OutcomeDistribution(probs, dp1, dp2, limit_terms=limit)

    if isinstance(povm, DirectImaging):
        gaussian = _require_gaussian(psf, "direct-imaging")
        if povm.half_range < 4.0 * gaussian.sigma:
            raise DomainError(
                f"half_range {povm.half_range} below 4 sigma = {4.0 * gaussian.sigma}"
            )
        probs, dp_x1, dp_x2 = _direct_terms(povm, gaussian.sigma, scene.x1, scene.x2)
    elif isinstance(povm, Spade):
        gaussian = _require_gaussian(psf, "mode-sorter")
        if abs(povm.alignment - scene.theta1) > ALIGNMENT_RANGE_SIGMAS * gaussian.sigma:
            raise AlignmentOutOfRange(
                f"alignment {povm.alignment} is more than {ALIGNMENT_RANGE_SIGMAS} sigma "
                f"from the centroid {scene.theta1}"
            )
        probs, dp_x1, dp_x2 = _spade_terms(povm, gaussian.sigma, scene.x1, scene.x2)
    else:
        raise DomainError(f"unknown POVM specification {povm!r}")

    # chain rule from source positions to (centroid, separation)
    dp1 = dp_x1 + dp_x2
    dp2 = 0.5 * (dp_x2 - dp_x1)
    return OutcomeDistribution(probs, dp1, dp2)


def classical_fim(
    dist: OutcomeDistribution, zero_prob_terms: np.ndarray | None = None
) -> np.ndarray:
    """Classical Fisher information matrix of an outcome distribution.

    ``zero_prob_terms`` (default: the distribution's own ``limit_terms``)
    supplies the limit contribution for outcomes with p <= 1e-12; outcomes
    with no such term contribute zero there.
    """
    terms = zero_prob_terms if zero_prob_terms is not None else dist.limit_terms
    fim = np.zeros((2, 2))
    live = dist.probs > PROBABILITY_FLOOR
    grads = np.stack([dist.dp1, dist.dp2], axis=-1)
    fim += np.einsum("x,xj,xk->jk", 1.0 / dist.probs[live], grads[live], grads[live])
    if terms is not None:
        dead = ~live
        if dead.any():
            fim += np.asarray(terms)[dead].sum(axis=0)
    return fim


@dataclass(frozen=True, eq=False)
class RegretReport:
    """Classical-vs-quantum information accounting for one measurement."""

    fim: np.ndarray
    qfi: np.ndarray
    delta1: float
    delta2: float
    c: float
    irtr_slack: float


def regret_report(fim: np.ndarray, qfi_report: QfiReport) -> RegretReport:
    """Normalized information regrets and the tradeoff-relation slack.

    Raises :class:`FimExceedsQfi` when a classical diagonal entry exceeds
    its quantum bound by more than 1e-8 (absolute) or the matrix ordering
    F <= QFI fails at the same tolerance.
    """
    fim = np.asarray(fim, dtype=float)
    qfi = qfi_report.qfi
    deltas = []
    for j in range(2):
        gap = qfi[j, j] - fim[j, j]
        if gap < -1e-8:
            raise FimExceedsQfi(
                f"classical information {fim[j, j]!r} exceeds quantum bound {qfi[j, j]!r}"
            )
        radicand = gap / qfi[j, j]
        if radicand < 0.0:
            radicand = 0.0
        deltas.append(math.sqrt(radicand))
    if np.linalg.eigvalsh(qfi - fim).min() < -1e-8:
        raise FimExceedsQfi("matrix ordering F <= QFI violated beyond 1e-8")
    d1, d2 = deltas
    c = qfi_report.c
    slack = d1**2 + d2**2 + 2.0 * math.sqrt(max(1.0 - c**2, 0.0)) * d1 * d2 - c**2
    return RegretReport(fim=fim, qfi=qfi, delta1=d1, delta2=d2, c=c, irtr_slack=slack)


# ---------------------------------------------------------------------------
# Frozen-measurement probability models (for likelihood fitting)
# ---------------------------------------------------------------------------

def _e_basis_overlaps(psf: GaussianPsf, anchor: SceneParams, model: QuantumModel):
    """Closed-form overlaps <e_k | psi(. - X)> of the anchor-scene basis."""
    ov = model.overlaps
    sigma2 = psf.sigma**2
    sq1m = math.sqrt(1.0 - ov.delta)
    sq1p = math.sqrt(1.0 + ov.delta)

    def overlaps(x_source):
        shift_a = np.asarray(x_source, dtype=float) - anchor.x1
        shift_b = np.asarray(x_source, dtype=float) - anchor.x2
        g_a = np.exp(-(shift_a**2) / (8.0 * sigma2))
        g_b = np.exp(-(shift_b**2) / (8.0 * sigma2))
        # <d_a | psi(. - X)> = (X - a)/(4 sigma^2) * g(X - a)
        t_a = shift_a / (4.0 * sigma2) * g_a
        t_b = shift_b / (4.0 * sigma2) * g_b
        o1 = (g_a - g_b) / (math.sqrt(2.0) * sq1m)
        o2 = (g_a + g_b) / (math.sqrt(2.0) * sq1p)
        o3 = ((t_a + t_b) / math.sqrt(2.0) - (ov.gamma / sq1m) * o1) / ov.eta3
        o4 = ((t_a - t_b) / math.sqrt(2.0) + (ov.gamma / sq1p) * o2) / ov.eta4
        return np.stack([o1, o2, o3, o4], axis=-1)

    return overlaps


def probability_model(
    povm: PovmSpec, psf: PsfSpec, anchor: SceneParams, model: QuantumModel
) -> Callable[[np.ndarray, np.ndarray], np.ndarray]:
    """Outcome probabilities as a function of trial (theta1, theta2).

    The measurement itself stays frozen at the ``anchor`` scene (bins, mode
    alignment, projective basis); only the state parameters vary.  Returns
    a callable broadcasting over arrays of candidate parameters.
    """
    if isinstance(povm, ProjectiveE):
        gaussian = _require_gaussian(psf, "projective likelihood")
        basis_overlaps = _e_basis_overlaps(gaussian, anchor, model)
        vectors = povm.vectors

        def probs(theta1, theta2):
            theta1 = np.asarray(theta1, dtype=float)
            theta2 = np.asarray(theta2, dtype=float)
            amp_a = basis_overlaps(theta1 - theta2 / 2.0) @ vectors
            amp_b = basis_overlaps(theta1 + theta2 / 2.0) @ vectors
            p = 0.5 * (amp_a**2 + amp_b**2)
            rest = np.clip(1.0 - p.sum(axis=-1, keepdims=True), 0.0, None)
            return np.concatenate([p, rest], axis=-1)

        return probs

    if isinstance(povm, DirectImaging):
        gaussian = _require_gaussian(psf, "direct-imaging likelihood")

        def probs(theta1, theta2):
            theta1 = np.asarray(theta1, dtype=float)
            theta2 = np.asarray(theta2, dtype=float)
            p, _, _ = _direct_terms(povm, gaussian.sigma,
                                    theta1 - theta2 / 2.0, theta1 + theta2 / 2.0)
            return p

        return probs

    if isinstance(povm, Spade):
        gaussian = _require_gaussian(psf, "mode-sorter likelihood")

        def probs(theta1, theta2):
            theta1 = np.asarray(theta1, dtype=float)
            theta2 = np.asarray(theta2, dtype=float)
            p, _, _ = _spade_terms(povm, gaussian.sigma,
                                   theta1 - theta2 / 2.0, theta1 + theta2 / 2.0)
            return np.clip(p, 0.0, None)

        return probs

    raise DomainError(f"unknown POVM specification {povm!r}")
