"""Point-spread functions and the two-source overlap integrals.

The imaging model is one-dimensional: each point source at position X
produces the normalized amplitude ``psi(x - X)`` on the image plane.  For a
Gaussian PSF of width sigma,

    psi(x) = (2 pi sigma^2)^(-1/4) exp(-x^2 / (4 sigma^2)),

so that |psi|^2 is the normal density with standard deviation sigma.

Everything downstream is controlled by four overlap integrals of the PSF
with a copy of itself shifted by the source separation s:

    delta = int psi(x) psi(x - s) dx
    kappa = int psi'(x)^2 dx
    gamma = int psi'(x) psi(x - s) dx
    beta  = int psi'(x) psi'(x - s) dx

plus the derived normalization constants

    eta3 = sqrt(kappa + beta - gamma^2 / (1 - delta))
    eta4 = sqrt(kappa - beta - gamma^2 / (1 + delta)).

For the Gaussian PSF all four integrals have closed forms:

    delta = exp(-s^2 / (8 sigma^2))
    kappa = 1 / (4 sigma^2)
    gamma = -(s / (4 sigma^2)) * delta
    beta  = (4 sigma^2 - s^2) / (16 sigma^4) * delta

Note the sign convention: gamma is negative for s > 0.  beta changes sign at
s = 2 sigma, which is the separation this package calls the Rayleigh
distance.  :func:`compute_overlaps_quadrature` evaluates the same integrals
numerically and serves as the independent oracle for the closed forms (and
as the only route for tabulated PSFs).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Union

import numpy as np

from .errors import DomainError, SingularBasis

#: below this, 1 - delta is treated as numerically singular
SINGULAR_DELTA_MARGIN = 1e-12

#: radicands of eta3/eta4 more negative than this reject the PSF data
RADICAND_TOLERANCE = 1e-12


@dataclass(frozen=True)
class GaussianPsf:
    """Gaussian amplitude PSF with intensity standard deviation ``sigma``."""

    sigma: float

    def __post_init__(self):
        if not (self.sigma > 0.0 and math.isfinite(self.sigma)):
            raise DomainError(f"Gaussian PSF width must be positive, got {self.sigma}")


@dataclass(frozen=True, eq=False)
class TabulatedPsf:
    """Real PSF sampled on a monotone grid; linearly interpolated, zero outside.

    The samples must be L2-normalized: the trapezoid estimate of
    ``int psi(x)^2 dx`` has to be within 1e-6 of 1.
    """

    x: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        v = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "values", v)
        if x.ndim != 1 or x.shape != v.shape or x.size < 3:
            raise DomainError("tabulated PSF needs matching 1-d x/value arrays with >= 3 samples")
        if not np.all(np.isfinite(x)) or not np.all(np.isfinite(v)):
            raise DomainError("tabulated PSF contains non-finite samples")
        if np.any(np.diff(x) <= 0):
            raise DomainError("tabulated PSF grid must be strictly increasing")
        norm = np.trapezoid(v * v, x)
        if abs(norm - 1.0) > 1e-6:
            raise DomainError(f"tabulated PSF is not L2-normalized: int psi^2 = {norm!r}")
        # derivative samples for psf_derivative; second-order central differences
        object.__setattr__(self, "_deriv", np.gradient(v, x))

    @classmethod
    def from_file(cls, path: str | Path) -> "TabulatedPsf":
        """Load a two-column whitespace-separated (x, psi) text file.

        Lines starting with '#' are comments.
        """
        rows = []
        for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            parts = stripped.split()
            if len(parts) != 2:
                raise DomainError(f"{path}:{lineno}: expected two columns, got {len(parts)}")
            try:
                rows.append((float(parts[0]), float(parts[1])))
            except ValueError as exc:
                raise DomainError(f"{path}:{lineno}: {exc}") from exc
        if not rows:
            raise DomainError(f"{path}: no data rows")
        arr = np.array(rows, dtype=float)
        return cls(arr[:, 0], arr[:, 1])


PsfSpec = Union[GaussianPsf, TabulatedPsf]


@dataclass(frozen=True)
class SceneParams:
    """Two-source scene: centroid ``theta1`` and separation ``theta2 > 0``.

    The source positions are ``x1 = theta1 - theta2/2`` and
    ``x2 = theta1 + theta2/2``.
    """

    theta1: float
    theta2: float

    def __post_init__(self):
        if not (self.theta2 > 0.0 and math.isfinite(self.theta2)):
            raise DomainError(f"separation theta2 must be positive, got {self.theta2}")
        if not math.isfinite(self.theta1):
            raise DomainError(f"centroid theta1 must be finite, got {self.theta1}")

    @property
    def x1(self) -> float:
        return self.theta1 - self.theta2 / 2.0

    @property
    def x2(self) -> float:
        return self.theta1 + self.theta2 / 2.0


@dataclass(frozen=True)
class OverlapSet:
    """The six scalars characterizing the two-source model at one separation."""

    delta: float
    kappa: float
    gamma: float
    beta: float
    eta3: float
    eta4: float


@dataclass(frozen=True)
class QuadratureConfig:
    """Numerical quadrature settings for the overlap integrals.

    ``half_range`` is in units of the Gaussian sigma (ignored for tabulated
    PSFs, whose own grid bounds the integration interval).
    """

    half_range: float = 12.0
    node_count: int = 2001
    rule: str = "trapezoid"

    def __post_init__(self):
        if not self.half_range > 0:
            raise DomainError(f"half_range must be positive, got {self.half_range}")
        if self.node_count < 3 or self.node_count % 2 == 0:
            raise DomainError(f"node_count must be odd and >= 3, got {self.node_count}")
        if self.rule not in ("trapezoid", "gauss-legendre"):
            raise DomainError(f"unknown quadrature rule {self.rule!r}")


def psf_value(psf: PsfSpec, x):
    """Amplitude psi(x); accepts scalars or arrays."""
    x = np.asarray(x, dtype=float)
    if isinstance(psf, GaussianPsf):
        s2 = psf.sigma**2
        out = (2.0 * np.pi * s2) ** (-0.25) * np.exp(-(x**2) / (4.0 * s2))
    else:
        out = np.interp(x, psf.x, psf.values, left=0.0, right=0.0)
    return out if out.ndim else float(out)


def psf_derivative(psf: PsfSpec, x):
    """Spatial derivative psi'(x); central differences for tabulated PSFs."""
    x = np.asarray(x, dtype=float)
    if isinstance(psf, GaussianPsf):
        s2 = psf.sigma**2
        out = -(x / (2.0 * s2)) * psf_value(psf, x)
    else:
        out = np.interp(x, psf.x, psf._deriv, left=0.0, right=0.0)
    return out if out.ndim else float(out)


def _finish_overlaps(
    delta: float, kappa: float, gamma: float, beta: float,
    one_minus_delta: float | None = None,
) -> OverlapSet:
    """Validate the four raw integrals and attach eta3/eta4.

    ``one_minus_delta`` lets the Gaussian path supply an expm1-accurate
    value; the eta3 radicand is a catastrophic cancellation at small
    separations and needs 1 - delta to full precision.
    """
    if one_minus_delta is None:
        one_minus_delta = 1.0 - delta
    if not (0.0 < delta):
        raise DomainError(f"overlap delta must lie in (0, 1], got {delta}")
    if one_minus_delta <= SINGULAR_DELTA_MARGIN:
        raise SingularBasis(
            f"delta = {delta!r} is within {SINGULAR_DELTA_MARGIN} of 1; "
            "sources too close for the orthonormal-basis construction"
        )
    if not kappa > 0.0:
        raise DomainError(f"kappa must be positive, got {kappa}")
    etas = []
    for radicand in (
        kappa + beta - gamma**2 / one_minus_delta,
        kappa - beta - gamma**2 / (1.0 + delta),
    ):
        if radicand < -RADICAND_TOLERANCE:
            raise DomainError(
                f"eta radicand {radicand!r} below -{RADICAND_TOLERANCE}; inconsistent PSF data"
            )
        etas.append(math.sqrt(max(radicand, 0.0)))
    return OverlapSet(delta, kappa, gamma, beta, etas[0], etas[1])


def compute_overlaps(psf: PsfSpec, theta2: float) -> OverlapSet:
    """Overlap integrals at separation ``theta2``.

    Gaussian PSFs use the closed forms; tabulated PSFs delegate to
    :func:`compute_overlaps_quadrature` with default settings.
    """
    if not (theta2 > 0.0 and math.isfinite(theta2)):
        raise DomainError(f"theta2 must be positive, got {theta2}")
    if isinstance(psf, GaussianPsf):
        s2 = psf.sigma**2
        exponent = theta2**2 / (8.0 * s2)
        delta = math.exp(-exponent)
        kappa = 1.0 / (4.0 * s2)
        gamma = -(theta2 / (4.0 * s2)) * delta
        beta = (4.0 * s2 - theta2**2) / (16.0 * s2 * s2) * delta
        return _finish_overlaps(delta, kappa, gamma, beta,
                                one_minus_delta=-math.expm1(-exponent))
    return compute_overlaps_quadrature(psf, theta2, QuadratureConfig())


def _quad_nodes(lo: float, hi: float, cfg: QuadratureConfig):
    if cfg.rule == "trapezoid":
        x = np.linspace(lo, hi, cfg.node_count)
        w = np.full(cfg.node_count, (hi - lo) / (cfg.node_count - 1))
        w[0] *= 0.5
        w[-1] *= 0.5
    else:  # gauss-legendre
        nodes, weights = np.polynomial.legendre.leggauss(cfg.node_count)
        x = 0.5 * (hi - lo) * nodes + 0.5 * (hi + lo)
        w = 0.5 * (hi - lo) * weights
    return x, w


def compute_overlaps_quadrature(
    psf: PsfSpec, theta2: float, cfg: QuadratureConfig | None = None
) -> OverlapSet:
    """Evaluate the four overlap integrals by quadrature.

    Same contract as :func:`compute_overlaps`; for Gaussian PSFs this is the
    independent oracle against which the closed forms are checked.
    """
    if not (theta2 > 0.0 and math.isfinite(theta2)):
        raise DomainError(f"theta2 must be positive, got {theta2}")
    cfg = cfg or QuadratureConfig()
    if isinstance(psf, GaussianPsf):
        lo = -cfg.half_range * psf.sigma
        hi = cfg.half_range * psf.sigma + theta2
    else:
        lo = float(psf.x[0])
        hi = float(psf.x[-1]) + theta2
    x, w = _quad_nodes(lo, hi, cfg)
    v = psf_value(psf, x)
    d = psf_derivative(psf, x)
    v_shift = psf_value(psf, x - theta2)
    d_shift = psf_derivative(psf, x - theta2)
    delta = float(w @ (v * v_shift))
    kappa = float(w @ (d * d))
    gamma = float(w @ (d * v_shift))
    beta = float(w @ (d * d_shift))
    return _finish_overlaps(delta, kappa, gamma, beta)
