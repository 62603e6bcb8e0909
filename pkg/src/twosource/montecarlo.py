"""Photon-counting simulation and empirical Cramer-Rao verification.

Photons are drawn one multinomial batch per trial from the outcome
distribution of a measurement built at the true scene, using the
counter-based Philox generator so a (configuration, seed) pair fully
determines every count.  Per-trial estimates of (theta1, theta2) come from
maximum likelihood with the measurement held fixed: a 21x21 grid over the
search box picks a starting point, then Nelder-Mead refines to 1e-6.

The empirical covariance over trials is compared against the Cramer-Rao
bound (N F)^-1 built from the classical Fisher information of the same
measurement.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .errors import Degenerate, DomainError
from .measure import PovmSpec, classical_fim, outcome_distribution, probability_model
from .psf import PsfSpec, SceneParams
from .state import build_model

#: coarse likelihood grid resolution per axis
GRID_POINTS = 21

#: estimates closer to a box edge than this fraction of the span count as boundary hits
BOUNDARY_MARGIN = 1e-3


@dataclass(frozen=True)
class SearchBox:
    """Rectangular parameter region for the likelihood search."""

    theta1_lo: float
    theta1_hi: float
    theta2_lo: float
    theta2_hi: float

    def __post_init__(self):
        if not self.theta1_lo < self.theta1_hi:
            raise DomainError("search box: theta1_lo must be below theta1_hi")
        if not 0.0 < self.theta2_lo < self.theta2_hi:
            raise DomainError("search box: need 0 < theta2_lo < theta2_hi")

    def contains(self, scene: SceneParams) -> bool:
        return (self.theta1_lo <= scene.theta1 <= self.theta1_hi
                and self.theta2_lo <= scene.theta2 <= self.theta2_hi)


@dataclass(frozen=True)
class TrialConfig:
    """Sampling plan: photons per trial, number of trials, seed, search box."""

    photons: int
    trials: int
    seed: int
    box: SearchBox

    def __post_init__(self):
        if self.photons < 1:
            raise DomainError(f"photons must be >= 1, got {self.photons}")
        if self.trials < 1:
            raise DomainError(f"trials must be >= 1, got {self.trials}")


@dataclass(frozen=True, eq=False)
class TrialResult:
    """Estimates, empirical covariance and Cramer-Rao comparison."""

    estimates: np.ndarray
    empirical_cov: np.ndarray
    crb: np.ndarray
    ratio: np.ndarray
    boundary_fraction: float
    boundary_warning: bool


def sample_outcomes(povm: PovmSpec, psf: PsfSpec, scene: SceneParams,
                    n: int, seed: int) -> np.ndarray:
    """Multinomial counts of ``n`` photons; identical inputs give identical counts."""
    if n < 0:
        raise DomainError(f"photon count must be >= 0, got {n}")
    model = build_model(psf, scene)
    dist = outcome_distribution(povm, psf, scene, model)
    return _draw(dist.probs, n, seed)


def _draw(probs: np.ndarray, n: int, seed: int) -> np.ndarray:
    rng = np.random.Generator(np.random.Philox(key=seed & 0xFFFFFFFFFFFFFFFF))
    return rng.multinomial(n, probs / probs.sum())


def mle_fit(counts: np.ndarray, povm: PovmSpec, psf: PsfSpec,
            box: SearchBox, anchor: SceneParams) -> tuple[float, float]:
    """Maximum-likelihood estimate of (theta1, theta2) from outcome counts.

    ``anchor`` is the scene the measurement was built at; its effects stay
    fixed while the outcome model's parameters vary over the box.
    """
    counts = np.asarray(counts, dtype=float)
    if counts.sum() <= 0:
        raise DomainError("counts must contain at least one photon")
    model = build_model(psf, anchor)
    probs = probability_model(povm, psf, anchor, model)

    g1 = np.linspace(box.theta1_lo, box.theta1_hi, GRID_POINTS)
    g2 = np.linspace(box.theta2_lo, box.theta2_hi, GRID_POINTS)
    mesh1, mesh2 = np.meshgrid(g1, g2, indexing="ij")
    grid_probs = probs(mesh1.ravel(), mesh2.ravel())
    loglik = np.log(np.maximum(grid_probs, 1e-300)) @ counts
    spread = loglik.max() - loglik.min()
    if not math.isfinite(spread) or spread < 1e-9 * (1.0 + abs(loglik.max())):
        raise Degenerate("likelihood is flat over the search box")
    best = int(np.argmax(loglik))

    def negloglik(theta):
        p = probs(theta[0], theta[1])
        return -float(np.log(np.maximum(p, 1e-300)) @ counts)

    res = minimize(
        negloglik,
        x0=np.array([mesh1.ravel()[best], mesh2.ravel()[best]]),
        method="Nelder-Mead",
        bounds=[(box.theta1_lo, box.theta1_hi), (box.theta2_lo, box.theta2_hi)],
        options={"xatol": 1e-6, "fatol": 1e-9, "maxiter": 2000},
    )
    t1 = min(max(float(res.x[0]), box.theta1_lo), box.theta1_hi)
    t2 = min(max(float(res.x[1]), box.theta2_lo), box.theta2_hi)
    return t1, t2


def crb_comparison(estimates: np.ndarray, fim: np.ndarray, photons: int,
                   boundary_fraction: float = 0.0) -> TrialResult:
    """Empirical covariance against the Cramer-Rao bound (N F)^-1."""
    estimates = np.asarray(estimates, dtype=float)
    if estimates.ndim != 2 or estimates.shape[1] != 2 or estimates.shape[0] < 50:
        raise DomainError("need at least 50 trials of 2-parameter estimates")
    cov = np.cov(estimates.T, ddof=1)
    fim = np.asarray(fim, dtype=float)
    if not np.isfinite(np.linalg.cond(fim)) or np.linalg.cond(fim) > 1e12:
        raise DomainError(
            "classical FIM is singular; the Cramer-Rao bound is undefined "
            "for this measurement (an unidentifiable parameter)"
        )
    crb = np.linalg.inv(photons * fim)
    ratio = np.divide(cov, crb, out=np.full((2, 2), np.nan), where=np.abs(crb) > 1e-300)
    return TrialResult(
        estimates=estimates,
        empirical_cov=cov,
        crb=crb,
        ratio=ratio,
        boundary_fraction=boundary_fraction,
        boundary_warning=boundary_fraction > 0.05,
    )


def run_trials(povm: PovmSpec, psf: PsfSpec, scene: SceneParams,
               config: TrialConfig) -> TrialResult:
    """Full pipeline: sample, fit, compare; pure function of (inputs, seed)."""
    if not config.box.contains(scene):
        raise DomainError("search box does not contain the true scene")
    model = build_model(psf, scene)
    dist = outcome_distribution(povm, psf, scene, model)
    fim = classical_fim(dist)

    estimates = np.empty((config.trials, 2))
    boundary_hits = 0
    span1 = config.box.theta1_hi - config.box.theta1_lo
    span2 = config.box.theta2_hi - config.box.theta2_lo
    for trial in range(config.trials):
        counts = _draw(dist.probs, config.photons, config.seed ^ trial)
        t1, t2 = mle_fit(counts, povm, psf, config.box, scene)
        estimates[trial] = (t1, t2)
        near1 = min(t1 - config.box.theta1_lo, config.box.theta1_hi - t1) < BOUNDARY_MARGIN * span1
        near2 = min(t2 - config.box.theta2_lo, config.box.theta2_hi - t2) < BOUNDARY_MARGIN * span2
        boundary_hits += bool(near1 or near2)
    return crb_comparison(estimates, fim, config.photons,
                          boundary_fraction=boundary_hits / config.trials)
