"""Density-matrix model, SLD consistency and quantum Fisher information."""

import math

import numpy as np
import pytest

from twosource import (
    DomainError,
    GaussianPsf,
    SceneParams,
    basis_wavefunction,
    build_model,
    qfi_matrix,
)

GAUSS = GaussianPsf(1.0)
RAYLEIGH = SceneParams(theta1=0.0, theta2=2.0)
SWEEP = np.linspace(0.1, 8.0, 50)


def test_scene_geometry():
    scene = SceneParams(theta1=0.3, theta2=2.0)
    assert scene.x2 - scene.x1 == pytest.approx(2.0, abs=1e-15)
    assert (scene.x1 + scene.x2) / 2 == pytest.approx(0.3, abs=1e-15)
    with pytest.raises(DomainError):
        SceneParams(theta1=0.0, theta2=0.0)


def test_rho_is_diagonal_unit_trace_psd():
    model = build_model(GAUSS, RAYLEIGH)
    d = model.overlaps.delta
    expected = np.diag([(1 - d) / 2, (1 + d) / 2, 0.0, 0.0])
    assert np.array_equal(model.rho, expected)
    assert np.trace(model.rho) == pytest.approx(1.0, abs=1e-15)
    assert np.linalg.eigvalsh(model.rho).min() >= 0.0


def test_l2_support_entry():
    model = build_model(GAUSS, RAYLEIGH)
    # (1,1) entry of the separation SLD is -gamma/(1 - delta)
    assert model.L2[0, 0] == pytest.approx(0.7707470412683991, abs=1e-14)


def test_sld_equation_residual():
    for theta2 in (0.5, 1.0, 2.0, 4.0):
        model = build_model(GAUSS, SceneParams(0.0, theta2))
        for L, drho in ((model.L1, model.drho1), (model.L2, model.drho2)):
            residual = drho - 0.5 * (L @ model.rho + model.rho @ L)
            assert np.abs(residual).max() <= 1e-12


def test_drho2_diagonal_matches_delta_derivative():
    # d rho / d theta2 has diagonal (-gamma/2, +gamma/2, 0, 0) since
    # d delta / d theta2 = gamma for the Gaussian PSF
    model = build_model(GAUSS, RAYLEIGH)
    g = model.overlaps.gamma
    assert np.allclose(np.diag(model.drho2), [-g / 2, g / 2, 0, 0], atol=1e-15)


def test_qfi_values_at_rayleigh():
    model = build_model(GAUSS, RAYLEIGH)
    report = qfi_matrix(model)
    ov = model.overlaps
    assert report.qfi[0, 0] == pytest.approx(4 * (ov.kappa - ov.gamma**2), abs=1e-12)
    assert report.qfi[0, 0] == pytest.approx(0.6321205588285577, abs=1e-10)  # 1 - 1/e
    assert report.qfi[1, 1] == pytest.approx(0.25, abs=1e-10)
    assert report.qfi[0, 1] == pytest.approx(0.0, abs=1e-14)


def test_qfi_closed_forms_across_sweep():
    for theta2 in SWEEP:
        model = build_model(GAUSS, SceneParams(0.0, theta2))
        report = qfi_matrix(model)
        ov = model.overlaps
        assert report.qfi[0, 0] == pytest.approx(4 * (ov.kappa - ov.gamma**2), abs=1e-10)
        assert report.qfi[1, 1] == pytest.approx(ov.kappa, abs=1e-10)
        assert abs(report.qfi[0, 1]) <= 1e-10
        assert np.linalg.eigvalsh(report.qfi).min() >= 0.0


def test_incompatibility_against_closed_form():
    # trace-norm definition vs beta^2/(kappa (kappa - gamma^2))
    for theta2 in SWEEP:
        report = qfi_matrix(build_model(GAUSS, SceneParams(0.0, theta2)))
        assert report.c == pytest.approx(report.c_closed_form, abs=1e-8)
        assert 0.0 <= report.c <= 1.0
    assert qfi_matrix(build_model(GAUSS, RAYLEIGH)).c <= 1e-12


def test_qfi_translation_invariance():
    base = qfi_matrix(build_model(GAUSS, SceneParams(0.0, 1.7)))
    shifted = qfi_matrix(build_model(GAUSS, SceneParams(5.0, 1.7)))
    assert np.array_equal(base.qfi, shifted.qfi)
    assert base.c == shifted.c


def test_basis_orthonormal_by_quadrature():
    x = np.linspace(-14, 14, 6001)
    funcs = [basis_wavefunction(GAUSS, RAYLEIGH, k, x) for k in (1, 2, 3, 4)]
    for i in range(4):
        for j in range(4):
            inner = np.trapezoid(funcs[i] * funcs[j], x)
            assert inner == pytest.approx(float(i == j), abs=1e-8)


def test_basis_overlap_with_source_wavefunction():
    # <e1 | psi_1> = sqrt((1 - delta)/2)
    x = np.linspace(-14, 14, 6001)
    from twosource import psf_value

    e1 = basis_wavefunction(GAUSS, RAYLEIGH, 1, x)
    psi1 = psf_value(GAUSS, x - RAYLEIGH.x1)
    assert np.trapezoid(e1 * psi1, x) == pytest.approx(0.443547821709997, abs=1e-10)


def test_basis_e2_approaches_symmetric_combination_for_large_separation():
    from twosource import psf_value

    scene = SceneParams(0.0, 8.0)
    x = np.linspace(-16, 16, 4001)
    e2 = basis_wavefunction(GAUSS, scene, 2, x)
    sym = (psf_value(GAUSS, x - scene.x1) + psf_value(GAUSS, x - scene.x2)) / math.sqrt(2)
    # e2 differs from the symmetric combination by O(delta/2), delta(8 sigma) ~ 3.4e-4
    assert np.abs(e2 - sym).max() < 1e-4


def test_basis_wavefunction_rejects_bad_index():
    with pytest.raises(DomainError):
        basis_wavefunction(GAUSS, RAYLEIGH, 5, 0.0)


def test_trace_norm_kernel_block_is_silent():
    # sqrt(rho) annihilates the kernel, so the 4x4 trace-norm computation
    # receives exact zeros outside the support block
    model = build_model(GAUSS, SceneParams(0.0, 1.3))
    sqrt_rho = np.diag(np.sqrt(np.diag(model.rho)))
    w = sqrt_rho @ (model.L1 @ model.L2 - model.L2 @ model.L1) @ sqrt_rho
    assert np.abs(w[2:, :]).max() == 0.0
    assert np.abs(w[:, 2:]).max() == 0.0
