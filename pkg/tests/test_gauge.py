"""Block decomposition, gauge solvers and the joint eigenbasis."""

import numpy as np
import pytest

from twosource import (
    DomainError,
    GaugeInvalid,
    GaussianPsf,
    NoSolution,
    NotCommuting,
    PauliVector,
    SceneParams,
    ShapeError,
    assemble_sld,
    build_model,
    closed_form_gauge,
    compute_overlaps,
    decompose_blocks,
    joint_basis_wavefunction,
    joint_eigenbasis,
    necessary_condition_residual,
    qfi_matrix,
    solve_gauge_least_norm,
)

GAUSS = GaussianPsf(1.0)
RAYLEIGH = SceneParams(theta1=0.0, theta2=2.0)


def _rayleigh_blocks():
    model = build_model(GAUSS, RAYLEIGH)
    return model, decompose_blocks(model.L1), decompose_blocks(model.L2)


def test_block_extraction_round_trip():
    model, d1, d2 = _rayleigh_blocks()
    assert np.array_equal(d1.reassemble(), model.L1)
    assert np.array_equal(d2.reassemble(), model.L2)
    ident = decompose_blocks(np.eye(4))
    assert np.array_equal(ident.a, np.eye(2))
    assert np.array_equal(ident.b, np.zeros((2, 2)))
    assert np.array_equal(ident.k, np.eye(2))


def test_canonical_kernel_blocks_are_zero():
    _, d1, d2 = _rayleigh_blocks()
    assert np.abs(d1.k).max() == 0.0
    assert np.abs(d2.k).max() == 0.0


def test_centroid_offdiagonal_block_values():
    _, d1, _ = _rayleigh_blocks()
    # B1 = [[0, 2 eta4/sqrt(1-delta)], [2 eta3/sqrt(1+delta), 0]]
    assert d1.b[0, 1] == pytest.approx(1.3998276235549403, abs=1e-13)
    assert d1.b[1, 0] == pytest.approx(0.20120294315076037, abs=1e-13)
    assert d1.b[0, 0] == 0.0
    assert d1.b[1, 1] == 0.0


def test_decompose_rejects_nonsymmetric():
    with pytest.raises(ShapeError):
        decompose_blocks(np.arange(16.0).reshape(4, 4))
    with pytest.raises(ShapeError):
        decompose_blocks(np.eye(3))


def test_necessary_condition_at_and_away_from_rayleigh():
    _, d1, d2 = _rayleigh_blocks()
    assert necessary_condition_residual(d1, d2) <= 1e-12
    assert necessary_condition_residual(d1, d1) == 0.0
    model = build_model(GAUSS, SceneParams(0.0, 1.0))
    e1, e2 = decompose_blocks(model.L1), decompose_blocks(model.L2)
    assert necessary_condition_residual(e1, e2) > 1e-3


def test_necessary_condition_residual_tracks_beta():
    # analytically the residual is |4 beta / sqrt(1 - delta^2)|
    for theta2 in (0.8, 1.5, 3.0, 5.0):
        model = build_model(GAUSS, SceneParams(0.0, theta2))
        d1, d2 = decompose_blocks(model.L1), decompose_blocks(model.L2)
        ov = model.overlaps
        expected = abs(4.0 * ov.beta / np.sqrt(1.0 - ov.delta**2))
        assert necessary_condition_residual(d1, d2) == pytest.approx(expected, rel=1e-10)


def test_closed_form_gauge_coefficients():
    ov = compute_overlaps(GAUSS, 2.0)
    pair = closed_form_gauge(ov)
    k1 = PauliVector.from_matrix(pair.k1)
    k2 = PauliVector.from_matrix(pair.k2)
    assert k1.v0 == pytest.approx(0.6892038950326563, abs=1e-13)
    assert k1.v3 == pytest.approx(0.5819767068693265, abs=1e-13)
    assert k1.v1 == 0.0 and k1.v2 == 0.0
    assert k2.v1 == pytest.approx(-0.1845976175291265, abs=1e-13)
    assert k2.v3 == pytest.approx(-0.6562520458111551, abs=1e-13)
    assert k2.v0 == 0.0 and k2.v2 == 0.0


def test_closed_form_commutes_at_rayleigh():
    model, d1, d2 = _rayleigh_blocks()
    pair = closed_form_gauge(model.overlaps)
    l1p = assemble_sld(d1, pair.k1)
    l2p = assemble_sld(d2, pair.k2)
    assert np.abs(l1p @ l2p - l2p @ l1p).max() <= 1e-10


def test_closed_form_rejected_away_from_rayleigh():
    with pytest.raises(GaugeInvalid):
        closed_form_gauge(compute_overlaps(GAUSS, 1.0))


def test_closed_form_needs_nonzero_gamma():
    from twosource import OverlapSet

    ov = OverlapSet(delta=0.5, kappa=0.25, gamma=0.0, beta=0.0, eta3=0.4, eta4=0.4)
    with pytest.raises(DomainError):
        closed_form_gauge(ov)


def test_least_norm_solver_at_rayleigh_differs_from_closed_form():
    model, d1, d2 = _rayleigh_blocks()
    closed = closed_form_gauge(model.overlaps)
    hint = PauliVector.from_matrix(closed.k1).v0
    pair = solve_gauge_least_norm(d1, d2, v0_k1=hint)
    assert pair.source == "least_norm_solver"
    scale = max(1.0, np.abs(d1.b).max(), np.abs(d2.b).max())
    assert pair.residual_c1 <= 1e-10 * scale
    assert pair.residual_c2 <= 1e-10 * scale
    l1p = assemble_sld(d1, pair.k1)
    l2p = assemble_sld(d2, pair.k2)
    assert np.abs(l1p @ l2p - l2p @ l1p).max() <= 1e-10
    # underdetermined system: the two solvers pick different gauges
    assert np.abs(pair.k1 - closed.k1).max() > 1e-3


def test_least_norm_solver_refuses_when_necessary_condition_fails():
    model = build_model(GAUSS, SceneParams(0.0, 1.0))
    d1, d2 = decompose_blocks(model.L1), decompose_blocks(model.L2)
    with pytest.raises(NoSolution):
        solve_gauge_least_norm(d1, d2)


def test_least_norm_trivial_inputs_give_zero_gauge():
    from twosource import BlockDecomposition

    d1 = BlockDecomposition(a=np.diag([1.0, 2.0]), b=np.zeros((2, 2)), k=np.zeros((2, 2)))
    d2 = BlockDecomposition(a=np.diag([3.0, 4.0]), b=np.zeros((2, 2)), k=np.zeros((2, 2)))
    pair = solve_gauge_least_norm(d1, d2)
    assert np.abs(pair.k1).max() == 0.0
    assert np.abs(pair.k2).max() == 0.0


def test_gauged_slds_satisfy_the_sld_equation():
    model, d1, d2 = _rayleigh_blocks()
    pair = closed_form_gauge(model.overlaps)
    for d, k, drho in ((d1, pair.k1, model.drho1), (d2, pair.k2, model.drho2)):
        lp = assemble_sld(d, k)
        residual = drho - 0.5 * (lp @ model.rho + model.rho @ lp)
        assert np.abs(residual).max() <= 1e-12


def test_gauge_invariance_of_qfi():
    model, d1, d2 = _rayleigh_blocks()
    pair = closed_form_gauge(model.overlaps)
    l1p = assemble_sld(d1, pair.k1)
    l2p = assemble_sld(d2, pair.k2)
    rho = model.rho
    for lhs, rhs in (
        (l1p @ l1p, model.L1 @ model.L1),
        (l2p @ l2p, model.L2 @ model.L2),
        (l1p @ l2p, model.L1 @ model.L2),
    ):
        assert np.trace(rho @ lhs) == pytest.approx(np.trace(rho @ rhs), abs=1e-12)


def test_gauge_invariance_for_arbitrary_kernel_blocks():
    model, d1, d2 = _rayleigh_blocks()
    k = np.array([[0.7, -0.2], [-0.2, 1.3]])
    lp = assemble_sld(d1, k)
    assert np.trace(model.rho @ lp @ lp) == pytest.approx(
        np.trace(model.rho @ model.L1 @ model.L1), abs=1e-12
    )
    residual = model.drho1 - 0.5 * (lp @ model.rho + model.rho @ lp)
    assert np.abs(residual).max() <= 1e-12


def test_assemble_sld_validates_kernel_block():
    _, d1, _ = _rayleigh_blocks()
    with pytest.raises(ShapeError):
        assemble_sld(d1, np.array([[0.0, 1.0], [2.0, 0.0]]))
    with pytest.raises(ShapeError):
        assemble_sld(d1, np.zeros((3, 3)))
    assert np.array_equal(assemble_sld(d1, np.zeros((2, 2))), d1.reassemble())


def test_joint_eigenbasis_already_diagonal():
    basis = joint_eigenbasis(np.diag([1.0, 2.0, 3.0, 4.0]), np.diag([4.0, 3.0, 2.0, 1.0]))
    # identity basis up to the descending-eigenvalue column ordering
    assert np.array_equal(np.abs(basis.vectors), np.eye(4)[:, ::-1])
    assert np.array_equal(basis.eigenvalues[:, 0], [4.0, 3.0, 2.0, 1.0])
    assert np.array_equal(basis.eigenvalues[:, 1], [1.0, 2.0, 3.0, 4.0])


def test_joint_eigenbasis_degenerate_first_operator():
    rng = np.random.default_rng(7)
    q, _ = np.linalg.qr(rng.normal(size=(4, 4)))
    l2 = q @ np.diag([0.3, -1.2, 2.5, 0.9]) @ q.T
    basis = joint_eigenbasis(np.eye(4), l2)
    d2 = basis.vectors.T @ l2 @ basis.vectors
    assert np.abs(d2 - np.diag(np.diag(d2))).max() <= 1e-10
    assert np.abs(basis.vectors.T @ basis.vectors - np.eye(4)).max() <= 1e-12


def test_joint_eigenbasis_of_gauged_pair():
    model, d1, d2 = _rayleigh_blocks()
    pair = closed_form_gauge(model.overlaps)
    l1p = assemble_sld(d1, pair.k1)
    l2p = assemble_sld(d2, pair.k2)
    basis = joint_eigenbasis(l1p, l2p)
    v = basis.vectors
    assert np.abs(v.T @ v - np.eye(4)).max() <= 1e-12
    for lp, col in ((l1p, 0), (l2p, 1)):
        diag = v.T @ lp @ v
        assert np.abs(diag - np.diag(np.diag(diag))).max() <= 1e-10
        assert np.allclose(np.diag(diag), basis.eigenvalues[:, col], atol=1e-12)
    # ordering convention: descending first eigenvalue
    assert all(a >= b for a, b in zip(basis.eigenvalues[:, 0], basis.eigenvalues[1:, 0]))


def test_joint_eigenbasis_rejects_noncommuting():
    model, *_ = _rayleigh_blocks()
    with pytest.raises(NotCommuting):
        joint_eigenbasis(model.L1, model.L2)  # canonical pair does not commute


def test_joint_eigenbasis_deterministic():
    model, d1, d2 = _rayleigh_blocks()
    pair = closed_form_gauge(model.overlaps)
    l1p = assemble_sld(d1, pair.k1)
    l2p = assemble_sld(d2, pair.k2)
    a = joint_eigenbasis(l1p, l2p)
    b = joint_eigenbasis(l1p.copy(), l2p.copy())
    assert np.array_equal(a.vectors, b.vectors)
    assert np.array_equal(a.eigenvalues, b.eigenvalues)


def test_both_gauges_yield_qfi_attaining_bases():
    from twosource import ProjectiveE, classical_fim, outcome_distribution

    model, d1, d2 = _rayleigh_blocks()
    report = qfi_matrix(model)
    closed = closed_form_gauge(model.overlaps)
    hint = PauliVector.from_matrix(closed.k1).v0
    solved = solve_gauge_least_norm(d1, d2, v0_k1=hint)
    for pair in (closed, solved):
        basis = joint_eigenbasis(assemble_sld(d1, pair.k1), assemble_sld(d2, pair.k2))
        dist = outcome_distribution(ProjectiveE(basis), GAUSS, RAYLEIGH, model)
        fim = classical_fim(dist)
        assert np.abs(fim - report.qfi).max() <= 1e-8


def test_joint_basis_wavefunctions_orthonormal():
    model, d1, d2 = _rayleigh_blocks()
    pair = closed_form_gauge(model.overlaps)
    basis = joint_eigenbasis(assemble_sld(d1, pair.k1), assemble_sld(d2, pair.k2))
    x = np.linspace(-14, 14, 6001)
    funcs = [joint_basis_wavefunction(basis, GAUSS, RAYLEIGH, j, x) for j in (1, 2, 3, 4)]
    for i in range(4):
        for j in range(4):
            inner = np.trapezoid(funcs[i] * funcs[j], x)
            assert inner == pytest.approx(float(i == j), abs=1e-6)


def test_joint_basis_captures_source_state():
    # |psi_1> lies in the four-dimensional span: mode weights sum to 1
    from twosource import psf_value

    model, d1, d2 = _rayleigh_blocks()
    pair = closed_form_gauge(model.overlaps)
    basis = joint_eigenbasis(assemble_sld(d1, pair.k1), assemble_sld(d2, pair.k2))
    x = np.linspace(-14, 14, 6001)
    psi1 = psf_value(GAUSS, x - RAYLEIGH.x1)
    weight = sum(
        np.trapezoid(joint_basis_wavefunction(basis, GAUSS, RAYLEIGH, j, x) * psi1, x) ** 2
        for j in (1, 2, 3, 4)
    )
    assert weight == pytest.approx(1.0, abs=1e-10)
    # and rho assigns total probability 1 to the basis
    probs = np.einsum("ij,ik,kj->j", basis.vectors, model.rho, basis.vectors)
    assert probs.sum() == pytest.approx(1.0, abs=1e-12)


def test_pauli_vector_round_trip():
    m = np.array([[1.25, -0.4], [-0.4, 0.35]])
    v = PauliVector.from_matrix(m)
    assert np.abs(v.to_matrix() - m).max() <= 1e-14
    herm = np.array([[2.0, 1.0 - 0.5j], [1.0 + 0.5j, -1.0]])
    w = PauliVector.from_matrix(herm)
    assert w.v2 == pytest.approx(0.5, abs=1e-14)
    assert np.abs(w.to_matrix() - herm).max() <= 1e-14
    with pytest.raises(ShapeError):
        PauliVector.from_matrix(np.array([[0.0, 1.0], [2.0, 0.0]]))
