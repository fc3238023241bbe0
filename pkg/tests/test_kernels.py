"""Kernel-evaluation tests.

Oracles, in decreasing strength:
  * the closed-form heat kernel on the 3-dimensional Heisenberg group
    (a 1-d integral evaluated two independent ways),
  * representation-theoretic identities: the level sum of diagonal
    matrix coefficients (computed by Gauss-Hermite quadrature) must
    match the radial Fourier-Laguerre closed form,
  * the spectral-side Plancherel norm against its exact closed form on
    the 3-d Heisenberg group,
  * internal consistency: paired vs product-lattice evaluation, complex
    conjugation under center reflection, dilation covariance, and
    independence of the evaluation from the chosen block splitting.

Tolerances are frozen from measured headroom: each assertion sits at
least one order of magnitude above the observed error.
"""

import math

import numpy as np
import pytest
from scipy.integrate import quad as scipy_quad

from nilspec import groups as G
from nilspec import kernels as K
from nilspec import multipliers as M

H1, H1_DEC = G.builtin_group("h1")

# fast, refinement-free settings reused across cheap checks
FAST = K.QuadratureSpec(rho_min_factor=1e-3, refine=False)


def bump() -> M.Multiplier:
    return M.gaussian_bump(2.5, 0.5)


# --- closed-form heat oracle on the 3-d Heisenberg group --------------------


def test_heat_oracle_origin_value_frozen():
    val = K.heat_kernel_h1_oracle(1.0, np.zeros(2), 0.0)
    assert math.isclose(val, K.HEAT_H1_ORIGIN_T1, rel_tol=1e-12)
    assert K.HEAT_H1_ORIGIN_T1 == 1.0 / 16.0


def test_heat_oracle_routes_agree():
    pts = [(np.zeros(2), 0.0), (np.array([0.9, 0.4]), 0.7), (np.array([1.6, -0.8]), -1.3)]
    for z, u in pts:
        a = K.heat_kernel_h1_oracle(0.8, z, u, method="quad")
        b = K.heat_kernel_h1_oracle(0.8, z, u, method="panels")
        assert abs(a - b) <= 1e-10


def test_heat_oracle_center_marginal_is_euclidean_heat():
    # integrating out the center leaves the 2-d Euclidean heat kernel
    T = 1.0
    for z in (np.zeros(2), np.array([1.1, -0.5])):
        val, _ = scipy_quad(
            lambda u: K.heat_kernel_h1_oracle(T, z, u), -40.0, 40.0, limit=300
        )
        expect = math.exp(-float(z @ z) / (4 * T)) / (4 * math.pi * T)
        assert abs(val - expect) <= 1e-8


def test_eval_kernel_matches_heat_oracle():
    T = 1.0
    F = M.heat(T, window=(0.0, 40.0))
    pts = [
        (np.zeros(2), np.zeros(1)),
        (np.array([0.9, 0.4]), np.array([0.7])),
        (np.array([1.6, -0.8]), np.array([-1.3])),
    ]
    quad = K.QuadratureSpec(rho_min_factor=1e-5, refine=False)
    grid = K.eval_kernel(H1, H1_DEC, F, pts, quad=quad, threads=2)
    for (z, u), got in zip(pts, grid.values):
        want = K.heat_kernel_h1_oracle(T, z, float(u[0]))
        assert abs(got.real - want) <= 1e-4  # measured 9.5e-6
        assert abs(got.imag) <= 1e-6


# --- internal consistency ----------------------------------------------------


def test_product_lattice_matches_paired_eval():
    F = bump()
    z_pts = [np.array([a, b]) for a in (0.0, 0.7, -1.2) for b in (0.3, -0.9)]
    u_pts = [np.array([c]) for c in (0.0, 0.5, -1.4)]
    prod = K.eval_kernel_product(H1, H1_DEC, F, z_pts, u_pts, quad=FAST)
    paired = K.eval_kernel(
        H1, H1_DEC, F, [(z, u) for z in z_pts for u in u_pts], quad=FAST
    )
    flat = prod.values.reshape(-1)
    scale = np.abs(flat).max()
    assert np.abs(flat - paired.values).max() <= 1e-12 * scale  # measured 4e-17


def test_center_reflection_conjugates():
    F = bump()
    pts = [(np.array([0.6, -0.4]), np.array([0.8])), (np.array([1.1, 0.2]), np.array([-0.3]))]
    refl = [(z, -u) for z, u in pts]
    a = K.eval_kernel(H1, H1_DEC, F, pts, quad=FAST).values
    b = K.eval_kernel(H1, H1_DEC, F, refl, quad=FAST).values
    assert np.abs(a - np.conj(b)).max() <= 1e-13 * np.abs(a).max()


def test_dilation_covariance():
    # K_{F(t^2 .)}(z, u) = t^{-Q} K_F(z / t, u / t^2) with Q = 4 here
    t = math.sqrt(2.0)
    F = bump()
    F_t = M.gaussian_bump(2.5 / t**2, 0.5 / t**4)
    pts = [
        (np.array([0.8, -0.5]), np.array([0.6])),
        (np.array([0.2, 1.0]), np.array([-0.9])),
    ]
    scaled_pts = [(z / t, u / t**2) for z, u in pts]
    lhs = K.eval_kernel(H1, H1_DEC, F_t, pts, quad=FAST).values
    rhs = K.eval_kernel(H1, H1_DEC, F, scaled_pts, quad=FAST).values * t**-4.0
    assert np.abs(lhs - rhs).max() <= 1e-12 * np.abs(rhs).max()  # measured 4e-15


def test_dilation_covariance_h12():
    # same identity on the 5-d group: Q = dim v + 2 dim z = 7
    g, dec = G.builtin_group("h12")
    quad = K.QuadratureSpec(rho_min_factor=3e-2, refine=False)
    t = math.sqrt(2.0)
    F = bump()
    F_t = M.gaussian_bump(2.5 / t**2, 0.5 / t**4)
    pts = [
        (np.array([0.8, -0.5, 0.3]), np.array([0.6, -0.2])),
        (np.array([0.2, 1.0, -0.7]), np.array([-0.9, 0.4])),
    ]
    scaled_pts = [(z / t, u / t**2) for z, u in pts]
    lhs = K.eval_kernel(g, dec, F_t, pts, quad=quad).values
    rhs = K.eval_kernel(g, dec, F, scaled_pts, quad=quad).values * t**-7.0
    assert np.abs(lhs - rhs).max() <= 1e-12 * np.abs(rhs).max()


def test_block_splitting_does_not_change_kernel():
    # two glued 3-d Heisenberg groups: the juxtaposed rank-(1,1) splitting
    # and the single rank-2 block describe the same operator
    g, dec2 = G.builtin_group("glued_h1_h1")
    dec1 = G.LayerDecomposition(projections=[np.eye(4)], ranks=[2], tdone=0)
    F = bump()
    pts = [
        (np.array([0.5, -0.2, 0.8, 0.1]), np.array([0.4])),
        (np.array([0.0, 0.9, -0.3, 0.6]), np.array([-0.7])),
        (np.zeros(4), np.zeros(1)),
    ]
    quad = K.QuadratureSpec(rho_min_factor=3e-3, refine=False)
    a = K.eval_kernel(g, dec1, F, pts, quad=quad).values
    b = K.eval_kernel(g, dec2, F, pts, quad=quad).values
    assert np.abs(a - b).max() <= 1e-6 * np.abs(a).max()  # measured 3.3e-9


def test_tensor_symbol_matches_scalar_heat():
    # e^{-T lam} factors exactly over blocks, so the tensor route must
    # agree with the scalar route once the |eta| truncation is matched
    # T large enough that the differing truncation regions (total spectrum
    # past 30 on the tensor side) carry only an e^{-30} tail
    g, dec = G.builtin_group("h21")
    T = 1.0
    plain = M.heat(T, window=(0.0, 30.0))
    tensor = K.TensorMultiplier((M.heat(T, window=(0.0, 30.0)),) * 2)
    pts = [
        (np.array([0.4, 0.1, -0.6, 0.3]), np.array([0.5])),
        (np.zeros(4), np.zeros(1)),
    ]
    quad = K.QuadratureSpec(rho_min=0.1, refine=False)
    a = K.eval_kernel(g, dec, plain, pts, quad=quad).values
    b = K.eval_kernel(g, dec, tensor, pts, quad=quad).values
    assert np.abs(a - b).max() <= 1e-6 * np.abs(a).max()  # measured 1.2e-8


# --- refusal paths ------------------------------------------------------------


def test_coupled_lattice_cap_raises():
    g, dec = G.builtin_group("glued_h1_h1")
    quad = K.QuadratureSpec(rho_min_factor=3e-3, refine=False, coupled_cap=10)
    with pytest.raises(ValueError, match="coupled"):
        K.eval_kernel(g, dec, bump(), [(np.zeros(4), np.zeros(1))], quad=quad)


def test_three_coupled_blocks_unsupported():
    g2, dec2 = G.builtin_group("glued_h1_h1")
    g1, dec1 = G.builtin_group("h1")
    g, dec = G.glue_centers(g2, g1, np.eye(1), dec2, dec1)
    with pytest.raises(NotImplementedError):
        K.eval_kernel(g, dec, bump(), [(np.zeros(6), np.zeros(1))], quad=FAST)


def test_coupled_slack_blocks_unsupported():
    # two blocks that both carry slack dimensions: only tensor symbols split
    g, dec = G.builtin_group("h23")
    with pytest.raises(NotImplementedError):
        K.eval_kernel(g, dec, bump(), [(np.zeros(8), np.zeros(3))], quad=FAST)


def test_tensor_factor_count_must_match_blocks():
    with pytest.raises(ValueError):
        K.eval_kernel(
            H1,
            H1_DEC,
            K.TensorMultiplier((bump(), bump())),
            [(np.zeros(2), np.zeros(1))],
            quad=FAST,
        )


def test_tensor_factors_must_be_multipliers():
    with pytest.raises(TypeError):
        K.TensorMultiplier((bump(), 3.0))


def test_quadrature_spec_validation():
    with pytest.raises(ValueError):
        K.QuadratureSpec(eta_sphere_nodes=1)
    with pytest.raises(ValueError):
        K.QuadratureSpec(rho_min=0.0)
    with pytest.raises(ValueError):
        K.QuadratureSpec(rho_min_factor=-1.0)


def test_accuracy_error_carries_both_sweeps():
    quad = K.QuadratureSpec(rho_min_factor=1e-2, tail_tol=1e-18, refine=True)
    pts = [(np.array([0.4, 0.2]), np.array([0.3]))]
    with pytest.raises(K.AccuracyError) as exc:
        K.eval_kernel(H1, H1_DEC, bump(), pts, quad=quad, raise_on_disagreement=True)
    err = exc.value
    assert err.fine.shape == (1,) and err.coarse.shape == (1,)
    assert err.est_error > 0.0


def test_refinement_estimate_reported():
    quad = K.QuadratureSpec(rho_min_factor=1e-2, refine=True)
    pts = [(np.array([0.4, 0.2]), np.array([0.3]))]
    grid = K.eval_kernel(H1, H1_DEC, bump(), pts, quad=quad)
    assert grid.est_error > 0.0
    assert grid.coarse_values is not None
    assert grid.group_label == H1.label
    assert grid.multiplier_tag == "gaussian_bump"


def test_zero_symbol_gives_zero_kernel():
    F = M.Multiplier(
        family="zero", params={}, support=(0.0, 1.0), fn=lambda lam: np.zeros_like(lam)
    )
    grid = K.eval_kernel(H1, H1_DEC, F, [(np.array([0.3, 0.1]), np.array([0.2]))], quad=FAST)
    assert np.abs(grid.values).max() == 0.0


def test_dyadic_slice_above_threshold_vanishes():
    F = bump()
    M_big = 4.0 * M.vanishing_threshold(H1, H1_DEC, F)
    slab = M.truncate_dyadic(F, M_big)
    grid = K.eval_kernel(
        H1, H1_DEC, slab, [(np.array([0.3, 0.1]), np.array([0.2]))], quad=FAST
    )
    assert np.abs(grid.values).max() == 0.0


# --- representation-theoretic identities --------------------------------------


def rho_in_kernel(g, dec, eta, raw):
    """Project a raw direction onto ker J_eta, in user coordinates."""
    sd = G.spectral_data(g, dec, eta)
    rho_orth = sd.pbar_total() @ g.to_orthonormal(np.asarray(raw, float))
    return g.from_orthonormal(rho_orth)


def test_level_sum_matches_closed_form_h1():
    eta = np.array([0.7])
    rho = np.zeros(2)
    rng = np.random.default_rng(7)
    for n in range(4):
        for _ in range(3):
            z = rng.standard_normal(2)
            u = rng.standard_normal(1)
            direct = sum(
                K.matrix_coefficient(H1, H1_DEC, eta, rho, (w,), z, u)
                for (w,) in K.level_multi_indices(n, 1)
            )
            closed = K.psi_closed_form(H1, H1_DEC, eta, rho, (n,), z, u)
            assert abs(direct - closed) <= 1e-9  # measured ~1e-13


def test_level_sum_matches_closed_form_n32_with_kernel_momentum():
    g, dec = G.builtin_group("n32")
    eta = np.array([0.4, -0.3, 0.8])
    rho = rho_in_kernel(g, dec, eta, [1.0, 2.0, -0.5])
    assert np.linalg.norm(rho) > 0.1
    rng = np.random.default_rng(11)
    for n in range(3):
        z = rng.standard_normal(3)
        u = rng.standard_normal(3)
        direct = sum(
            K.matrix_coefficient(g, dec, eta, rho, omega, z, u)
            for omega in K.level_multi_indices(n, 1)
        )
        closed = K.psi_closed_form(g, dec, eta, rho, (n,), z, u)
        assert abs(direct - closed) <= 1e-9


def test_level_sum_matches_closed_form_rank_two():
    g, dec = G.builtin_group("n32c")
    eta = np.array([0.5, -0.2, 0.3, 0.1, 0.4, -0.6])
    rho = rho_in_kernel(g, dec, eta, [0.3, -1.0, 0.8, 0.2, -0.4, 0.6])
    rng = np.random.default_rng(13)
    for n in range(3):
        z = rng.standard_normal(6) * 0.7
        u = rng.standard_normal(6) * 0.5
        direct = sum(
            K.matrix_coefficient(g, dec, eta, rho, omega, z, u)
            for omega in K.level_multi_indices(n, 2)
        )
        closed = K.psi_closed_form(g, dec, eta, rho, (n,), z, u)
        assert abs(direct - closed) <= 1e-9


def test_level_sum_at_origin_counts_multiplicity():
    # psi_n(0, 0) = prod_j C(n_j + r_j - 1, r_j - 1), the level multiplicity
    g, dec = G.builtin_group("n32c")
    eta = np.array([0.2, 0.1, -0.3, 0.4, 0.0, 0.5])
    rho = np.zeros(6)
    for n in range(5):
        val = K.psi_closed_form(g, dec, eta, rho, (n,), np.zeros(6), np.zeros(6))
        assert abs(val - (n + 1)) <= 1e-10
        assert len(K.level_multi_indices(n, 2)) == n + 1


def test_matrix_coefficient_normalization_and_bound():
    eta = np.array([0.9])
    rho = np.zeros(2)
    val = K.matrix_coefficient(H1, H1_DEC, eta, rho, (0,), np.zeros(2), np.zeros(1))
    assert abs(val - 1.0) <= 1e-12
    rng = np.random.default_rng(3)
    for _ in range(5):
        z = rng.standard_normal(2)
        u = rng.standard_normal(1)
        w = int(rng.integers(0, 6))
        assert abs(K.matrix_coefficient(H1, H1_DEC, eta, rho, (w,), z, u)) <= 1.0 + 1e-10


def test_momentum_outside_kernel_rejected():
    g, dec = G.builtin_group("n32")
    eta = np.array([0.9, 0.0, 0.0])  # ker J_eta is the third axis
    with pytest.raises(ValueError, match="ker"):
        K.matrix_coefficient(g, dec, eta, [1.0, 0.0, 0.0], (0,), np.zeros(3), np.zeros(3))


def test_level_index_validation():
    with pytest.raises(ValueError):
        K.psi_closed_form(H1, H1_DEC, [0.7], np.zeros(2), (0, 1), np.zeros(2), np.zeros(1))
    with pytest.raises(ValueError):
        K.matrix_coefficient(H1, H1_DEC, [0.7], np.zeros(2), (-1,), np.zeros(2), np.zeros(1))


# --- Plancherel ----------------------------------------------------------------


def test_plancherel_matches_h1_closed_form():
    # on the 3-d Heisenberg group the spectral-side norm collapses to
    # norm^2 = (1/16) int |F(lam)|^2 lam dlam
    F = bump()
    lo, hi = F.support
    rhs, _ = scipy_quad(lambda lam: F(np.array(lam)) ** 2 * lam, lo, hi, limit=200)
    want = math.sqrt(rhs / 16.0)
    got = K.plancherel_spectral_norm(
        H1, H1_DEC, F, quad=K.QuadratureSpec(rho_min_factor=1e-4, refine=False)
    )
    assert abs(got - want) <= 5e-4 * want  # measured 3e-5


def test_plancherel_scaling_in_multiplier():
    F = bump()
    quad = K.QuadratureSpec(rho_min_factor=1e-3, refine=False)
    one = K.plancherel_spectral_norm(H1, H1_DEC, F, quad=quad)
    three = K.plancherel_spectral_norm(
        H1, H1_DEC, M.Multiplier("x3", {}, F.support, fn=lambda lam: 3.0 * F.fn(lam)), quad=quad
    )
    assert abs(three - 3.0 * one) <= 1e-10 * one


def test_plancherel_rejects_tensor_symbols():
    with pytest.raises(NotImplementedError):
        K.plancherel_spectral_norm(H1, H1_DEC, K.TensorMultiplier((bump(),)))
