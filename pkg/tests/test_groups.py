"""Structure tests for the group layer.

Oracles: closed-form skew-map action on the matrix Heisenberg groups,
explicit 3x3 skew matrix for the free 2-step group on 3 generators,
eigenvalues via numpy on small matrices.
"""

import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nilspec import groups as G

RNG = np.random.default_rng(20240811)


def random_eta(dim_z, seed):
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(dim_z)
    return v / np.linalg.norm(v)


# --- closed-form oracles ----------------------------------------------------


def test_heisenberg_reiter_j_closed_form():
    """Identity metric: J_eta (x_j, y_j) = (-y_j eta, <eta, x_j>) per block."""
    g, _ = G.build_heisenberg_reiter(2, 3)
    eta = np.array([0.3, -1.1, 0.7])
    J = G.j_map(g, eta)
    x = RNG.standard_normal(g.dim_v)
    out = J @ x
    for j in range(2):
        base = j * 4
        xj, yj = x[base : base + 3], x[base + 3]
        assert np.allclose(out[base : base + 3], -yj * eta, atol=1e-12)
        assert np.isclose(out[base + 3], eta @ xj, atol=1e-12)


def test_n32_j_matrix():
    g, _ = G.build_n32()
    eta = np.array([2.0, -1.0, 0.5])
    # [e1,e2]=z1, [e1,e3]=z2, [e2,e3]=z3 gives this transposed-coefficient form
    expect = np.array(
        [
            [0.0, -eta[0], -eta[1]],
            [eta[0], 0.0, -eta[2]],
            [eta[1], eta[2], 0.0],
        ]
    )
    assert np.allclose(G.j_map(g, eta), expect, atol=1e-14)
    lam = np.sort(np.linalg.eigvalsh(-(expect @ expect)))
    assert np.allclose(lam, [0.0, eta @ eta, eta @ eta], atol=1e-12)


def test_heisenberg_frequencies_equal_eta_norm():
    for name in ("h1", "h12", "h23"):
        g, dec = G.builtin_group(name)
        eta = random_eta(g.dim_z, seed=7)
        sd = G.spectral_data(g, dec, eta)
        assert np.allclose(sd.b, np.linalg.norm(eta), rtol=1e-12)


# --- defining property and invariances (property-based) ----------------------


@settings(max_examples=60, deadline=None)
@given(
    name=st.sampled_from(["h1", "h12", "h23", "n32", "glued_h13_n32", "n32c"]),
    seed=st.integers(0, 10_000),
)
def test_j_defining_property(name, seed):
    """<J_eta x, y>_gram = eta([x, y]) for every group we ship."""
    g, _ = G.builtin_group(name)
    rng = np.random.default_rng(seed)
    eta = rng.standard_normal(g.dim_z)
    x = rng.standard_normal(g.dim_v)
    y = rng.standard_normal(g.dim_v)
    J = G.j_map(g, eta)
    lhs = (J @ x) @ g.gram @ y
    rhs = eta @ g.bracket_of(x, y)
    assert abs(lhs - rhs) <= 1e-10 * (1 + abs(rhs))


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_j_gram_skew_and_linearity(seed):
    rng = np.random.default_rng(seed)
    a = np.array([[1.7, 0.2, 0.0, 0.0], [0.2, 0.9, 0.0, 0.0], [0.0, 0.0, 1.0, 0.3], [0.0, 0.0, 0.3, 2.0]])
    g, _ = G.build_heisenberg_reiter(1, 3, metric=[a])
    e1, e2 = rng.standard_normal(3), rng.standard_normal(3)
    s, t = rng.standard_normal(2)
    J1, J2 = G.j_map(g, e1), G.j_map(g, e2)
    assert np.allclose(G.j_map(g, s * e1 + t * e2), s * J1 + t * J2, atol=1e-10)
    gj = g.gram @ J1
    assert np.abs(gj + gj.T).max() < 1e-10  # gram-skew-adjoint


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10_000), scale=st.floats(0.25, 8.0))
def test_spectral_homogeneity(seed, scale):
    """b is degree-1 homogeneous in eta; projections are scale invariant."""
    g, dec = G.builtin_group("n32")
    eta = random_eta(g.dim_z, seed)
    sd1 = G.spectral_data(g, dec, eta)
    sd2 = G.spectral_data(g, dec, scale * eta)
    assert np.allclose(np.array(sd2.b), scale * np.array(sd1.b), rtol=1e-10)
    for p1, p2 in zip(sd2.p_eta, sd1.p_eta):
        assert np.abs(p1 - p2).max() < 1e-9


def test_symplectic_frame_relations():
    g, dec = G.builtin_group("glued_h13_n32")
    eta = random_eta(g.dim_z, seed=3)
    sd = G.spectral_data(g, dec, eta)
    j_orth = g.j_orthonormal(eta)
    for b, w, p_mov, p_fix in zip(sd.b, sd.symplectic, sd.p_eta, sd.p_bar):
        assert np.allclose(w.T @ w, np.eye(w.shape[1]), atol=1e-10)
        for l in range(w.shape[1] // 2):
            e, ebar = w[:, 2 * l], w[:, 2 * l + 1]
            assert np.allclose(j_orth @ e, b * ebar, atol=1e-9)
            assert np.allclose(j_orth @ ebar, -b * e, atol=1e-9)
        assert np.allclose(w @ w.T, p_mov, atol=1e-9)
        # fixed part is the in-block kernel of J
        assert np.abs(j_orth @ p_fix).max() < 1e-9


def test_even_rank_everywhere():
    # skew matrices have even rank; the checker's rank test relies on it
    for name in ("h12", "n32", "glued_h13_n32"):
        g, _ = G.builtin_group(name)
        for seed in range(5):
            eta = random_eta(g.dim_z, seed)
            r = np.linalg.matrix_rank(g.j_orthonormal(eta), tol=1e-10)
            assert r % 2 == 0


# --- checker behaviour --------------------------------------------------------


def test_checker_accepts_shipped_groups():
    for name in ("h1", "h21", "n32", "glued_h1_h1"):
        g, dec = G.builtin_group(name)
        rep = G.check_assumption_a(g, dec, n_samples=60, seed=1)
        assert rep.holds, name
        assert rep.max_residual <= 1e-10
        assert rep.samples_tested >= 60


def test_checker_rejects_product_with_axis_witness():
    g, dec = G.builtin_group("h1xh1_product")
    rep = G.check_assumption_a(g, dec, n_samples=60, seed=1)
    assert not rep.holds
    w = rep.failure_witness
    assert w is not None
    # rank collapses on the center-dual axes; the witness is one of them
    assert np.isclose(np.abs(w).max(), 1.0) and np.isclose(np.linalg.norm(w), 1.0)


def test_checker_threaded_matches_serial():
    g, dec = G.builtin_group("h23")
    r1 = G.check_assumption_a(g, dec, n_samples=40, seed=9, threads=1)
    r4 = G.check_assumption_a(g, dec, n_samples=40, seed=9, threads=4)
    assert r1.holds == r4.holds
    assert np.isclose(r1.max_residual, r4.max_residual)


def test_wrong_rank_claim_is_refused():
    # claiming rank 2 where -J_eta^2 has rank 2r = 2 must raise
    g, _ = G.build_n32()
    bad = G.LayerDecomposition(projections=[np.eye(3)], ranks=[2], tdone=0)
    with pytest.raises(G.AssumptionViolated):
        G.spectral_data(g, bad, [1.0, 0.0, 0.0])


def test_misaligned_blocks_fail_the_checker():
    """Mixing the two factors of a glued pair breaks J-invariance."""
    g, _ = G.builtin_group("glued_h1_h1")
    p1 = np.diag([1.0, 0.0, 1.0, 0.0])
    p2 = np.diag([0.0, 1.0, 0.0, 1.0])
    dec = G.LayerDecomposition(projections=[p1, p2], ranks=[1, 1], tdone=0)
    dec.validate(4)  # shape-wise fine: dims 2 = 2r
    rep = G.check_assumption_a(g, dec, n_samples=20, seed=0)
    assert not rep.holds


def test_undersized_block_rejected_by_validate():
    dec = G.LayerDecomposition(
        projections=[np.diag([1.0, 1.0, 0.0]), np.diag([0.0, 0.0, 1.0])],
        ranks=[1, 1],
        tdone=0,
    )
    with pytest.raises(ValueError):
        dec.validate(3)  # the dim-1 block violates dim >= 2r


# --- constructors -------------------------------------------------------------


def test_complexify_bracket_is_complex_bilinear():
    g, _ = G.build_n32()
    gc, dec = G.complexify(g)
    assert gc.dim_v == 6 and gc.dim_z == 6
    assert dec is not None and dec.ranks == (2,)
    rng = np.random.default_rng(5)
    xr, xi, yr, yi = (rng.standard_normal(3) for _ in range(4))
    x = np.concatenate([xr, xi])
    y = np.concatenate([yr, yi])
    out = gc.bracket_of(x, y)
    re = g.bracket_of(xr, yr) - g.bracket_of(xi, yi)
    im = g.bracket_of(xr, yi) + g.bracket_of(xi, yr)
    assert np.allclose(out[:3], re, atol=1e-12)
    assert np.allclose(out[3:], im, atol=1e-12)


def test_complexify_no_candidate_when_rank_exceeds_two():
    g, _ = G.build_heisenberg_reiter(2, 1)  # J_eta has rank 4 here
    _, dec = G.complexify(g)
    assert dec is None


def test_glue_centers_pushes_bracket_through_phi():
    g1, d1 = G.build_heisenberg_reiter(1, 2)
    g2, d2 = G.build_heisenberg_reiter(1, 2)
    phi = np.array([[0.0, 1.0], [-1.0, 0.0]])
    g, dec = G.glue_centers(g1, g2, phi, d1, d2)
    x = np.zeros(g.dim_v)
    y = np.zeros(g.dim_v)
    x[0] = 1.0  # X_1 of the first factor
    y[2] = 1.0  # Y of the first factor
    assert np.allclose(g.bracket_of(x, y), phi @ np.array([1.0, 0.0]), atol=1e-14)
    # J splits: J_eta = J^1_{phi^T eta} x J^2_eta
    eta = np.array([0.4, 1.3])
    J = G.j_map(g, eta)
    J1 = G.j_map(g1, phi.T @ eta)
    J2 = G.j_map(g2, eta)
    assert np.allclose(J[:3, :3], J1, atol=1e-12)
    assert np.allclose(J[3:, 3:], J2, atol=1e-12)
    assert np.abs(J[:3, 3:]).max() < 1e-14


def test_glue_requires_matching_centers():
    g1, d1 = G.build_heisenberg_reiter(1, 1)
    g2, d2 = G.build_heisenberg_reiter(1, 2)
    with pytest.raises(ValueError):
        G.glue_centers(g1, g2, np.eye(1), d1, d2)


def test_direct_product_bracket_block_structure():
    g1, _ = G.build_heisenberg_reiter(1, 1)
    g2, _ = G.build_n32()
    g = G.direct_product(g1, g2)
    assert g.dim_v == 5 and g.dim_z == 4
    x = np.zeros(5)
    y = np.zeros(5)
    x[0], y[1] = 1.0, 1.0  # first-factor pair lands in first-factor center
    out = g.bracket_of(x, y)
    assert np.allclose(out, [1.0, 0, 0, 0], atol=1e-14)


def test_ordering_slack_blocks_first():
    # gluing a tight block group (h1) with a slack one (n32) must reorder
    g1, d1 = G.build_heisenberg_reiter(1, 1)
    g2, d2 = G.build_n32()
    dec = G.juxtapose_decompositions(d1, g1.dim_v, d2, g2.dim_v)
    assert dec.tdone == 1
    assert dec.block_dims()[0] == 3  # the slack n32 block moved to the front
    dec.validate(g1.dim_v + g2.dim_v)


# --- scaling and dimensions ---------------------------------------------------


def test_dimensions():
    g, _ = G.builtin_group("h23")
    assert G.dimensions(g) == (8 + 3, 8 + 6)
    g, _ = G.builtin_group("n32")
    assert G.dimensions(g) == (6, 9)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10_000), t=st.floats(0.1, 10.0))
def test_homogeneous_norm_scaling(seed, t):
    g, _ = G.builtin_group("h12")
    rng = np.random.default_rng(seed)
    z = rng.standard_normal(g.dim_v)
    u = rng.standard_normal(g.dim_z)
    n1 = G.homogeneous_norm(g, z, u)
    nt = G.homogeneous_norm(g, t * z, t * t * u)
    assert np.isclose(nt, t * n1, rtol=1e-10)


# --- JSON ---------------------------------------------------------------------


def test_json_roundtrip_all_builtins():
    for name in G.BUILTIN_GROUPS:
        g, dec = G.builtin_group(name)
        blob = json.dumps(G.group_to_json_dict(g, dec))
        g2, dec2 = G.group_from_json_dict(json.loads(blob))
        assert np.allclose(g2.bracket, g.bracket, atol=1e-14), name
        assert np.allclose(g2.gram, g.gram, atol=1e-14), name
        if dec is not None:
            assert dec2.ranks == dec.ranks and dec2.tdone == dec.tdone, name


def test_json_rejects_bad_input():
    base = G.group_to_json_dict(*G.builtin_group("h1"))
    bad = dict(base, bracket=[[1, 0, 0, 1.0]])  # a >= b
    with pytest.raises(ValueError):
        G.group_from_json_dict(bad)
    bad = dict(base, decomposition={"blocks": [[0]], "ranks": [1]})  # not a partition
    with pytest.raises(ValueError):
        G.group_from_json_dict(bad)
    # coupling blocks through the gram breaks orthogonality
    g, dec = G.build_heisenberg_reiter(2, 1)
    d = G.group_to_json_dict(g, dec)
    gram = np.eye(4)
    gram[0, 2] = gram[2, 0] = 0.5
    d["gram"] = gram.tolist()
    with pytest.raises(ValueError):
        G.group_from_json_dict(d)


def test_json_rejects_wrong_block_order():
    # a tight block (dim = 2r) listed before a slack one must be refused
    g1, _ = G.build_heisenberg_reiter(1, 1)
    g2, _ = G.build_heisenberg_reiter(1, 2)
    g = G.direct_product(g1, g2)
    blob = G.group_to_json_dict(g)
    blob["decomposition"] = {"blocks": [[0, 1], [2, 3, 4]], "ranks": [1, 1]}
    with pytest.raises(ValueError):
        G.group_from_json_dict(blob)


def test_builtin_registry_complete():
    for name in G.BUILTIN_GROUPS:
        g, dec = G.builtin_group(name)
        assert g.dim_v > 0
        if name != "h1xh1_product":
            assert dec is not None
