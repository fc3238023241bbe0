"""Convolution kernels of spectral multipliers via Laguerre expansion.

The kernel of H applied to the joint calculus is evaluated as

    K(z, u) = 2^|r| (2 pi)^{-dim G} int_{eta} int_{xi}
        sum_n m(n, (|Pbar_j xi|^2)_j, eta)
        prod_j scaled_L[n_j, r_j - 1](|P_j^eta xi|^2 / b_j^eta)
        e^{i<xi, z>} e^{i<eta, u>} dxi deta,

with the n-sum finite because the symbol is compactly supported. The
eta-integral runs in polar coordinates over [rho_min, rho_max] with
rho_max forced by the spectral lower bound; the xi-integral splits per
block into radial pieces whose angular parts are Bessel phase factors.
The heavy step, summing the Laguerre series into radial tables before
any point-dependent work, is what makes grids of points cheap.

Cross-checks live beside the expansion: diagonal matrix coefficients by
direct Gauss-Hermite quadrature, their level sums by an independent
2|r|-dimensional Fourier-Laguerre integral, the spectral-side
Plancherel norm, and a closed-form heat-kernel oracle on the smallest
Heisenberg group.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.integrate import quad as scipy_quad
from scipy.special import binom

from .groups import (
    LayerDecomposition,
    SpectralData,
    StratifiedGroup2,
    spectral_bound_constant,
    spectral_data,
)
from .multipliers import JointMultiplier, Multiplier, ReparametrizedSymbol
from .quadrature import (
    gl_on_interval,
    log_panel_rule,
    sphere_phase_factor,
    sphere_rule,
)
from .specfun import fourier_wigner_hermite, laguerre_fn_rows, laguerre_weighted_sum

__all__ = [
    "QuadratureSpec",
    "KernelGrid",
    "ProductKernelGrid",
    "TensorMultiplier",
    "AccuracyError",
    "eval_kernel",
    "eval_kernel_product",
    "matrix_coefficient",
    "psi_closed_form",
    "plancherel_spectral_norm",
    "heat_kernel_h1_oracle",
    "HEAT_H1_ORIGIN_T1",
]

# frozen regression constant: heat kernel at the identity, T = 1
# (two independent quadratures of the closed 1-d integral agree to 1e-10;
# the exact value is 1/16)
HEAT_H1_ORIGIN_T1 = 0.0625


@dataclass(frozen=True)
class TensorMultiplier:
    """H(lam_1, .., lam_d1) = prod_j F_j(lam_j), one factor per block."""

    factors: tuple

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple(self.factors))
        for f in self.factors:
            if not isinstance(f, Multiplier):
                raise TypeError("tensor factors must be Multiplier instances")

    @property
    def k_hi(self) -> float:
        return sum(f.k_hi for f in self.factors)

    @property
    def support(self) -> tuple:
        return (0.0, self.k_hi)


@dataclass(frozen=True)
class QuadratureSpec:
    """Node counts and truncation policy for kernel quadrature.

    The Laguerre truncation is support-exact per block and per eta:
    n_max_j = floor((K_hi / b_j - r_j) / 2), never a tolerance. Radial
    and angular node counts escalate linearly with the largest phase
    (0.45 nodes per radian) so oscillatory integrands stay resolved.
    """

    eta_sphere_nodes: int = 24
    eta_panels_per_decade: int = 3
    eta_radial_base: int = 14
    rho_min_factor: float = 1e-4
    rho_min: float | None = None  # absolute override
    xi_base: int = 70
    osc_per_radian: float = 0.45
    tail_tol: float = 1e-3
    refine: bool = True
    refine_factor: float = 1.4
    coupled_cap: int = 4_000_000  # max entries of a coupled coefficient matrix

    def __post_init__(self):
        if self.eta_sphere_nodes < 2 or self.eta_radial_base < 2 or self.xi_base < 2:
            raise ValueError("all node counts must be >= 2")
        if self.rho_min is not None and self.rho_min <= 0:
            raise ValueError("rho_min must be positive")
        if self.rho_min_factor <= 0:
            raise ValueError("rho_min_factor must be positive")

    def scaled(self, c: float) -> "QuadratureSpec":
        return replace(
            self,
            eta_sphere_nodes=int(math.ceil(self.eta_sphere_nodes * c)),
            eta_radial_base=int(math.ceil(self.eta_radial_base * c)),
            xi_base=int(math.ceil(self.xi_base * c)),
            refine=False,
        )


@dataclass
class KernelGrid:
    """Kernel samples with their quadrature pedigree.

    est_error is the maximum relative two-level refinement disagreement
    (relative to the largest sampled magnitude). coarse_values holds the
    lower-resolution sweep when refinement ran.
    """

    points: tuple
    values: np.ndarray
    quad: QuadratureSpec
    group_label: str
    multiplier_tag: str
    est_error: float = 0.0
    coarse_values: np.ndarray | None = None


@dataclass
class ProductKernelGrid:
    """Kernel on a z-lattice x u-lattice, values[i, j] = K(z_i, u_j).

    The eta-integrand separates into a z-only radial factor and a
    u-only center phase, so a product lattice costs one thin matrix
    product per eta-node block instead of per-point work. This is the
    workhorse behind every lattice integral in the estimates layer.
    """

    z_points: np.ndarray
    u_points: np.ndarray
    values: np.ndarray
    quad: QuadratureSpec
    group_label: str
    multiplier_tag: str
    est_error: float = 0.0
    coarse_values: np.ndarray | None = None


class AccuracyError(RuntimeError):
    """Two-level quadrature refinement disagreed beyond tail_tol."""

    def __init__(self, message: str, fine: np.ndarray, coarse: np.ndarray, est_error: float):
        super().__init__(message)
        self.fine = fine
        self.coarse = coarse
        self.est_error = est_error


def _laguerre_t_cap(n_max: int, k: int) -> float:
    """Upper end of the oscillatory support of scaled_L[n, k](t).

    Beyond 2n + k plus an Airy-zone margin the function is
    exponentially small; the margin follows the (2n)^{1/3} edge width.
    """
    e = 2.0 * n_max + k + 1.0
    return e + 8.0 * e ** (1.0 / 3.0) + 20.0


def _k_hi_of(H) -> float:
    if isinstance(H, TensorMultiplier):
        return H.k_hi
    if isinstance(H, JointMultiplier):
        return H.base.k_hi
    return H.k_hi


def _block_geometry(g, dec, sd, z_orth_points):
    """Per-block norms |P_j^eta z| and |Pbar_j z| for every point."""
    moving, slack = [], []
    for j, p in enumerate(sd.p_eta):
        zz = z_orth_points @ p.T
        moving.append(np.linalg.norm(zz, axis=1))
        pb = sd.p_bar[j]
        slack.append(np.linalg.norm(z_orth_points @ pb.T, axis=1))
    return moving, slack


def _pairwise_axis0(parts: np.ndarray) -> np.ndarray:
    """Pairwise reduction along axis 0, deterministic for a fixed job list."""
    a = parts
    while a.shape[0] > 1:
        half = a.shape[0] // 2
        head = a[: 2 * half].reshape(half, 2, *a.shape[1:]).sum(axis=1)
        a = np.concatenate([head, a[2 * half :]], axis=0)
    return a[0]


def _radial_grid(s_max: float, phase_max: float, quad: QuadratureSpec, n_lag: int = 0):
    # n_lag: the radial table can carry up to ~n_max intrinsic sign changes
    # when the symbol picks out few Laguerre levels. Large n_max means a
    # dense lattice whose smooth cross-level cancellation needs no extra
    # nodes, so the cushion only engages at moderate degree.
    cushion = min(n_lag, 200) if n_lag <= 2000 else 0
    n = max(quad.xi_base, int(quad.osc_per_radian * phase_max) + 40 + cushion)
    return gl_on_interval(0.0, s_max, n)


def _block_tables(
    F_of_total,
    b: float,
    r: int,
    q: int,
    k_hi: float,
    zmax: float,
    zbar_max: float,
    quad: QuadratureSpec,
    lam_offset: float = 0.0,
):
    """Radial tables for one block under a separable symbol.

    Returns (s, ws, mu_nodes, wmu, S) where S[mu_idx, s_idx] is
    sum_n F(lam_offset + (2n+r) b + mu) scaled_L[n, r-1](s^2 / b);
    for q = 0 the mu axis has the single entry mu = 0.
    """
    n_max = int(math.floor((k_hi / b - r) / 2.0))
    if n_max < 0:
        return None
    t_cap = _laguerre_t_cap(n_max, r - 1)
    s_max = math.sqrt(b * t_cap)
    s, ws = _radial_grid(s_max, s_max * zmax, quad, n_lag=n_max)
    if q > 0:
        mu_top = math.sqrt(max(k_hi - r * b, 0.0))
        n_mu = max(30, int(quad.osc_per_radian * mu_top * zbar_max) + 20)
        mu_nodes, wmu = gl_on_interval(0.0, mu_top, n_mu)
    else:
        mu_nodes, wmu = np.zeros(1), np.ones(1)
    lam = lam_offset + (2.0 * np.arange(n_max + 1)[:, None] + r) * b + mu_nodes[None, :] ** 2
    coefs = np.asarray(F_of_total(lam))
    t = s * s / b
    S = laguerre_weighted_sum(coefs, r - 1, t)  # (n_mu, n_s)
    return s, ws, mu_nodes, wmu, S


def _contract_block(s, ws, mu_nodes, wmu, S, r, q, znorm, zbarnorm):
    """Radial table -> per-point block factor (moving and slack parts).

    Bessel phase factors depend on the points only through their block
    norms, so repeated norms (symmetric lattices) are evaluated once.
    """
    zu, zi = np.unique(np.round(znorm, 14), return_inverse=True)
    ang = sphere_phase_factor(2 * r, np.outer(zu, s))  # (U, n_s)
    per_mu = ((ws * s ** (2 * r - 1)) * ang) @ S.T  # (U, n_mu)
    if q > 0:
        bu, bi = np.unique(np.round(zbarnorm, 14), return_inverse=True)
        ang_bar = sphere_phase_factor(q, np.outer(bu, mu_nodes))
        wbar = wmu * mu_nodes ** (q - 1) if q > 1 else wmu
        return np.sum(per_mu[zi] * (wbar * ang_bar)[bi], axis=1)
    return per_mu[zi, 0]


def _xi_inner(g, dec, H, sd, z_orth_points, quad: QuadratureSpec):
    """xi-integral of the Laguerre sum at one eta, for every point."""
    ranks = dec.ranks
    n_blocks = len(ranks)
    dims = dec.block_dims()
    qs = [d - 2 * r for d, r in zip(dims, ranks)]
    moving, slack = _block_geometry(g, dec, sd, z_orth_points)
    n_pts = z_orth_points.shape[0]
    k_hi = _k_hi_of(H)

    if isinstance(H, TensorMultiplier):
        if len(H.factors) != n_blocks:
            raise ValueError("tensor multiplier needs one factor per block")
        out = np.ones(n_pts)
        for j in range(n_blocks):
            tab = _block_tables(
                H.factors[j].fn,
                sd.b[j],
                ranks[j],
                qs[j],
                H.factors[j].k_hi,
                float(moving[j].max(initial=0.0)),
                float(slack[j].max(initial=0.0)),
                quad,
            )
            if tab is None:
                return np.zeros(n_pts)
            out = out * _contract_block(*tab, ranks[j], qs[j], moving[j], slack[j])
        return out

    F = H.base if isinstance(H, JointMultiplier) else H

    if n_blocks == 1:
        tab = _block_tables(
            F.fn,
            sd.b[0],
            ranks[0],
            qs[0],
            k_hi,
            float(moving[0].max(initial=0.0)),
            float(slack[0].max(initial=0.0)),
            quad,
        )
        if tab is None:
            return np.zeros(n_pts)
        return _contract_block(*tab, ranks[0], qs[0], moving[0], slack[0])

    if n_blocks == 2 and qs[0] == 0 and qs[1] == 0:
        # coupled two-block sum: S = L1^T C L2, then per-point Bessel rows
        b1, b2 = sd.b
        r1, r2 = ranks
        n1 = int(math.floor((k_hi / b1 - r1) / 2.0))
        n2 = int(math.floor((k_hi / b2 - r2) / 2.0))
        if n1 < 0 or n2 < 0:
            return np.zeros(n_pts)
        if (n1 + 1) * (n2 + 1) > quad.coupled_cap:
            raise ValueError(
                "coupled two-block lattice too large; raise rho_min or use a "
                "tensor-product symbol"
            )
        lam1 = (2.0 * np.arange(n1 + 1) + r1) * b1
        lam2 = (2.0 * np.arange(n2 + 1) + r2) * b2
        C = np.asarray(F.fn(lam1[:, None] + lam2[None, :]))
        smax1 = math.sqrt(b1 * _laguerre_t_cap(n1, r1 - 1))
        smax2 = math.sqrt(b2 * _laguerre_t_cap(n2, r2 - 1))
        s1, w1 = _radial_grid(smax1, smax1 * float(moving[0].max(initial=0.0)), quad, n_lag=n1)
        s2, w2 = _radial_grid(smax2, smax2 * float(moving[1].max(initial=0.0)), quad, n_lag=n2)
        L1 = laguerre_fn_rows(n1, r1 - 1, s1 * s1 / b1)  # (n1+1, n_s1)
        L2 = laguerre_fn_rows(n2, r2 - 1, s2 * s2 / b2)
        S = L1.T @ C @ L2  # (n_s1, n_s2)
        B1 = (w1 * s1 ** (2 * r1 - 1)) * sphere_phase_factor(2 * r1, np.outer(moving[0], s1))
        B2 = (w2 * s2 ** (2 * r2 - 1)) * sphere_phase_factor(2 * r2, np.outer(moving[1], s2))
        return np.sum((B1 @ S) * B2, axis=1)

    raise NotImplementedError(
        "coupled symbols are supported for one block (any slack) or two "
        "tight blocks; use a TensorMultiplier for wider products"
    )


def _angular_rule(dim_z: int, rho: float, u_max: float, base: int):
    """Sphere rule resolving the center phase e^{i rho <dir, u>}.

    The integrand in the direction variable has angular bandwidth
    ~ rho * u_max (Bessel-series truncation), so the node count grows
    linearly with it plus an edge margin; dim 1 is the exact two-point
    sphere.
    """
    if dim_z == 1:
        return sphere_rule(1, 2)
    phase = rho * u_max
    edge = 7.0 * phase ** (1.0 / 3.0) + 4.0
    if dim_z == 2:
        # multiples of 4 keep midpoint angles off the coordinate axes,
        # where J_eta may degenerate (a.e. statements stay a.e.)
        n = int(base + phase + edge)
        return sphere_rule(2, n + (-n) % 4)
    # product rule: theta count is n/4, so scale up to keep both factors
    n = int(4 * (base // 4 + 1) + 4 * (0.9 * phase + edge))
    return sphere_rule(3, n + (-n) % 4)


def _eta_nodes(g, H, quad: QuadratureSpec, C: float, u_max: float):
    """(direction, weight, rho) eta-quadrature nodes, or None if empty.

    Radial: geometric panels on [rho_min, rho_max] with node counts
    following the radial phase bandwidth u_max. Angular: per-radius
    sphere rules following the angular bandwidth rho * u_max.
    """
    k_hi = _k_hi_of(H)
    rho_max = C * k_hi
    rho_min = quad.rho_min if quad.rho_min is not None else quad.rho_min_factor * rho_max
    if isinstance(H, JointMultiplier):
        lo, hi = H.eta_support
        rho_min = max(rho_min, lo)
        rho_max = min(rho_max, hi)
        if rho_min >= rho_max:
            return None
    rhos, wrhos = log_panel_rule(
        rho_min,
        rho_max,
        panels_per_decade=quad.eta_panels_per_decade,
        base_nodes=quad.eta_radial_base,
        phase_scale=u_max,
    )
    nodes = []
    for j in range(len(rhos)):
        rho = float(rhos[j])
        dirs, wdirs = _angular_rule(g.dim_z, rho, u_max, quad.eta_sphere_nodes)
        for i in range(len(dirs)):
            nodes.append((dirs[i], wdirs[i] * wrhos[j], rho))
    return nodes


def _eval_once(g, dec, H, points, quad: QuadratureSpec, threads: int) -> np.ndarray:
    z_pts = np.array([g.to_orthonormal(np.asarray(z, dtype=float)) for z, _ in points])
    u_pts = np.array([np.atleast_1d(np.asarray(u, dtype=float)) for _, u in points])
    n_pts = len(points)
    C = spectral_bound_constant(g, dec)
    u_max = float(np.linalg.norm(u_pts, axis=1).max(initial=0.0))
    nodes = _eta_nodes(g, H, quad, C, u_max)
    if nodes is None:
        return np.zeros(n_pts, dtype=complex)

    eta_factor = None
    if isinstance(H, JointMultiplier):
        eta_factor = H.eta_factor

    def node_contribution(node):
        direction, w, rho = node
        sd = spectral_data(g, dec, rho * direction)
        inner = _xi_inner(g, dec, H, sd, z_pts, quad)
        w = w * rho ** (g.dim_z - 1)
        if eta_factor is not None:
            w = w * float(eta_factor(np.array(rho)))
        phase = np.exp(1j * rho * (u_pts @ direction))
        return w * inner * phase

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            parts = list(ex.map(node_contribution, nodes))
    else:
        parts = [node_contribution(nd) for nd in nodes]
    total = _pairwise_axis0(np.stack(parts, axis=0))
    r_total = sum(dec.ranks)
    pref = 2.0**r_total * (2.0 * math.pi) ** (-(g.dim_v + g.dim_z))
    return pref * total


def eval_kernel(
    g: StratifiedGroup2,
    dec: LayerDecomposition,
    H,
    points,
    quad: QuadratureSpec | None = None,
    threads: int = 1,
    raise_on_disagreement: bool = False,
) -> KernelGrid:
    """Kernel samples K(z, u) at the given (z, u) points.

    H may be a Multiplier (acting through the total spectral sum), a
    JointMultiplier (extra radial |eta| factor), or a TensorMultiplier
    (one factor per block). With quad.refine set, the whole sweep runs
    again at refine_factor more nodes; the disagreement becomes
    est_error and, if raise_on_disagreement and it exceeds tail_tol,
    an AccuracyError carrying both value sets.
    """
    if quad is None:
        quad = QuadratureSpec()
    points = tuple((np.asarray(z, dtype=float), np.asarray(u, dtype=float)) for z, u in points)
    fine = _eval_once(g, dec, H, points, quad.scaled(quad.refine_factor) if quad.refine else quad, threads)
    est = 0.0
    coarse = None
    if quad.refine:
        coarse = _eval_once(g, dec, H, points, quad, threads)
        scale = max(float(np.abs(fine).max(initial=0.0)), 1e-300)
        est = float(np.abs(fine - coarse).max(initial=0.0) / scale)
        if raise_on_disagreement and est > quad.tail_tol:
            raise AccuracyError(
                f"refinement disagreement {est:.3e} exceeds tail_tol {quad.tail_tol:.3e}",
                fine,
                coarse,
                est,
            )
    tag = getattr(H, "family", None) or getattr(H, "tag", "") or type(H).__name__
    return KernelGrid(
        points=points,
        values=fine,
        quad=quad,
        group_label=g.label,
        multiplier_tag=str(tag),
        est_error=est,
        coarse_values=coarse,
    )


def _eval_product_once(g, dec, H, z_orth, u_pts, quad: QuadratureSpec, threads: int):
    n_z, n_u = z_orth.shape[0], u_pts.shape[0]
    C = spectral_bound_constant(g, dec)
    u_max = float(np.linalg.norm(u_pts, axis=1).max(initial=0.0))
    nodes = _eta_nodes(g, H, quad, C, u_max)
    if nodes is None:
        return np.zeros((n_z, n_u), dtype=complex)
    eta_factor = H.eta_factor if isinstance(H, JointMultiplier) else None

    def chunk_product(chunk):
        rows = []  # stacked afterwards so complex symbols keep their dtype
        B = np.empty((len(chunk), n_u), dtype=complex)
        for k, (direction, w, rho) in enumerate(chunk):
            sd = spectral_data(g, dec, rho * direction)
            inner = _xi_inner(g, dec, H, sd, z_orth, quad)
            wk = w * rho ** (g.dim_z - 1)
            if eta_factor is not None:
                wk *= float(eta_factor(np.array(rho)))
            rows.append(wk * inner)
            B[k] = np.exp(1j * rho * (u_pts @ direction))
        return np.stack(rows).T @ B

    chunk_size = 64
    chunks = [nodes[i : i + chunk_size] for i in range(0, len(nodes), chunk_size)]
    total = np.zeros((n_z, n_u), dtype=complex)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            futures = [ex.submit(chunk_product, c) for c in chunks]
            for f in futures:  # fixed submission order: deterministic reduction
                total += f.result()
    else:
        for c in chunks:
            total += chunk_product(c)
    pref = 2.0 ** sum(dec.ranks) * (2.0 * math.pi) ** (-(g.dim_v + g.dim_z))
    return pref * total


def eval_kernel_product(
    g: StratifiedGroup2,
    dec: LayerDecomposition,
    H,
    z_points,
    u_points,
    quad: QuadratureSpec | None = None,
    threads: int = 1,
    raise_on_disagreement: bool = False,
) -> ProductKernelGrid:
    """K on all pairs (z_i, u_j) of a z-lattice and a u-lattice."""
    if quad is None:
        quad = QuadratureSpec()
    z_points = np.atleast_2d(np.asarray(z_points, dtype=float))
    u_points = np.atleast_2d(np.asarray(u_points, dtype=float))
    z_orth = np.array([g.to_orthonormal(z) for z in z_points])
    fine = _eval_product_once(
        g, dec, H, z_orth, u_points, quad.scaled(quad.refine_factor) if quad.refine else quad, threads
    )
    est = 0.0
    coarse = None
    if quad.refine:
        coarse = _eval_product_once(g, dec, H, z_orth, u_points, quad, threads)
        scale = max(float(np.abs(fine).max(initial=0.0)), 1e-300)
        est = float(np.abs(fine - coarse).max(initial=0.0) / scale)
        if raise_on_disagreement and est > quad.tail_tol:
            raise AccuracyError(
                f"refinement disagreement {est:.3e} exceeds tail_tol {quad.tail_tol:.3e}",
                fine,
                coarse,
                est,
            )
    tag = getattr(H, "family", None) or getattr(H, "tag", "") or type(H).__name__
    return ProductKernelGrid(
        z_points=z_points,
        u_points=u_points,
        values=fine,
        quad=quad,
        group_label=g.label,
        multiplier_tag=str(tag),
        est_error=est,
        coarse_values=coarse,
    )


# ---------------------------------------------------------------------------
# representation-theoretic cross-checks


def _split_omega(omega, ranks):
    omega = [int(w) for w in np.atleast_1d(omega)]
    if len(omega) != sum(ranks) or any(w < 0 for w in omega):
        raise ValueError("omega must be a nonnegative multi-index of length sum(r_j)")
    out = []
    pos = 0
    for r in ranks:
        out.append(omega[pos : pos + r])
        pos += r
    return out


def _check_rho(g, sd: SpectralData, rho):
    rho_orth = g.to_orthonormal(np.asarray(rho, dtype=float))
    j_orth = g.j_orthonormal(sd.eta)
    jnorm = max(float(np.abs(j_orth).max()), 1e-300)
    drift = float(np.linalg.norm(j_orth @ rho_orth))
    if drift > 1e-6 * jnorm * max(np.linalg.norm(rho_orth), 1.0):
        raise ValueError("rho must lie in ker J_eta")
    # snap exactly onto the kernel
    pbar = sd.pbar_total()
    return pbar @ rho_orth


def matrix_coefficient(
    g: StratifiedGroup2,
    dec: LayerDecomposition,
    eta,
    rho,
    omega,
    z,
    u,
    quad: int = 400,
) -> complex:
    """Diagonal coefficient <pi_{eta,rho}(z,u) h_omega, h_omega>.

    Brute-force route: the inner product factorizes over the symplectic
    pairs (E_l, Ebar_l) of each block, each factor being a shifted
    Hermite-pair integral evaluated by Gauss-Hermite quadrature (the
    same transform whose closed form is a Laguerre function; computing
    it by quadrature keeps this route independent of the expansion).
    """
    sd = spectral_data(g, dec, np.asarray(eta, dtype=float))
    rho_orth = _check_rho(g, sd, rho)
    z_orth = g.to_orthonormal(np.asarray(z, dtype=float))
    u = np.atleast_1d(np.asarray(u, dtype=float))
    blocks = _split_omega(omega, dec.ranks)
    phase = np.exp(1j * float(sd.eta @ u)) * np.exp(1j * float(rho_orth @ z_orth))
    val = 1.0
    for j, (b, w_mat) in enumerate(zip(sd.b, sd.symplectic)):
        for l in range(dec.ranks[j]):
            e_col = w_mat[:, 2 * l]
            ebar_col = w_mat[:, 2 * l + 1]
            z_l = float(e_col @ z_orth)
            zbar_l = float(ebar_col @ z_orth)
            sb = math.sqrt(b)
            val *= fourier_wigner_hermite(
                blocks[j][l], sb * zbar_l / 2.0, sb * z_l / 2.0, n_nodes=quad
            )
    return complex(phase * val)


def psi_closed_form(
    g: StratifiedGroup2,
    dec: LayerDecomposition,
    eta,
    rho,
    n,
    z,
    u,
    quad: int = 240,
) -> complex:
    """Level sum of diagonal coefficients via the Fourier-Laguerre integral.

    psi(z, u) = phase * prod_j (pi b_j)^{-r_j} *
        int_{R^{2 r_j}} scaled_L[n_j, r_j - 1](|zeta|^2 / b_j)
                        e^{i <zeta, w_j>} dzeta,
    with |w_j| = |P_j^eta z|. Each block integral collapses to a radial
    one against the 2 r_j-dimensional Bessel phase factor. Contract:
    equals the sum of matrix_coefficient over all omega with per-block
    level sums |omega_j| = n_j.
    """
    sd = spectral_data(g, dec, np.asarray(eta, dtype=float))
    rho_orth = _check_rho(g, sd, rho)
    z_orth = g.to_orthonormal(np.asarray(z, dtype=float))
    u = np.atleast_1d(np.asarray(u, dtype=float))
    n = [int(v) for v in np.atleast_1d(n)]
    if len(n) != dec.n_blocks or any(v < 0 for v in n):
        raise ValueError("n must be a nonnegative multi-index, one entry per block")
    phase = np.exp(1j * float(sd.eta @ u)) * np.exp(1j * float(rho_orth @ z_orth))
    val = 1.0
    for j, (b, r) in enumerate(zip(sd.b, dec.ranks)):
        w_j = float(np.linalg.norm(sd.p_eta[j] @ z_orth))
        t_cap = _laguerre_t_cap(n[j], r - 1)
        s_max = math.sqrt(b * t_cap)
        n_nodes = max(quad, int(0.45 * s_max * w_j) + 60)
        s, ws = gl_on_interval(0.0, s_max, n_nodes)
        lag = laguerre_fn_rows(n[j], r - 1, s * s / b)[n[j]]
        ang = sphere_phase_factor(2 * r, s * w_j)
        integral = float(np.sum(ws * s ** (2 * r - 1) * lag * ang))
        val *= integral / (math.pi * b) ** r
    return complex(phase * val)


def level_multi_indices(n: int, r: int) -> list:
    """All omega in N^r with |omega| = n (compositions of n into r parts)."""
    if r == 1:
        return [(n,)]
    out = []
    for first in range(n + 1):
        for rest in level_multi_indices(n - first, r - 1):
            out.append((first,) + rest)
    return out


# ---------------------------------------------------------------------------
# Plancherel


def plancherel_spectral_norm(
    g: StratifiedGroup2,
    dec: LayerDecomposition,
    H,
    quad: QuadratureSpec | None = None,
) -> float:
    """Spectral-side L2 norm of the kernel.

    norm^2 = (2 pi)^{|r| - dim G} int_eta int_{ker J_eta}
        sum_n prod_j C(n_j + r_j - 1, r_j - 1) |m(n, mu(rho), eta)|^2
        prod_j (b_j^eta)^{r_j} drho deta,
    the multiplicity being the number of omega at each level. The
    rho-integral factorizes over slack blocks in polar coordinates.
    """
    if quad is None:
        quad = QuadratureSpec()
    if isinstance(H, TensorMultiplier):
        raise NotImplementedError(
            "tensor symbols need per-block spectral arguments here; compare "
            "factors blockwise or use the grid side"
        )
    F = H.base if isinstance(H, JointMultiplier) else H
    k_hi = _k_hi_of(H)
    C = spectral_bound_constant(g, dec)
    rho_max = C * k_hi
    rho_min = quad.rho_min if quad.rho_min is not None else quad.rho_min_factor * rho_max
    eta_lo, eta_hi = rho_min, rho_max
    eta_factor = None
    if isinstance(H, JointMultiplier):
        eta_factor = H.eta_factor
        eta_lo = max(eta_lo, H.eta_support[0])
        eta_hi = min(eta_hi, H.eta_support[1])
        if eta_lo >= eta_hi:
            return 0.0
    n_dir = quad.eta_sphere_nodes + (-quad.eta_sphere_nodes) % 4
    dirs, wdirs = sphere_rule(g.dim_z, n_dir)
    rhos, wrhos = log_panel_rule(
        eta_lo, eta_hi, quad.eta_panels_per_decade, quad.eta_radial_base
    )
    ranks = dec.ranks
    dims = dec.block_dims()
    qs = [d - 2 * r for d, r in zip(dims, ranks)]

    def block_lattice(bj: float, rj: int, qj: int, budget: float):
        """Flattened (lam, weight) pairs for one block's (n, mu) grid.

        weight = level multiplicity * polar mu-quadrature weight; entries
        with lam beyond the remaining budget are dropped.
        """
        n_top = int(math.floor((budget / bj - rj) / 2.0))
        if n_top < 0:
            return None
        n = np.arange(n_top + 1)
        mult = binom(n + rj - 1, rj - 1) if rj > 1 else np.ones(n_top + 1)
        lam_n = (2.0 * n + rj) * bj
        if qj == 0:
            return lam_n, mult
        top = math.sqrt(max(budget - rj * bj, 0.0))
        nodes, ws = gl_on_interval(0.0, max(top, 1e-12), 48)
        area = 2.0 * math.pi ** (qj / 2.0) / math.gamma(qj / 2.0)
        wmu = ws * area * nodes ** (qj - 1)
        lam = (lam_n[:, None] + (nodes**2)[None, :]).ravel()
        w = (mult[:, None] * wmu[None, :]).ravel()
        keep = lam <= budget
        return lam[keep], w[keep]

    total = 0.0
    for d_idx in range(len(dirs)):
        direction = dirs[d_idx]
        for r_idx in range(len(rhos)):
            rho = float(rhos[r_idx])
            eta = rho * direction
            sd = spectral_data(g, dec, eta)
            b = sd.b
            lam_tot = np.zeros(1)
            w_tot = np.ones(1)
            empty = False
            for j in range(len(ranks)):
                blk = block_lattice(b[j], ranks[j], qs[j], k_hi)
                if blk is None:
                    empty = True
                    break
                lam_j, w_j = blk
                if lam_tot.size * lam_j.size > 50_000_000:
                    raise ValueError(
                        "spectral lattice too large at small |eta|; raise rho_min"
                    )
                lam_tot = (lam_tot[:, None] + lam_j[None, :]).ravel()
                w_tot = (w_tot[:, None] * w_j[None, :]).ravel()
                keep = lam_tot <= k_hi
                lam_tot, w_tot = lam_tot[keep], w_tot[keep]
                if lam_tot.size == 0:
                    empty = True
                    break
            inner = 0.0
            if not empty:
                vals = np.abs(np.asarray(F.fn(lam_tot))) ** 2
                inner = float(w_tot @ vals)
            w = wdirs[d_idx] * wrhos[r_idx] * rho ** (g.dim_z - 1)
            if eta_factor is not None:
                w *= float(eta_factor(np.array(rho))) ** 2
            w *= math.prod(bb**rr for bb, rr in zip(b, ranks))
            total += w * inner
    r_total = sum(ranks)
    pref = (2.0 * math.pi) ** (r_total - (g.dim_v + g.dim_z))
    return math.sqrt(max(pref * total, 0.0))


# ---------------------------------------------------------------------------
# heat oracle on the smallest Heisenberg group


def _heat_integrand(lam: float, T: float, zsq: float, u: float) -> float:
    if lam == 0.0:
        return (1.0 / T) * math.exp(-zsq / (4.0 * T))
    s = lam / math.sinh(lam * T)
    return s * math.exp(-0.25 * lam * (math.cosh(lam * T) / math.sinh(lam * T)) * zsq) * math.cos(lam * u)


def heat_kernel_h1_oracle(T: float, z, u: float, method: str = "quad") -> float:
    """Closed-form heat kernel on the 3-dimensional Heisenberg group.

    K_T(z, u) = (1/(8 pi^2)) int_R (lam / sinh(lam T))
                e^{-(lam coth(lam T)/4) |z|^2} e^{i lam u} dlam,
    evaluated as twice the cosine half-line integral. Two quadrature
    routes are provided; they agree to 1e-10 and pin the frozen origin
    value 1/16 at T = 1. Completely independent of the Laguerre
    machinery: its only input is the classical 1-d integral formula.
    """
    if T <= 0:
        raise ValueError("T must be positive")
    z = np.asarray(z, dtype=float)
    zsq = float(z @ z)
    u = float(np.atleast_1d(u)[0]) if np.ndim(u) else float(u)
    cut = 60.0 / T  # integrand ~ 2 lam e^{-lam T} beyond the knee
    if method == "quad":
        val, _ = scipy_quad(
            _heat_integrand, 0.0, cut, args=(T, zsq, u), limit=400, epsabs=1e-13, epsrel=1e-12
        )
    elif method == "panels":
        edges = np.linspace(0.0, cut, 48)
        val = 0.0
        for a, b in zip(edges[:-1], edges[1:]):
            x, w = gl_on_interval(a, b, 24)
            val += float(np.sum(w * [_heat_integrand(xx, T, zsq, u) for xx in x]))
    else:
        raise ValueError("method must be 'quad' or 'panels'")
    return 2.0 * val / (8.0 * math.pi**2)
