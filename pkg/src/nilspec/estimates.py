"""Weighted L2 estimates, the dyadic scaling law, and the L1 chain.

Everything here reduces to lattice integrals of kernels produced by the
evaluation layer. The error budget of a weighted integral is dominated
by the truncated tail, not by the trapezoid order, so every integral
carries an outermost-shell estimate and the drivers widen the lattice
(doubling extents at fixed spacing) until that estimate drops below 5%.

Node spacings are chosen from bandwidth: |K|^2 oscillates at twice the
kernel's top frequency, which is C * K_hi in the center variable and
roughly sqrt(K_hi) in the first-layer variable.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .groups import (
    LayerDecomposition,
    StratifiedGroup2,
    direct_product,
    juxtapose_decompositions,
    spectral_bound_constant,
)
from .kernels import (
    ProductKernelGrid,
    QuadratureSpec,
    TensorMultiplier,
    eval_kernel,
    eval_kernel_product,
    plancherel_spectral_norm,
)
from .multipliers import (
    JointMultiplier,
    Multiplier,
    gaussian_bump,
    oscillate,
    sobolev_norm,
    truncate_dyadic,
)
from .quadrature import gl_on_interval


class TailError(RuntimeError):
    """Outermost-shell contribution exceeded the tail budget: widen the lattice."""

    def __init__(self, message: str, total: float, shell_fraction: float):
        super().__init__(message)
        self.total = total
        self.shell_fraction = shell_fraction


class InfeasibleWeightError(ValueError):
    """The composite-weight inequality system has no solution for this s."""

    def __init__(self, message: str, violated: str, derivation: list):
        super().__init__(message)
        self.violated = violated
        self.derivation = derivation


# ---------------------------------------------------------------------------
# weights


@dataclass(frozen=True)
class WeightSpec:
    """w(z, u) = (1 + |(z,u)|_delta)^alpha * (1 + |u|)^r, always >= 1.

    The composite form carries the split alpha = alpha1 + alpha2 whose
    two parts control integrability of w^{-1} in z and in u separately;
    inequality_log records the four defining constraints with their
    numeric values.
    """

    alpha: float
    r: float
    alpha_split: tuple | None = None
    s: float | None = None
    inequality_log: tuple = ()

    def __post_init__(self):
        if self.alpha < 0 or self.r < 0:
            raise ValueError("weight exponents must be nonnegative")
        if self.alpha_split is not None:
            a1, a2 = self.alpha_split
            if abs(a1 + a2 - self.alpha) > 1e-12:
                raise ValueError("alpha_split must sum to alpha")

    @property
    def is_composite(self) -> bool:
        return self.alpha_split is not None

    def matrix(self, z_gram_norms: np.ndarray, u_norms: np.ndarray) -> np.ndarray:
        """Weight values on a product lattice, shape (n_z, n_u)."""
        hom = z_gram_norms[:, None] + np.sqrt(u_norms)[None, :]
        out = (1.0 + hom) ** self.alpha
        if self.r != 0.0:
            out = out * (1.0 + u_norms[None, :]) ** self.r
        return out

    @staticmethod
    def feasibility(g: StratifiedGroup2, s: float) -> dict:
        """Linear-arithmetic solvability of the composite-weight system.

        The system needs r < d2/2 and s - r > dim_v/2 + (d2 - 2 r),
        i.e. s > dim_v/2 + d2 - r > dim_v/2 + d2/2 = dim_G/2. So the
        r-interval (dim_G/2 + d2/2 - s, d2/2) is nonempty exactly when
        s > dim_G/2; otherwise the two bounds on r contradict.
        """
        dv, d2 = g.dim_v, g.dim_z
        dim_g = dv + d2
        r_lo = max(0.0, dim_g / 2.0 + d2 / 2.0 - s)
        r_hi = d2 / 2.0
        steps = [
            f"require r < d2/2 = {r_hi:g}",
            f"require s - r > dim_v/2 + (d2 - 2r), i.e. r > dim_G/2 + d2/2 - s = "
            f"{dim_g / 2.0 + d2 / 2.0 - s:g}",
            f"interval for r: ({r_lo:g}, {r_hi:g})",
        ]
        feasible = r_lo < r_hi
        if not feasible:
            steps.append(
                f"empty since s = {s:g} <= dim_G/2 = {dim_g / 2.0:g}: the lower "
                "bound on r meets or exceeds d2/2"
            )
        return {
            "feasible": feasible,
            "r_interval": (r_lo, r_hi),
            "s": s,
            "dim_G_half": dim_g / 2.0,
            "derivation": steps,
        }

    @classmethod
    def for_s(cls, g: StratifiedGroup2, s: float) -> "WeightSpec":
        """Midpoint composite weight for a smoothness order s > dim_G/2.

        r sits midway in its feasible interval; then alpha1 = dim_v/2 +
        eps and alpha2 = (d2 - 2r) + eps with eps one third of the
        remaining slack, so all strict inequalities hold with margin.
        """
        report = cls.feasibility(g, s)
        if not report["feasible"]:
            raise InfeasibleWeightError(
                f"no composite weight exists for s = {s:g} <= dim_G/2 = "
                f"{report['dim_G_half']:g}",
                violated="r > dim_G/2 + d2/2 - s contradicts r < d2/2",
                derivation=report["derivation"],
            )
        dv, d2 = g.dim_v, g.dim_z
        r_lo, r_hi = report["r_interval"]
        r = 0.5 * (r_lo + r_hi)
        eps = (s - r - dv / 2.0 - (d2 - 2.0 * r)) / 3.0
        a1 = dv / 2.0 + eps
        a2 = (d2 - 2.0 * r) + eps
        log = (
            {"name": "r in feasible interval", "lhs": r_lo, "mid": r, "rhs": r_hi,
             "holds": bool(r_lo < r < r_hi)},
            {"name": "alpha1 > dim_v/2", "lhs": a1, "rhs": dv / 2.0,
             "holds": bool(a1 > dv / 2.0)},
            {"name": "alpha2 > d2 - 2r", "lhs": a2, "rhs": d2 - 2.0 * r,
             "holds": bool(a2 > d2 - 2.0 * r)},
            {"name": "s - r > alpha1 + alpha2", "lhs": s - r, "rhs": a1 + a2,
             "holds": bool(s - r > a1 + a2)},
        )
        if not all(entry["holds"] for entry in log):
            bad = next(e["name"] for e in log if not e["holds"])
            raise InfeasibleWeightError(
                f"midpoint recipe violated its own constraint: {bad}",
                violated=bad,
                derivation=report["derivation"],
            )
        return cls(alpha=a1 + a2, r=r, alpha_split=(a1, a2), s=s, inequality_log=log)


@dataclass
class EstimateReport:
    """lhs/rhs pair with the fitted constant and experiment provenance."""

    lhs: float
    rhs: float
    constant: float
    family_tag: str
    scaling: dict | None = None
    details: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("lhs", "rhs", "constant"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v >= 0):
                raise ValueError(f"{name} must be finite and nonnegative, got {v}")


# ---------------------------------------------------------------------------
# lattices


def _odd_at_least(n: int, floor: int = 5) -> int:
    n = max(int(n), floor)
    return n if n % 2 == 1 else n + 1


def _axis(extent: float, nodes: int):
    x = np.linspace(-extent, extent, nodes)
    h = 2.0 * extent / (nodes - 1)
    w = np.full(nodes, h)
    w[0] = w[-1] = h / 2.0
    return x, w


def _cartesian(x: np.ndarray, w: np.ndarray, dim: int):
    if dim == 1:
        return x[:, None], w.copy()
    grids = np.meshgrid(*([x] * dim), indexing="ij")
    pts = np.stack([gg.reshape(-1) for gg in grids], axis=1)
    ww = w
    for _ in range(dim - 1):
        ww = np.multiply.outer(ww, w).reshape(-1)
    return pts, ww


def _symbol_k_hi(H) -> float:
    if isinstance(H, JointMultiplier):
        return H.base.k_hi
    return float(H.k_hi)


@dataclass(frozen=True)
class LatticeSpec:
    """Symmetric uniform product lattice: one axis per coordinate.

    Node counts are odd so the origin is a lattice point; widened()
    doubles the extents while keeping the spacing, so refined runs
    reuse the resolution choice.
    """

    z_extent: float
    z_nodes: int
    u_extent: float
    u_nodes: int

    def __post_init__(self):
        if self.z_extent <= 0 or self.u_extent <= 0:
            raise ValueError("lattice extents must be positive")
        for n in (self.z_nodes, self.u_nodes):
            if n < 3 or n % 2 == 0:
                raise ValueError("node counts must be odd and at least 3")

    def widened(self, factor: float = 2.0) -> "LatticeSpec":
        def grow(extent, nodes):
            new_ext = extent * factor
            h = 2.0 * extent / (nodes - 1)
            return new_ext, _odd_at_least(int(round(2.0 * new_ext / h)) + 1)

        ze, zn = grow(self.z_extent, self.z_nodes)
        ue, un = grow(self.u_extent, self.u_nodes)
        return LatticeSpec(ze, zn, ue, un)

    def build(self, g: StratifiedGroup2):
        """(z_pts, w_z, u_pts, w_u, shell_z, shell_u) for the group's dims."""
        zx, zw = _axis(self.z_extent, self.z_nodes)
        ux, uw = _axis(self.u_extent, self.u_nodes)
        z_pts, w_z = _cartesian(zx, zw, g.dim_v)
        u_pts, w_u = _cartesian(ux, uw, g.dim_z)
        hz = 2.0 * self.z_extent / (self.z_nodes - 1)
        hu = 2.0 * self.u_extent / (self.u_nodes - 1)
        shell_z = np.abs(z_pts).max(axis=1) >= self.z_extent - 1.5 * hz
        shell_u = np.abs(u_pts).max(axis=1) >= self.u_extent - 1.5 * hu
        return z_pts, w_z, u_pts, w_u, shell_z, shell_u

    @staticmethod
    def auto(
        g: StratifiedGroup2,
        dec: LayerDecomposition,
        H,
        z_extent: float,
        u_extent: float,
        safety: float = 1.0,
        node_cap: int = 201,
    ) -> "LatticeSpec":
        """Nyquist-compliant node counts for the given extents.

        |K|^2 has twice the kernel bandwidth: C * K_hi in u (capped by
        a joint symbol's |eta| support) and sqrt(K_hi) in z, where the
        soft Laguerre envelope edge gets a small absolute cushion.
        """
        k_hi = _symbol_k_hi(H)
        rho_hi = spectral_bound_constant(g, dec) * k_hi
        if isinstance(H, JointMultiplier):
            rho_hi = min(rho_hi, H.eta_support[1])
        xi_hi = math.sqrt(k_hi) + 0.5
        h_u = math.pi / (2.0 * rho_hi * safety)
        h_z = math.pi / (2.0 * xi_hi * safety)
        zn = _odd_at_least(int(math.ceil(2.0 * z_extent / h_z)) + 1)
        un = _odd_at_least(int(math.ceil(2.0 * u_extent / h_u)) + 1)
        if zn > node_cap or un > node_cap:
            raise ValueError(
                f"lattice would need {max(zn, un)} nodes per axis (cap {node_cap}); "
                "shrink the extents or the symbol support"
            )
        return LatticeSpec(z_extent, zn, u_extent, un)


def sample_kernel_lattice(
    g: StratifiedGroup2,
    dec: LayerDecomposition,
    H,
    lattice: LatticeSpec,
    quad: QuadratureSpec | None = None,
    threads: int = 1,
) -> ProductKernelGrid:
    z_pts, _, u_pts, _, _, _ = lattice.build(g)
    return eval_kernel_product(g, dec, H, z_pts, u_pts, quad=quad, threads=threads)


def weighted_l2(
    g: StratifiedGroup2,
    grid: ProductKernelGrid,
    w,
    lattice: LatticeSpec,
    tail_frac: float = 0.05,
    details: dict | None = None,
) -> float:
    """Trapezoidal integral of |w K|^2 over the lattice box.

    w is a WeightSpec or a callable (z_gram_norms, u_norms) -> weight
    matrix. Raises TailError when the outermost shell (the last 1.5
    cells of any axis) carries more than tail_frac of the total.
    """
    z_pts, w_z, u_pts, w_u, shell_z, shell_u = lattice.build(g)
    if grid.values.shape != (z_pts.shape[0], u_pts.shape[0]):
        raise ValueError("kernel grid does not match the lattice")
    chol_t = np.linalg.cholesky(g.gram).T
    z_norms = np.linalg.norm(z_pts @ chol_t.T, axis=1)
    u_norms = np.linalg.norm(u_pts, axis=1)
    W = w.matrix(z_norms, u_norms) if isinstance(w, WeightSpec) else np.broadcast_to(
        np.asarray(w(z_norms, u_norms), dtype=float), grid.values.shape
    )
    P = (np.abs(grid.values) ** 2) * W * W * w_z[:, None] * w_u[None, :]
    total = float(P.sum())
    if total <= 0.0:
        if details is not None:
            details.update(tail_fraction=0.0, total=0.0)
        return 0.0
    inner = float(P[np.ix_(~shell_z, ~shell_u)].sum())
    frac = max(0.0, (total - inner) / total)
    if details is not None:
        details.update(tail_fraction=frac, total=total)
    if frac > tail_frac:
        raise TailError(
            f"outermost shell carries {frac:.1%} of the weighted integral "
            f"(budget {tail_frac:.0%}); widen the lattice",
            total=total,
            shell_fraction=frac,
        )
    return total


def weighted_l2_adaptive(
    g: StratifiedGroup2,
    dec: LayerDecomposition,
    H,
    w,
    lattice: LatticeSpec,
    quad: QuadratureSpec | None = None,
    threads: int = 1,
    tail_frac: float = 0.05,
    max_widenings: int = 2,
):
    """(value, grid, lattice_used, details) with doubling on TailError."""
    last = None
    for _ in range(max_widenings + 1):
        n_pts = lattice.z_nodes ** g.dim_v * lattice.u_nodes ** g.dim_z
        if n_pts > 6_000_000:
            raise TailError(
                f"widened lattice would hold {n_pts} points; start from a "
                "larger extent at coarser spacing instead",
                total=float("nan"),
                shell_fraction=last.shell_fraction if last else float("nan"),
            )
        grid = sample_kernel_lattice(g, dec, H, lattice, quad=quad, threads=threads)
        det: dict = {"lattice": lattice}
        try:
            val = weighted_l2(g, grid, w, lattice, tail_frac=tail_frac, details=det)
            return val, grid, lattice, det
        except TailError as err:
            last = err
            lattice = lattice.widened(2.0)
    raise last


# ---------------------------------------------------------------------------
# experiments


def scaling_experiment(
    g: StratifiedGroup2,
    dec: LayerDecomposition,
    F: Multiplier,
    r: float,
    M_list,
    quad: QuadratureSpec | None = None,
    threads: int = 1,
    z_extent: float = 12.0,
    u_extent_at_unit: float = 8.0,
    tail_frac: float = 0.05,
    max_widenings: int = 1,
    method: str = "lattice",
) -> EstimateReport:
    """Dyadic-slice law: integral of ||u|^r K_{F_M}|^2 vs M^{d2 - 2r}.

    The slice at scale M lives at |eta| ~ M, so its kernel spreads over
    u ~ 1/M: the u-lattice extent scales like 1/M while the bandwidth
    cap 2M keeps the node count M-independent. C is fitted at the
    largest M and must dominate every smaller M (one-sided bound); the
    log-log slope is reported against the exponent d2 - 2r.

    The z box stays fixed across M but must be generous: a slice pulls
    in Laguerre levels up to ~ k_hi/M whose profiles reach well past
    the unit-scale kernel support. The largest M should also sit in the
    asymptotic regime (many levels per band), else the fitted constant
    sits below the small-M plateau and the one-sided check fails for a
    reason that has nothing to do with the bound.

    method="spectral" computes the unweighted L2 norm on the frequency
    side instead of sampling a lattice; only valid for r = 0, where the
    two sides agree by Plancherel.  It is the affordable route on groups
    whose z+u lattice would be 4- or 5-dimensional.
    """
    d2 = g.dim_z
    if not (0.0 <= r < d2 / 2.0):
        raise ValueError(f"r must lie in [0, d2/2) = [0, {d2 / 2.0:g})")
    if method not in ("lattice", "spectral"):
        raise ValueError("method must be 'lattice' or 'spectral'")
    if method == "spectral" and r != 0.0:
        raise ValueError("spectral route only computes the unweighted norm (r = 0)")
    M_list = sorted((float(M) for M in M_list), reverse=True)
    if not M_list or M_list[-1] <= 0:
        raise ValueError("M_list must contain positive scales")
    sob_sq = sobolev_norm(F, r) ** 2
    exponent = d2 - 2.0 * r

    def u_weight(z_norms, u_norms):
        return np.broadcast_to(
            (u_norms ** r)[None, :], (z_norms.shape[0], u_norms.shape[0])
        )

    points = []
    tails = []
    for M in M_list:
        F_M = truncate_dyadic(F, M)
        if method == "spectral":
            val = plancherel_spectral_norm(g, dec, F_M, quad=quad) ** 2
            tail = 0.0
        else:
            lat = LatticeSpec.auto(g, dec, F_M, z_extent, u_extent_at_unit / M)
            val, _, lat_used, det = weighted_l2_adaptive(
                g, dec, F_M, u_weight, lat, quad=quad, threads=threads,
                tail_frac=tail_frac, max_widenings=max_widenings,
            )
            tail = det.get("tail_fraction", 0.0)
        points.append((M, val))
        tails.append(tail)
    M0, lhs0 = points[0]
    rhs0 = M0 ** exponent * sob_sq
    constant = lhs0 / rhs0 if rhs0 > 0 else 0.0
    # two lattice estimates are comparable only to within their own
    # truncation error, so the fitted constant gets that much slack
    one_sided = all(
        lhs <= constant * M ** exponent * sob_sq * (1.0 + tails[0] + tail + 1e-9)
        for (M, lhs), tail in zip(points, tails)
    )
    positive = [(M, lhs) for M, lhs in points if lhs > 0]
    slope = float("nan")
    if len(positive) >= 2:
        lm = np.log([M for M, _ in positive])
        lv = np.log([lhs for _, lhs in positive])
        slope = float(np.polyfit(lm, lv, 1)[0])
    return EstimateReport(
        lhs=lhs0,
        rhs=rhs0,
        constant=constant,
        family_tag=f"{F.family}:scaling",
        scaling={
            "points": points,
            "slope": slope,
            "exponent": exponent,
            "one_sided_ok": bool(one_sided),
        },
        details={
            "r": r,
            "sobolev_sq": sob_sq,
            "tail_fractions": tails,
            "z_extent": z_extent,
            "u_extent_at_unit": u_extent_at_unit,
            "method": method,
        },
    )


def default_family(support: tuple = (1.0, 4.0)) -> list:
    """Eight multipliers on one support: centers, widths, one oscillation.

    The two outermost centers get narrower bumps so the shared window
    clips them at negligible height; a clip at O(0.1) height leaves a
    steep edge whose high-order Sobolev mass dwarfs the bump's own and
    wrecks ratio comparisons across the family.
    """
    centers = (1.7, 2.05, 2.5, 2.95, 3.3)
    widths = (0.12, 0.3, 0.3, 0.3, 0.12)
    members = [gaussian_bump(c, w, window=support) for c, w in zip(centers, widths)]
    members.append(gaussian_bump(2.5, 0.08, window=support))
    members.append(gaussian_bump(2.5, 1.2, window=support))
    members.append(oscillate(gaussian_bump(2.5, 0.5, window=support), 8.0))
    return members


def _as_family(F_or_family) -> list:
    if isinstance(F_or_family, Multiplier):
        return [F_or_family]
    fam = list(F_or_family)
    if not fam:
        raise ValueError("family must be nonempty")
    return fam


def _member_lattices(g, dec, family, lattice, u_extents, z_extent) -> list:
    """One lattice per member.

    An explicit lattice applies to every member.  Otherwise each member
    gets an auto lattice at its own bandwidth; u_extents widens the u box
    member by member (oscillation and narrow widths push kernel mass to
    large |u|, so one shared extent wastes nodes on the easy members).
    """
    if lattice is not None:
        return [lattice] * len(family)
    if u_extents is None:
        u_extents = [14.0] * len(family)
    if len(u_extents) != len(family):
        raise ValueError("u_extents must have one entry per family member")
    z_extents = np.broadcast_to(np.asarray(z_extent, dtype=float), (len(family),))
    return [
        LatticeSpec.auto(g, dec, F, z_extent=ze, u_extent=ue, node_cap=2001)
        for F, ze, ue in zip(family, z_extents, u_extents)
    ]


def _family_ratio_report(
    g, dec, family, w: WeightSpec, sobolev_order: float,
    quad, threads, lattices, tail_frac, max_widenings, tag: str, extra: dict,
) -> EstimateReport:
    support = family[0].support
    for F in family:
        if F.support != support:
            raise ValueError("family members must share one support interval")
    ratios = []
    rows = []
    for F, lattice in zip(family, lattices):
        rhs = sobolev_norm(F, sobolev_order) ** 2
        if rhs <= 0:
            raise ValueError("family members must have positive Sobolev norm")
        val, _, lat_used, det = weighted_l2_adaptive(
            g, dec, F, w, lattice, quad=quad, threads=threads,
            tail_frac=tail_frac, max_widenings=max_widenings,
        )
        ratios.append(val / rhs)
        bits = [F.family]
        for key in ("center", "width", "omega"):
            if key in F.params:
                bits.append(f"{key}={F.params[key]:g}")
        rows.append(
            {
                "tag": " ".join(bits),
                "family": F.family,
                "params": dict(F.params),
                "lhs": val,
                "rhs": rhs,
                "ratio": val / rhs,
                "tail_fraction": det.get("tail_fraction"),
                "u_extent": lat_used.u_extent,
            }
        )
    worst = int(np.argmax(ratios))
    spread = max(ratios) / min(ratios)
    details = {"members": rows, "spread": spread}
    details.update(extra)
    return EstimateReport(
        lhs=rows[worst]["lhs"],
        rhs=rows[worst]["rhs"],
        constant=max(ratios),
        family_tag=tag,
        details=details,
    )


def weighted_plancherel_check(
    g: StratifiedGroup2,
    dec: LayerDecomposition,
    family,
    r: float,
    quad: QuadratureSpec | None = None,
    threads: int = 1,
    lattice: LatticeSpec | None = None,
    u_extents=None,
    z_extent: float = 6.0,
    tail_frac: float = 0.05,
    max_widenings: int = 2,
) -> EstimateReport:
    """Ratio of int |(1+|u|)^r K_F|^2 to the squared order-r Sobolev norm.

    Reports the max ratio over the family as the empirical constant;
    the spread across members is the uniformity evidence.
    """
    family = _as_family(family)
    d2 = g.dim_z
    if not (0.0 <= r < d2 / 2.0):
        raise ValueError(f"r must lie in [0, d2/2) = [0, {d2 / 2.0:g})")
    lattices = _member_lattices(g, dec, family, lattice, u_extents, z_extent)
    return _family_ratio_report(
        g, dec, family, WeightSpec(alpha=0.0, r=r), r,
        quad, threads, lattices, tail_frac, max_widenings,
        tag="weighted_plancherel", extra={"r": r},
    )


def interpolated_weight_check(
    g: StratifiedGroup2,
    dec: LayerDecomposition,
    family,
    alpha: float,
    r: float,
    beta: float,
    quad: QuadratureSpec | None = None,
    threads: int = 1,
    lattice: LatticeSpec | None = None,
    u_extents=None,
    z_extent: float = 6.0,
    tail_frac: float = 0.05,
    max_widenings: int = 2,
) -> EstimateReport:
    """Mixed weight (1+|(z,u)|_delta)^alpha (1+|u|)^r against order beta.

    Requires beta > alpha + r: the full-norm weight costs alpha + r
    orders of smoothness, with any margin admissible.
    """
    family = _as_family(family)
    d2 = g.dim_z
    if alpha < 0:
        raise ValueError("alpha must be nonnegative")
    if not (0.0 <= r < d2 / 2.0):
        raise ValueError(f"r must lie in [0, d2/2) = [0, {d2 / 2.0:g})")
    if not beta > alpha + r:
        raise ValueError(f"beta must exceed alpha + r = {alpha + r:g}")
    lattices = _member_lattices(g, dec, family, lattice, u_extents, z_extent)
    return _family_ratio_report(
        g, dec, family, WeightSpec(alpha=alpha, r=r), beta,
        quad, threads, lattices, tail_frac, max_widenings,
        tag="interpolated_weight", extra={"alpha": alpha, "r": r, "beta": beta},
    )


# ---------------------------------------------------------------------------
# the L1 chain


def weight_inverse_l2_sq(
    g: StratifiedGroup2,
    w: WeightSpec,
    shell_start: float = 8.0,
    doublings: int = 4,
    n_nodes: int = 64,
) -> dict:
    """Upper bound for the integral of w^{-2} over the whole group.

    The composite weight dominates a separable one with constant 1:
    1 + |z| + |u|^{1/2} majorizes both 1 + |z| and 1 + |u|^{1/2}, and
    (1 + |u|^{1/2})^2 >= 1 + |u|, so

        w^{-2} <= (1 + |z|)^{-2 alpha1} (1 + |u|)^{-alpha2 - 2 r}.

    The right side factorizes over z and u, each factor integrated
    radially with dyadic shells past shell_start and a geometric-ratio
    tail. The shell ratios sit strictly below 1 exactly when the
    factor integrates: 2 alpha1 > dim_v and alpha2 + 2 r > dim_z.
    Marginal recipes make the decay slow but never non-monotone.
    """
    dv, dz = g.dim_v, g.dim_z
    a1, a2 = w.alpha_split if w.alpha_split is not None else (w.alpha, 0.0)
    p_z = 2.0 * a1
    p_u = a2 + 2.0 * w.r
    if p_z <= dv or p_u <= dz:
        raise ValueError(
            "weight decays too slowly for an integrable inverse: "
            f"needs 2 alpha1 > dim_v ({p_z:g} vs {dv}) and "
            f"alpha2 + 2 r > dim_z ({p_u:g} vs {dz})"
        )
    # a near-threshold recipe decays like x^{-(margin)} with a tiny
    # margin; the geometric shell ratio only drops below 1 once the
    # (1+x) vs x distinction stops eating the margin, at x ~ p/margin
    margin = min(p_z - dv, p_u - dz)
    shell_start = max(
        shell_start, 1.5 * max(p_z, p_u) / (math.log(2.0) * margin)
    )

    def radial_factor(dim: int, power: float) -> dict:
        area = 2.0 * math.pi ** (dim / 2.0) / math.gamma(dim / 2.0)

        def piece(a: float, b: float) -> float:
            x, wx = gl_on_interval(a, b, n_nodes)
            return area * float(np.sum(wx * (1.0 + x) ** (-power) * x ** (dim - 1)))

        # the core spans decades, so integrate it in dyadic pieces
        core = piece(0.0, min(1.0, shell_start))
        lo = 1.0
        while lo < shell_start:
            core += piece(lo, min(2.0 * lo, shell_start))
            lo *= 2.0
        shells = []
        lo = shell_start
        for _ in range(doublings):
            shells.append(piece(lo, 2.0 * lo))
            lo *= 2.0
        ratios = [s2 / s1 for s1, s2 in zip(shells, shells[1:]) if s1 > 0]
        rho = ratios[-1] if ratios else 0.0
        tail = shells[-1] * rho / (1.0 - rho) if 0.0 < rho < 1.0 else 0.0
        return {
            "total": core + sum(shells) + tail,
            "core": core,
            "shells": shells,
            "ratios": ratios,
            "tail_extrapolation": tail,
        }

    fz = radial_factor(dv, p_z)
    fu = radial_factor(dz, p_u)
    return {
        "total": fz["total"] * fu["total"],
        "z_factor": fz,
        "u_factor": fu,
        "ratios": fz["ratios"] + fu["ratios"],
        "tail_extrapolation": max(fz["tail_extrapolation"], fu["tail_extrapolation"]),
        "shell_start": shell_start,
        "exponents": {"z": p_z, "u": p_u},
    }


def l1_chain(
    g: StratifiedGroup2,
    dec: LayerDecomposition,
    F: Multiplier,
    s: float,
    quad: QuadratureSpec | None = None,
    threads: int = 1,
    lattice: LatticeSpec | None = None,
    tail_frac: float = 0.05,
    max_widenings: int = 2,
    cs_slack: float = 0.01,
) -> EstimateReport:
    """L1 bound through Cauchy-Schwarz: ||K||_1 <= ||w K||_2 ||w^{-1}||_2.

    A is the lattice L1 norm; the discrete inequality against the
    same-lattice factors is exact, so A <= B within cs_slack once B
    replaces the lattice w^{-1} factor by its full-group integral.
    """
    w = WeightSpec.for_s(g, s)
    if lattice is None:
        lattice = LatticeSpec.auto(g, dec, F, z_extent=6.0, u_extent=14.0)
    wsq, grid, lattice, det = weighted_l2_adaptive(
        g, dec, F, w, lattice, quad=quad, threads=threads,
        tail_frac=tail_frac, max_widenings=max_widenings,
    )
    z_pts, w_z, u_pts, w_u, _, _ = lattice.build(g)
    chol_t = np.linalg.cholesky(g.gram).T
    z_norms = np.linalg.norm(z_pts @ chol_t.T, axis=1)
    u_norms = np.linalg.norm(u_pts, axis=1)
    W = w.matrix(z_norms, u_norms)
    cell = w_z[:, None] * w_u[None, :]
    absk = np.abs(grid.values)
    a_l1 = float((cell * absk).sum())
    winv_lattice_sq = float((cell * W ** -2.0).sum())
    b_lattice = math.sqrt(wsq) * math.sqrt(winv_lattice_sq)
    winv = weight_inverse_l2_sq(g, w)
    b_full = math.sqrt(wsq) * math.sqrt(winv["total"])
    rhs = sobolev_norm(F, s)
    shells_decay = all(r < 1.0 for r in winv["ratios"]) and len(winv["ratios"]) >= 1
    return EstimateReport(
        lhs=a_l1,
        rhs=rhs,
        constant=b_full / rhs if rhs > 0 else 0.0,
        family_tag=f"{F.family}:l1_chain",
        details={
            "s": s,
            "weight": {"alpha": w.alpha, "r": w.r, "alpha_split": w.alpha_split},
            "inequality_log": list(w.inequality_log),
            "B": b_full,
            "B_lattice": b_lattice,
            "cauchy_schwarz_ok": bool(a_l1 <= b_full * (1.0 + cs_slack)),
            "cauchy_schwarz_lattice_ok": bool(a_l1 <= b_lattice * (1.0 + 1e-9)),
            "weight_inverse": winv,
            "shell_decay_ok": bool(shells_decay),
            "tail_fraction": det.get("tail_fraction"),
            "lattice": lattice,
        },
    )


# ---------------------------------------------------------------------------
# product groups


def mixed_norm_factorization(
    F1: Multiplier, F2: Multiplier, s1: float, s2: float, base_n: int = 256, pad: int = 4
) -> dict:
    """Two-dimensional mixed-smoothness norm of F1 x F2 vs the factor product.

    On matched grids the 2-d transform of an outer product is the outer
    product of the 1-d transforms and the weight (1+xi1^2)^{s1}
    (1+xi2^2)^{s2} separates, so the discrete identity is exact; the
    reported gap is pure floating-point noise.
    """

    def axis(F):
        lo, hi = F.support
        span = hi - lo
        a, b = lo - 0.05 * span, hi + 0.05 * span
        h = (b - a) / base_n
        n_total = pad * base_n
        lam = a + h * np.arange(n_total)
        vals = np.zeros(n_total, dtype=complex)
        vals[:base_n] = F(lam[:base_n])
        fhat = np.fft.fft(vals) * h / math.sqrt(2.0 * math.pi)
        xi = 2.0 * math.pi * np.fft.fftfreq(n_total, d=h)
        dxi = 2.0 * math.pi / (n_total * h)
        return vals, fhat, xi, dxi, h

    v1, f1, xi1, dxi1, h1 = axis(F1)
    v2, f2, xi2, dxi2, h2 = axis(F2)
    w1 = (1.0 + xi1 * xi1) ** s1
    w2 = (1.0 + xi2 * xi2) ** s2
    joint = np.fft.fft2(np.outer(v1, v2)) * h1 * h2 / (2.0 * math.pi)
    joint_sq = float(np.sum((w1[:, None] * w2[None, :]) * np.abs(joint) ** 2) * dxi1 * dxi2)
    product_sq = float(np.sum(w1 * np.abs(f1) ** 2) * dxi1) * float(
        np.sum(w2 * np.abs(f2) ** 2) * dxi2
    )
    gap = abs(joint_sq - product_sq) / product_sq if product_sq > 0 else 0.0
    return {"joint_sq": joint_sq, "product_sq": product_sq, "rel_gap": gap}


def product_factorization_check(
    g1: StratifiedGroup2,
    dec1: LayerDecomposition,
    g2: StratifiedGroup2,
    dec2: LayerDecomposition,
    F1: Multiplier,
    F2: Multiplier,
    pts1,
    pts2,
    quad: QuadratureSpec | None = None,
    threads: int = 1,
    s_pair: tuple = (1.0, 1.2),
) -> EstimateReport:
    """Joint kernel on the direct product vs the product of factor kernels.

    The joint evaluation runs on the product group with the juxtaposed
    splitting, whose block contract fails only on the center-dual axes;
    the quadrature never places nodes there. Also checks the
    mixed-smoothness norm factorization of the tensor symbol.
    """
    g = direct_product(g1, g2)
    dec = juxtapose_decompositions(dec1, g1.dim_v, dec2, g2.dim_v)
    pts1 = [(np.asarray(z, float), np.atleast_1d(np.asarray(u, float))) for z, u in pts1]
    pts2 = [(np.asarray(z, float), np.atleast_1d(np.asarray(u, float))) for z, u in pts2]
    joint_pts = [
        (np.concatenate([z1, z2]), np.concatenate([u1, u2]))
        for z1, u1 in pts1
        for z2, u2 in pts2
    ]
    joint = eval_kernel(
        g, dec, TensorMultiplier((F1, F2)), joint_pts, quad=quad, threads=threads
    ).values.reshape(len(pts1), len(pts2))
    k1 = eval_kernel(g1, dec1, F1, pts1, quad=quad, threads=threads).values
    k2 = eval_kernel(g2, dec2, F2, pts2, quad=quad, threads=threads).values
    outer = np.outer(k1, k2)
    scale = float(np.abs(outer).max())
    rel = float(np.abs(joint - outer).max() / scale) if scale > 0 else 0.0
    mixed = mixed_norm_factorization(F1, F2, *s_pair)
    return EstimateReport(
        lhs=float(np.abs(joint - outer).max()),
        rhs=scale,
        constant=rel,
        family_tag="product_factorization",
        details={
            "joint": joint,
            "outer": outer,
            "factor_values": (k1, k2),
            "mixed_norm": mixed,
            "s_pair": s_pair,
        },
    )
