"""Spectral multipliers, their norms, and discrete difference calculus.

A Multiplier is a compactly supported function of one spectral
variable. Joint multipliers carry an extra center-dual argument; the
reparametrized symbol pulls either back to the discrete spectrum
lattice (n, mu, eta) of a group with a fixed block decomposition.

Norm conventions: the Fourier transform is unitary on L^2, so the
fractional Sobolev norm is (int (1+xi^2)^s |Fhat|^2 dxi)^(1/2). The
scale-invariant norm takes a sup of windowed dilates over a global
quarter-octave lattice t = 2^(k/4), which makes dyadic dilation
invariance exact rather than approximate.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.interpolate import CubicSpline

from .groups import LayerDecomposition, StratifiedGroup2, spectral_bound_constant, spectral_data

__all__ = [
    "Multiplier",
    "BumpSpec",
    "JointMultiplier",
    "ReparametrizedSymbol",
    "gaussian_bump",
    "poly_bump",
    "heat",
    "table_multiplier",
    "oscillate",
    "smoothstep",
    "dyadic_cutoff",
    "mw_window",
    "sobolev_norm",
    "sobolev_norm_report",
    "mw_norm",
    "truncate_dyadic",
    "difference_op",
    "discrete_to_continuous_check",
    "discrete_to_continuous_cs",
    "multiplier_to_json_dict",
    "multiplier_from_json_dict",
]


def smoothstep(x):
    """C-infinity ramp: 0 for x <= 0, 1 for x >= 1, built from e^{-1/x}."""
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        a = np.where(x > 0.0, np.exp(-1.0 / np.maximum(x, 1e-300)), 0.0)
        b = np.where(x < 1.0, np.exp(-1.0 / np.maximum(1.0 - x, 1e-300)), 0.0)
    return a / (a + b)


@dataclass(frozen=True)
class Multiplier:
    """Compactly supported spectral multiplier.

    fn maps a float array of spectral values to (possibly complex)
    values; it must already vanish outside support = (K_lo, K_hi).
    """

    family: str
    params: dict
    support: tuple
    smoothness: str = "smooth"  # or "w2s"
    fn: object = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        lo, hi = self.support
        if not (0 <= lo < hi):
            raise ValueError("support must satisfy 0 <= K_lo < K_hi")

    def __call__(self, lam):
        lam = np.asarray(lam, dtype=float)
        return self.fn(lam)

    @property
    def k_lo(self) -> float:
        return float(self.support[0])

    @property
    def k_hi(self) -> float:
        return float(self.support[1])


def _window_fn(lo: float, hi: float, edge_frac: float):
    """Smooth indicator of [lo, hi] with C-infinity edges.

    Edge width is edge_frac * (hi - lo) inside the interval, so the
    windowed function stays supported in [lo, hi] exactly.
    """
    width = (hi - lo) * edge_frac
    if width <= 0:
        return lambda lam: ((lam >= lo) & (lam <= hi)).astype(float)

    def w(lam):
        return smoothstep((lam - lo) / width) * smoothstep((hi - lam) / width)

    return w


def gaussian_bump(
    center: float, width: float, window: tuple | None = None, edge_frac: float = 0.025
) -> Multiplier:
    """e^{-(lam-center)^2/width} smoothly windowed to a compact interval.

    A hard cutoff would put O(jump) tails on the Fourier side and ruin
    every W_2^s with s >= 1/2, so the window edges are C-infinity ramps
    occupying edge_frac of the window width each.
    """
    if width <= 0:
        raise ValueError("width must be positive")
    if window is None:
        half = 4.0 * math.sqrt(width)
        window = (max(0.0, center - half), center + half)
    lo, hi = float(window[0]), float(window[1])
    win = _window_fn(lo, hi, edge_frac)

    def fn(lam):
        out = np.exp(-((lam - center) ** 2) / width) * win(lam)
        return np.where((lam >= lo) & (lam <= hi), out, 0.0)

    return Multiplier(
        family="gaussian_bump",
        params={"center": center, "width": width, "edge_frac": edge_frac},
        support=(lo, hi),
        fn=fn,
    )


def poly_bump(p: int, interval: tuple) -> Multiplier:
    """((lam-a)(b-lam))_+^p, normalized to peak value 1. C^{p-1} only."""
    a, b = float(interval[0]), float(interval[1])
    if not (0 <= a < b):
        raise ValueError("need 0 <= a < b")
    if p < 1:
        raise ValueError("p must be a positive integer")
    peak = ((b - a) / 2.0) ** (2 * p)

    def fn(lam):
        core = np.maximum((lam - a) * (b - lam), 0.0) ** p / peak
        return np.where((lam >= a) & (lam <= b), core, 0.0)

    return Multiplier(
        family="poly_bump", params={"p": p}, support=(a, b), smoothness="w2s", fn=fn
    )


def heat(T: float, window: tuple = (0.0, 40.0)) -> Multiplier:
    """e^{-T lam} cut hard at window[1]; the tail e^{-T hi} is the bias.

    The hard cutoff is deliberate: at the shipped window the jump is
    ~4e-18, far below quadrature noise, and keeping e^{-T lam} exact on
    the window is what the closed-form heat oracle needs.
    """
    if T <= 0:
        raise ValueError("T must be positive")
    lo, hi = float(window[0]), float(window[1])

    def fn(lam):
        return np.where((lam >= lo) & (lam <= hi), np.exp(-T * lam), 0.0)

    return Multiplier(
        family="heat",
        params={"T": T, "tail_bound": math.exp(-T * hi)},
        support=(max(lo, 0.0), hi),
        fn=fn,
    )


def table_multiplier(lam_samples, values, support: tuple | None = None) -> Multiplier:
    """Cubic-spline interpolant of sampled values, zero outside support."""
    lam_samples = np.asarray(lam_samples, dtype=float)
    values = np.asarray(values, dtype=float)
    if lam_samples.ndim != 1 or lam_samples.shape != values.shape or len(lam_samples) < 4:
        raise ValueError("need matching 1-d sample arrays with at least 4 points")
    if support is None:
        support = (float(lam_samples[0]), float(lam_samples[-1]))
    spline = CubicSpline(lam_samples, values)
    lo, hi = support

    def fn(lam):
        inside = (lam >= lo) & (lam <= hi)
        return np.where(inside, spline(np.clip(lam, lo, hi)), 0.0)

    return Multiplier(
        family="table",
        params={"n_samples": len(lam_samples)},
        support=(lo, hi),
        smoothness="w2s",
        fn=fn,
    )


def oscillate(F: Multiplier, omega: float) -> Multiplier:
    """F(lam) e^{i omega lam}: same support, Fourier transform shifted."""
    base = F.fn

    def fn(lam):
        return base(lam) * np.exp(1j * omega * lam)

    return Multiplier(
        family=F.family + "+osc",
        params=dict(F.params, omega=omega),
        support=F.support,
        smoothness=F.smoothness,
        fn=fn,
    )


# ---------------------------------------------------------------------------
# bumps: the dyadic partition cutoff and the norm window


@dataclass(frozen=True)
class BumpSpec:
    """Auxiliary bump: kind 'dyadic_cutoff' or 'mw_window'.

    dyadic_cutoff chi is supported in [1/2, 2] with
    sum_k chi(2^{-k} t) = 1 on (0, inf) by telescoping construction.
    mw_window is any fixed smooth compactly supported bump on (0, inf);
    the shipped one coincides with chi.
    """

    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in ("dyadic_cutoff", "mw_window"):
            raise ValueError("unknown bump kind")

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        # A(t) ramps 0 -> 1 as t goes 1/2 -> 1; chi(t) = A(t) - A(t/2)
        def ramp(x):
            with np.errstate(divide="ignore"):
                return smoothstep(np.log2(np.maximum(x, 1e-300)) + 1.0)

        return np.where(t > 0.0, ramp(t) - ramp(t / 2.0), 0.0)

    @property
    def support(self) -> tuple:
        return (0.5, 2.0)


def dyadic_cutoff() -> BumpSpec:
    return BumpSpec(kind="dyadic_cutoff")


def mw_window() -> BumpSpec:
    return BumpSpec(kind="mw_window")


# ---------------------------------------------------------------------------
# joint multipliers and the reparametrized symbol


@dataclass(frozen=True)
class JointMultiplier:
    """H(lam, eta) = F(lam) * radial_factor(|eta|); e.g. a dyadic slice."""

    base: Multiplier
    eta_factor: object  # callable of |eta|
    eta_support: tuple  # (lo, hi) in |eta|
    tag: str = ""

    def __call__(self, lam, eta_norm):
        return self.base(lam) * self.eta_factor(np.asarray(eta_norm, dtype=float))

    @property
    def support(self) -> tuple:
        return self.base.support


def truncate_dyadic(F: Multiplier, M: float, chi: BumpSpec | None = None) -> JointMultiplier:
    """The dyadic joint slice F_M(lam, eta) = F(lam) chi(|eta|/M).

    Summing over M = 2^k reconstructs F for every eta != 0 by the
    partition property of chi. On a given group the slice vanishes
    identically on the joint spectrum once M > 2 C K_hi, where C is the
    spectral lower-bound constant; see vanishing_threshold.
    """
    if M <= 0:
        raise ValueError("M must be positive")
    if chi is None:
        chi = dyadic_cutoff()
    if chi.kind != "dyadic_cutoff":
        raise ValueError("truncate_dyadic needs the dyadic_cutoff bump")

    def factor(eta_norm):
        return chi(eta_norm / M)

    return JointMultiplier(
        base=F, eta_factor=factor, eta_support=(M / 2.0, 2.0 * M), tag=f"M={M:g}"
    )


def vanishing_threshold(g: StratifiedGroup2, dec: LayerDecomposition, F: Multiplier) -> float:
    """2 C K_hi: dyadic slices with M above this are zero on the spectrum."""
    return 2.0 * spectral_bound_constant(g, dec) * F.k_hi


class ReparametrizedSymbol:
    """The multiplier pulled back to the discrete spectrum lattice.

    m(n, mu, eta) feeds the kernel and Plancherel formulas: block j
    contributes (2 n_j + r_j) b_j^eta, and the first tdone blocks carry
    a continuous mu_j >= 0 on top. A plain Multiplier acts through the
    total spectral sum; a JointMultiplier adds its |eta| factor.
    """

    def __init__(self, H, g: StratifiedGroup2, dec: LayerDecomposition):
        self.H = H
        self.g = g
        self.dec = dec
        self.joint = isinstance(H, JointMultiplier)
        base = H.base if self.joint else H
        if not isinstance(base, Multiplier):
            raise TypeError("H must be a Multiplier or JointMultiplier")
        self.base = base
        self._cache: dict = {}

    def _sd(self, eta):
        key = tuple(np.asarray(eta, dtype=float))
        sd = self._cache.get(key)
        if sd is None:
            sd = spectral_data(self.g, self.dec, np.asarray(eta, dtype=float))
            self._cache[key] = sd
        return sd

    def total(self, n, mu, eta) -> float:
        sd = self._sd(eta)
        tdone = self.dec.tdone
        if len(mu) != tdone:
            raise ValueError(f"mu must have one entry per slack block ({tdone})")
        tot = 0.0
        for j, (nj, rj, bj) in enumerate(zip(n, self.dec.ranks, sd.b)):
            tot += (2 * nj + rj) * bj
            if j < tdone:
                tot += mu[j]
        return tot

    def __call__(self, n, mu, eta):
        val = self.base(np.array(self.total(n, mu, eta)))
        if self.joint:
            val = val * self.H.eta_factor(np.linalg.norm(np.asarray(eta, dtype=float)))
        return complex(val) if np.iscomplexobj(val) else float(val)

    def lattice_points(self, eta) -> list:
        """All n with spectral sum at mu = 0 inside [0, K_hi]; finite."""
        sd = self._sd(eta)
        k_hi = self.base.k_hi
        ranks = self.dec.ranks
        out: list = []

        def rec(prefix, remaining):
            j = len(prefix)
            if j == len(ranks):
                out.append(tuple(prefix))
                return
            b, r = sd.b[j], ranks[j]
            n_top = int(math.floor((remaining / b - r) / 2.0)) if remaining >= r * b else -1
            for nj in range(n_top + 1):
                rec(prefix + [nj], remaining - (2 * nj + r) * b)

        rec([], k_hi)
        return out

    def lattice_bound(self, eta) -> float:
        sd = self._sd(eta)
        prod = 1.0
        for b, _ in zip(sd.b, self.dec.ranks):
            prod *= self.base.k_hi / (2.0 * b) + 1.0
        return prod


# ---------------------------------------------------------------------------
# norms


def _sample_for_fft(F: Multiplier, base_n: int, pad: int = 8):
    lo, hi = F.support
    span = hi - lo
    margin = 0.05 * span
    a, b = lo - margin, hi + margin
    h = (b - a) / base_n
    n_total = pad * base_n
    lam = a + h * np.arange(n_total)
    vals = np.zeros(n_total, dtype=complex)
    vals[:base_n] = F(lam[:base_n])
    return lam, vals, h


def _w2s_sq(F: Multiplier, s: float, base_n: int) -> float:
    _, vals, h = _sample_for_fft(F, base_n)
    n_total = len(vals)
    # unitary-convention transform magnitude; grid phase drops out
    fhat = np.fft.fft(vals) * h / math.sqrt(2.0 * math.pi)
    xi = 2.0 * math.pi * np.fft.fftfreq(n_total, d=h)
    dxi = 2.0 * math.pi / (n_total * h)
    return float(np.sum((1.0 + xi * xi) ** s * np.abs(fhat) ** 2) * dxi)


def sobolev_norm_report(F: Multiplier, s: float, grid: int = 2048) -> dict:
    """Fractional Sobolev norm with a two-resolution convergence check.

    The value is computed at the requested resolution and at half of
    it; a relative change above 1% flags the result as unresolved.
    """
    if s < 0:
        raise ValueError("s must be nonnegative")
    coarse = math.sqrt(max(_w2s_sq(F, s, grid // 2), 0.0))
    fine = math.sqrt(max(_w2s_sq(F, s, grid), 0.0))
    rel = abs(fine - coarse) / fine if fine > 0 else 0.0
    return {
        "value": fine,
        "coarse_value": coarse,
        "rel_change": rel,
        "resolved": rel <= 0.01,
        "s": s,
        "grid": grid,
    }


def sobolev_norm(F: Multiplier, s: float, grid: int = 2048) -> float:
    return sobolev_norm_report(F, s, grid)["value"]


def _dilate(F: Multiplier, t: float) -> Multiplier:
    base = F.fn
    lo, hi = F.support

    def fn(lam):
        return base(t * np.asarray(lam, dtype=float))

    return Multiplier(
        family=F.family,
        params=F.params,
        support=(lo / t, hi / t),
        smoothness=F.smoothness,
        fn=fn,
    )


def _windowed_dilate(F: Multiplier, t: float, window: BumpSpec) -> Multiplier:
    base = F.fn

    def fn(lam):
        return base(t * np.asarray(lam, dtype=float)) * window(lam)

    return Multiplier(family="windowed", params={"t": t}, support=window.support, fn=fn)


def mw_norm(
    F: Multiplier,
    s: float,
    window: BumpSpec | None = None,
    t_grid: tuple | None = None,
    grid: int = 1024,
    threads: int = 1,
) -> float:
    """sup over dilations t of || F(t .) window ||_{W_2^s}.

    t runs over the global quarter-octave lattice 2^{k/4} intersected
    with the range where the dilated support can meet the window, so
    dyadic dilates of F scan literally the same t values shifted by an
    integer k, making dilation invariance exact.
    """
    if window is None:
        window = mw_window()
    w_lo, w_hi = window.support
    if t_grid is None:
        lo = max(F.k_lo, F.k_hi / 256.0) / w_hi
        hi = 2.0 * F.k_hi / w_lo
        t_grid = (lo, hi)
    k_lo = math.ceil(4.0 * math.log2(t_grid[0]))
    k_hi = math.floor(4.0 * math.log2(t_grid[1]))
    ts = [2.0 ** (k / 4.0) for k in range(k_lo, k_hi + 1)]

    def one(t):
        return sobolev_norm(_windowed_dilate(F, t, window), s, grid)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            vals = list(ex.map(one, ts))
    else:
        vals = [one(t) for t in ts]
    return max(vals) if vals else 0.0


# ---------------------------------------------------------------------------
# discrete difference calculus


def difference_op(f, beta) -> object:
    """Iterated forward differences: (delta^beta f)(n), n an int tuple.

    f is a callable on integer multi-indices. The returned callable
    expands delta^beta through the binomial alternating sum, one
    coordinate at a time.
    """
    beta = tuple(int(b) for b in np.atleast_1d(beta))
    if any(b < 0 for b in beta):
        raise ValueError("beta must be a nonnegative multi-index")

    def delta_f(n):
        n = tuple(int(v) for v in np.atleast_1d(n))
        if len(n) != len(beta):
            raise ValueError("n and beta must have the same length")
        total = 0.0
        # iterate over gamma <= beta with alternating binomial weights
        ranges = [range(b + 1) for b in beta]
        import itertools

        for gamma in itertools.product(*ranges):
            w = 1.0
            for bj, gj in zip(beta, gamma):
                w *= (-1.0) ** (bj - gj) * math.comb(bj, gj)
            total += w * f(tuple(ni + gi for ni, gi in zip(n, gamma)))
        return total

    return delta_f


def _nu_beta_nodes(beta, order: int = 12):
    """Tensor rule for the law of per-coordinate sums of uniforms.

    One uniform[0,1] per unit of each beta_j; returns (points, weights)
    with points shaped (n_nodes, len(beta)) giving s = sum of the
    uniforms per coordinate.
    """
    from .quadrature import gauss_legendre

    x, w = gauss_legendre(order)
    x01 = 0.5 * (x + 1.0)
    w01 = 0.5 * w
    grids = []
    weights = []
    total = int(sum(beta))
    import itertools

    for combo in itertools.product(range(order), repeat=total):
        grids.append([x01[i] for i in combo])
        weights.append(math.prod(w01[i] for i in combo))
    pts = np.array(grids) if grids else np.zeros((1, 0))
    wts = np.array(weights) if weights else np.ones(1)
    # fold the |beta| uniforms into per-coordinate sums
    s = np.zeros((len(pts), len(beta)))
    pos = 0
    for j, bj in enumerate(beta):
        if bj:
            s[:, j] = pts[:, pos : pos + bj].sum(axis=1)
        pos += bj
    return s, wts


def discrete_to_continuous_check(
    f_smooth,
    beta,
    n,
    mc_samples: int = 0,
    deriv=None,
    seed: int = 0,
    tol: float | None = None,
) -> tuple:
    """delta^beta f(n) against int of the beta-derivative of f over nu_beta.

    nu_beta is the law of coordinate-wise sums of independent
    uniform[0,1] increments, one per unit of beta: the measure under
    which the identity is exact by iterating the fundamental theorem of
    calculus. deriv, if given, evaluates the mixed beta-derivative of
    f_smooth; otherwise central differences with Richardson fallback
    are used. mc_samples > 0 switches the integral to Monte Carlo.

    Returns (lhs, rhs, holds).
    """
    beta = tuple(int(b) for b in np.atleast_1d(beta))
    n = np.asarray(n, dtype=float)

    def f_lattice(idx):
        return f_smooth(np.asarray(idx, dtype=float))

    lhs = difference_op(f_lattice, beta)(tuple(int(v) for v in n))

    if deriv is None:
        deriv = _numeric_mixed_derivative(f_smooth, beta)

    if mc_samples > 0:
        rng = np.random.default_rng(seed)
        total = int(sum(beta))
        u = rng.random((mc_samples, total))
        s = np.zeros((mc_samples, len(beta)))
        pos = 0
        for j, bj in enumerate(beta):
            if bj:
                s[:, j] = u[:, pos : pos + bj].sum(axis=1)
            pos += bj
        vals = np.array([deriv(n + si) for si in s])
        rhs = float(np.mean(vals))
        if tol is None:
            spread = float(np.std(vals)) if mc_samples > 1 else 1.0
            tol = 6.0 * spread / math.sqrt(mc_samples) + 1e-9
    else:
        s, w = _nu_beta_nodes(beta)
        vals = np.array([deriv(n + si) for si in s])
        rhs = float(w @ vals)
        if tol is None:
            tol = 1e-8 * max(1.0, abs(lhs))
    return lhs, rhs, bool(abs(lhs - rhs) <= tol)


def discrete_to_continuous_cs(
    f_smooth, beta, n, deriv=None
) -> tuple:
    """|delta^beta f(n)|^2 <= int |d^beta f(n+s)|^2 dnu_beta(s).

    The squared form of the identity by Cauchy-Schwarz against the
    probability measure nu_beta. Returns (lhs_sq, rhs_int, holds).
    """
    beta = tuple(int(b) for b in np.atleast_1d(beta))
    n = np.asarray(n, dtype=float)

    def f_lattice(idx):
        return f_smooth(np.asarray(idx, dtype=float))

    lhs = difference_op(f_lattice, beta)(tuple(int(v) for v in n)) ** 2
    if deriv is None:
        deriv = _numeric_mixed_derivative(f_smooth, beta)
    s, w = _nu_beta_nodes(beta)
    vals = np.array([deriv(n + si) ** 2 for si in s])
    rhs = float(w @ vals)
    return lhs, rhs, bool(lhs <= rhs * (1.0 + 1e-9) + 1e-12)


def _numeric_mixed_derivative(f, beta, h: float = 1e-4):
    """Mixed partial d^beta f via nested central differences."""
    beta = tuple(int(b) for b in np.atleast_1d(beta))
    dim = len(beta)

    def wrap(g, j):
        e = np.zeros(dim)
        e[j] = h

        def dg(y):
            y = np.asarray(y, dtype=float)
            return (g(y + e) - g(y - e)) / (2.0 * h)

        return dg

    g = f
    for j, bj in enumerate(beta):
        for _ in range(bj):
            g = wrap(g, j)
    return g


# ---------------------------------------------------------------------------
# JSON


def multiplier_to_json_dict(F: Multiplier) -> dict:
    out = {"family": F.family, "support": [F.k_lo, F.k_hi]}
    out.update({k: v for k, v in F.params.items() if isinstance(v, (int, float, str))})
    return out


def multiplier_from_json_dict(d: dict) -> Multiplier:
    fam = d["family"]
    oscillated = fam.endswith("+osc")
    if oscillated:
        fam = fam[: -len("+osc")]
    support = tuple(d.get("support", (0.0, 0.0))) if "support" in d else None
    if fam == "gaussian_bump":
        F = gaussian_bump(
            float(d["center"]),
            float(d["width"]),
            window=support,
            edge_frac=float(d.get("edge_frac", 0.025)),
        )
    elif fam == "poly_bump":
        F = poly_bump(int(d["p"]), support)
    elif fam == "heat":
        F = heat(float(d["T"]), window=support if support else (0.0, 40.0))
    elif fam == "table":
        F = table_multiplier(d["lam"], d["values"], support=support)
    else:
        raise ValueError(f"unknown multiplier family {fam!r}")
    if oscillated or ("omega" in d and fam != "table"):
        F = oscillate(F, float(d["omega"]))
    return F
