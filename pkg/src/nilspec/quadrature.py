"""Shared quadrature rules: panel Gauss-Legendre, sphere rules, angular factors.

The kernel integrals live on punctured dual spaces (radius in
[rho_min, rho_max] spanning several decades) and on spheres of
dimension 0..3. Radial rules are geometric panels with per-panel
Gauss-Legendre nodes whose count grows with the phase range the panel
has to resolve; sphere rules are exact product constructions for the
dimensions that occur at desk scale.
"""

from __future__ import annotations

import numpy as np
from scipy.special import jv, roots_legendre

_GL_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def gauss_legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    if n not in _GL_CACHE:
        _GL_CACHE[n] = roots_legendre(n)
    return _GL_CACHE[n]


def gl_on_interval(a: float, b: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes/weights mapped to [a, b]."""
    x, w = gauss_legendre(n)
    return 0.5 * (a + b) + 0.5 * (b - a) * x, 0.5 * (b - a) * w


def osc_node_count(phase_range: float, base: int) -> int:
    """Node count resolving an oscillation of the given total phase.

    Plain Gauss-Legendre resolves analytic oscillations at roughly half
    a node per radian; 0.45/rad plus the smooth-part base is used
    throughout (replaces a Filon split at desk scale).
    """
    return int(base + 0.45 * abs(phase_range))


def log_panel_rule(
    lo: float,
    hi: float,
    panels_per_decade: int = 3,
    base_nodes: int = 14,
    phase_scale: float = 0.0,
) -> tuple[np.ndarray, np.ndarray]:
    """Geometric-panel Gauss-Legendre rule on [lo, hi].

    phase_scale is the |frequency| the rule must resolve: each panel of
    width W gets osc_node_count(W * phase_scale, base_nodes) nodes.
    """
    if not (0 < lo < hi):
        raise ValueError("log_panel_rule requires 0 < lo < hi")
    n_dec = max(1, int(np.ceil(np.log10(hi / lo))))
    edges = np.geomspace(lo, hi, n_dec * panels_per_decade + 1)
    xs, ws = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        n = osc_node_count((b - a) * phase_scale, base_nodes)
        x, w = gl_on_interval(a, b, n)
        xs.append(x)
        ws.append(w)
    return np.concatenate(xs), np.concatenate(ws)


def sphere_rule(dim_ambient: int, n_nodes: int = 24) -> tuple[np.ndarray, np.ndarray]:
    """Quadrature for integration over the unit sphere S^{d-1} in R^d.

    d = 1: the two-point sphere {+1, -1}, weights 1 each.
    d = 2: uniform angles (trapezoid, exact for trigonometric degree < n).
    d = 3: Gauss-Legendre in cos(theta) x uniform in phi.
    Returns (points (N, d), weights (N,)) with sum(w) = |S^{d-1}|.
    """
    if dim_ambient == 1:
        return np.array([[1.0], [-1.0]]), np.array([1.0, 1.0])
    if dim_ambient == 2:
        ang = (np.arange(n_nodes) + 0.5) * (2 * np.pi / n_nodes)
        pts = np.stack([np.cos(ang), np.sin(ang)], axis=1)
        return pts, np.full(n_nodes, 2 * np.pi / n_nodes)
    if dim_ambient == 3:
        n_theta = max(4, n_nodes // 4)
        n_phi = max(8, n_nodes)
        ct, wt = gauss_legendre(n_theta)
        st = np.sqrt(1.0 - ct * ct)
        phi = (np.arange(n_phi) + 0.5) * (2 * np.pi / n_phi)
        pts = []
        wts = []
        for c, s, w in zip(ct, st, wt):
            for p in phi:
                pts.append([s * np.cos(p), s * np.sin(p), c])
                wts.append(w * 2 * np.pi / n_phi)
        return np.array(pts), np.array(wts)
    raise NotImplementedError(f"sphere rule for ambient dimension {dim_ambient}")


def sphere_phase_factor(m: int, x) -> np.ndarray:
    """int_{S^{m-1}} e^{i x <w, e>} dsigma(w) as a function of |x| >= 0.

    Equals (2 pi)^{m/2} x^{1-m/2} J_{m/2-1}(x); real and smooth at 0.
    m = 1 gives 2 cos x, m = 2 gives 2 pi J_0, m = 3 gives 4 pi sinc.
    """
    x = np.asarray(x, dtype=float)
    if m == 1:
        return 2.0 * np.cos(x)
    if m == 3:
        return 4.0 * np.pi * np.sinc(x / np.pi)
    nu = m / 2.0 - 1.0
    out = np.empty_like(x)
    small = np.abs(x) < 1e-6
    # J_nu(x)/x^nu -> 2^{-nu}/Gamma(nu+1) as x -> 0
    from math import gamma

    out[small] = (2 * np.pi) ** (m / 2.0) * (0.5**nu) / gamma(nu + 1.0) * (
        1.0 - x[small] ** 2 / (4.0 * (nu + 1.0))
    )
    xs = x[~small]
    out[~small] = (2 * np.pi) ** (m / 2.0) * jv(nu, xs) / xs**nu
    return out


def pairwise_sum(values: np.ndarray) -> float:
    """Deterministic pairwise reduction (order independent of chunking)."""
    v = np.asarray(values, dtype=values.dtype if hasattr(values, "dtype") else float).ravel()
    if v.size == 0:
        return 0.0
    while v.size > 1:
        half = v.size // 2
        head = v[: 2 * half].reshape(half, 2).sum(axis=1)
        v = np.concatenate([head, v[2 * half :]])
    return v[0]
