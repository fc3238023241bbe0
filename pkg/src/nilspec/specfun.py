"""Stable Hermite and Laguerre evaluation kernels.

Everything here is a pure function built on forward three-term
recurrences. The scaled Laguerre family

    scaled_L[n,k](t) = (-1)^n exp(-t) L_n^(k)(2t)

is the radial building block of convolution kernels on 2-step groups;
fusing the exponential into the recurrence keeps values O(1) where the
naked polynomial would overflow. Declared trust envelope for direct
evaluation: n <= 200, k <= 16, t <= 400 (tested at the boundary).
Weighted sums reach far beyond that through exponent renormalization
(`laguerre_weighted_sum`), which carries a running log-scale so that
coefficients weighted like exp(-(2n+1)a) can be summed at t ~ 5e4.
"""

from __future__ import annotations

import numpy as np
from scipy.special import roots_hermite

__all__ = [
    "laguerre_poly",
    "laguerre_fn",
    "laguerre_fn_rows",
    "laguerre_weighted_sum",
    "hermite_fn",
    "hermite_fn_rows",
    "hermite_poly_part",
    "fourier_wigner_hermite",
    "laguerre_series_retype",
    "ENVELOPE_N",
    "ENVELOPE_K",
    "ENVELOPE_T",
]

# Declared trust region for direct (non-renormalized) evaluation.
ENVELOPE_N = 200
ENVELOPE_K = 16
ENVELOPE_T = 400.0


def laguerre_poly(n: int, k: int, t):
    """Generalized Laguerre polynomial L_n^(k)(t) by forward recurrence.

    n, k >= 0. Vectorized over t.
    """
    if n < 0 or k < 0:
        raise ValueError("laguerre_poly requires n >= 0 and k >= 0")
    t = np.asarray(t, dtype=float)
    p_prev = np.ones_like(t)
    if n == 0:
        return p_prev if p_prev.ndim else float(p_prev)
    p_cur = (k + 1) - t
    for m in range(1, n):
        p_prev, p_cur = p_cur, (((2 * m + k + 1) - t) * p_cur - (m + k) * p_prev) / (m + 1)
    return p_cur if p_cur.ndim else float(p_cur)


def laguerre_fn(n: int, k: int, t):
    """Scaled Laguerre function (-1)^n e^{-t} L_n^(k)(2t); zero for n < 0.

    Evaluated by the fused recurrence
        S_0 = e^{-t},  S_1 = (2t-k-1) e^{-t},
        S_{m+1} = ((2t-(2m+k+1)) S_m - (m+k) S_{m-1})/(m+1),
    which keeps every intermediate bounded on t >= 0.
    """
    if k < 0:
        raise ValueError("laguerre_fn requires k >= 0")
    t = np.asarray(t, dtype=float)
    if n < 0:
        z = np.zeros_like(t)
        return z if z.ndim else 0.0
    s_prev = np.exp(-t)
    if n == 0:
        return s_prev if s_prev.ndim else float(s_prev)
    s_cur = (2 * t - (k + 1)) * s_prev
    for m in range(1, n):
        s_prev, s_cur = s_cur, ((2 * t - (2 * m + k + 1)) * s_cur - (m + k) * s_prev) / (m + 1)
    return s_cur if s_cur.ndim else float(s_cur)


def laguerre_fn_rows(n_max: int, k: int, t) -> np.ndarray:
    """All scaled Laguerre values for n = 0..n_max at once.

    Returns array of shape (n_max+1,) + t.shape. Used to build kernel
    tables where every order is contracted against quadrature weights.
    """
    if n_max < 0 or k < 0:
        raise ValueError("laguerre_fn_rows requires n_max >= 0 and k >= 0")
    t = np.atleast_1d(np.asarray(t, dtype=float))
    out = np.empty((n_max + 1,) + t.shape)
    out[0] = np.exp(-t)
    if n_max >= 1:
        out[1] = (2 * t - (k + 1)) * out[0]
    for m in range(1, n_max):
        out[m + 1] = ((2 * t - (2 * m + k + 1)) * out[m] - (m + k) * out[m - 1]) / (m + 1)
    return out


def laguerre_weighted_sum(coefs, k: int, t) -> np.ndarray:
    """Sum_n coefs[n] * scaled_L[n,k](t), stable for very large t.

    For t beyond ~745 the factor e^{-t} underflows while the weighted
    sum itself can be O(1) (e.g. heat-type coefficients). The recurrence
    is therefore run on rescaled values carrying an explicit exponent E
    per t-entry: whenever magnitudes exceed 1e100 the chunk accumulator
    is flushed through exp(-E) and the pair is renormalized. Chunk
    length is bounded by the projected per-step growth log(2 t_max/n)
    so no intermediate can overflow between checks.

    coefs: shape (N+1,) or (N+1, B) for B coefficient batches sharing
    the t grid. t: 1-d array. Returns shape t.shape or (B,) + t.shape.
    """
    if k < 0:
        raise ValueError("laguerre_weighted_sum requires k >= 0")
    t = np.atleast_1d(np.asarray(t, dtype=float))
    coefs = np.asarray(coefs)
    batched = coefs.ndim == 2
    n_max = coefs.shape[0] - 1
    out_dtype = np.result_type(coefs.dtype, float)

    def wcoef(i):
        # broadcastable multiplier for recurrence row shape t.shape
        return coefs[i][:, None] if batched else coefs[i]

    E = t.copy()
    L0 = np.ones_like(t)
    shape = ((coefs.shape[1],) if batched else ()) + t.shape
    acc = np.zeros(shape, dtype=out_dtype)
    accs = np.zeros(shape, dtype=out_dtype)
    accs += wcoef(0) * L0
    if n_max == 0:
        return acc + accs * np.exp(-E)
    L1 = (2 * t - (k + 1)) * np.ones_like(t)
    accs += wcoef(1) * L1
    t_top = float(t.max()) if t.size else 0.0
    n = 1
    while n < n_max:
        growth = np.log(2.0 * t_top / (n + 1) + 4.0)
        chunk = int(max(1, min(256, 110.0 / max(growth, 1e-3))))
        hi = min(n + chunk, n_max)
        for m in range(n, hi):
            L0, L1 = L1, ((2 * t - (2 * m + k + 1)) * L1 - (m + k) * L0) / (m + 1)
            accs += wcoef(m + 1) * L1
        n = hi
        mag = np.maximum(np.abs(L0), np.abs(L1))
        big = mag > 1e100
        if np.any(big):
            acc += accs * np.exp(-E)
            accs = np.zeros(shape, dtype=out_dtype)
            safe = np.where(big, mag, 1.0)
            L0 = L0 / safe
            L1 = L1 / safe
            E = E - np.where(big, np.log(safe), 0.0)
    acc += accs * np.exp(-E)
    return acc


def hermite_fn(ell: int, t):
    """L^2-normalized Hermite function h_ell(t).

    h_0(t) = pi^{-1/4} e^{-t^2/2};
    h_{l+1}(t) = t sqrt(2/(l+1)) h_l(t) - sqrt(l/(l+1)) h_{l-1}(t).
    """
    if ell < 0:
        raise ValueError("hermite_fn requires ell >= 0")
    t = np.asarray(t, dtype=float)
    h_prev = np.pi ** (-0.25) * np.exp(-t * t / 2.0)
    if ell == 0:
        return h_prev if h_prev.ndim else float(h_prev)
    h_cur = t * np.sqrt(2.0) * h_prev
    for m in range(1, ell):
        h_prev, h_cur = h_cur, t * np.sqrt(2.0 / (m + 1)) * h_cur - np.sqrt(m / (m + 1.0)) * h_prev
    return h_cur if h_cur.ndim else float(h_cur)


def hermite_fn_rows(ell_max: int, t) -> np.ndarray:
    """h_0..h_ell_max stacked; shape (ell_max+1,) + t.shape."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    out = np.empty((ell_max + 1,) + t.shape)
    out[0] = np.pi ** (-0.25) * np.exp(-t * t / 2.0)
    if ell_max >= 1:
        out[1] = t * np.sqrt(2.0) * out[0]
    for m in range(1, ell_max):
        out[m + 1] = t * np.sqrt(2.0 / (m + 1)) * out[m] - np.sqrt(m / (m + 1.0)) * out[m - 1]
    return out


def hermite_poly_part(ell: int, t):
    """h_ell(t) with the gaussian stripped: h_ell(t) * e^{t^2/2}.

    Safe for |t| up to Gauss-Hermite node range (the same recurrence
    without the decaying envelope), needed when the e^{-t^2} weight is
    supplied by the quadrature rule itself.
    """
    if ell < 0:
        raise ValueError("hermite_poly_part requires ell >= 0")
    t = np.asarray(t, dtype=float)
    p_prev = np.full_like(t, np.pi ** (-0.25))
    if ell == 0:
        return p_prev if p_prev.ndim else float(p_prev)
    p_cur = t * np.sqrt(2.0) * p_prev
    for m in range(1, ell):
        p_prev, p_cur = p_cur, t * np.sqrt(2.0 / (m + 1)) * p_cur - np.sqrt(m / (m + 1.0)) * p_prev
    return p_cur if p_cur.ndim else float(p_cur)


_GH_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def gauss_hermite(n_nodes: int) -> tuple[np.ndarray, np.ndarray]:
    """Cached Gauss-Hermite rule (weight e^{-x^2})."""
    if n_nodes not in _GH_CACHE:
        _GH_CACHE[n_nodes] = roots_hermite(n_nodes)
    return _GH_CACHE[n_nodes]


def fourier_wigner_hermite(omega: int, theta1: float, theta2: float, n_nodes: int = 400) -> float:
    """V(omega; th1, th2) = int e^{2 i t th1} h_om(t+th2) h_om(t-th2) dt.

    Computed by Gauss-Hermite quadrature: the integrand carries the
    envelope e^{-t^2 - th2^2}, so with the e^{-x^2} weight factored out
    only polynomial parts and a cosine remain (the integral is real by
    the parity of the Hermite pair). Normalization is pinned by the
    omega = 0 case, V(0;0,0) = 1.

    The closed form, tested rather than assumed, is
    (-1)^omega * scaled_L[omega,0](th1^2 + th2^2).
    """
    if omega < 0:
        raise ValueError("fourier_wigner_hermite requires omega >= 0")
    x, w = gauss_hermite(n_nodes)
    p_plus = hermite_poly_part(omega, x + theta2)
    p_minus = hermite_poly_part(omega, x - theta2)
    # e^{x^2} * h(x+a) h(x-a) = p(x+a) p(x-a) e^{-a^2}
    vals = np.cos(2.0 * theta1 * x) * p_plus * p_minus * np.exp(-theta2 * theta2)
    return float(np.dot(w, vals))


def laguerre_series_retype(f, k: int, h: int) -> np.ndarray:
    """Retype a finite Laguerre-series coefficient sequence from k to h.

    If Sum_n f(n) scaled_L[n,k] is the series, the returned g satisfies
    Sum_n g(n) scaled_L[n,h] = same function. Raising the type by one
    applies (1+shift): g(n) = f(n) + f(n+1); lowering inverts it by the
    finite alternating sum g(n) = sum_l (-1)^l f(n+l). f is a finitely
    supported sequence given as a 1-d array from n = 0.
    """
    g = np.asarray(f, dtype=float).copy()
    if g.ndim != 1:
        raise ValueError("coefficient sequence must be 1-d")
    steps = h - k
    if steps >= 0:
        for _ in range(steps):
            g = g + np.concatenate([g[1:], [0.0]])
    else:
        for _ in range(-steps):
            # inverse of (1+shift): alternating tail sum, finite support
            inv = np.zeros_like(g)
            run = 0.0
            for i in range(len(g) - 1, -1, -1):
                run = g[i] - run
                inv[i] = run
            g = inv
    return g
