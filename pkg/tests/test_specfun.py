"""Special-function layer: recurrences vs independent oracles.

The polynomial recurrences are hand-rolled; scipy's eval_genlaguerre
and closed Gaussian integrals act as the second route. Truncated
weighted sums are checked against mpmath at extreme underflow depth
and against hyperbolic generating functions.
"""

import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import eval_genlaguerre, roots_laguerre

from nilspec import specfun as SF


# --- plain Laguerre polynomials -----------------------------------------------


def test_laguerre_poly_low_degrees():
    assert SF.laguerre_poly(0, 5, 3.3) == 1.0
    assert np.isclose(SF.laguerre_poly(1, 2, 0.5), 2.5, atol=1e-14)  # k+1-t
    assert np.isclose(SF.laguerre_poly(3, 2, 0.0), 10.0, atol=1e-14)  # C(5,3)


@settings(max_examples=80, deadline=None)
@given(
    n=st.integers(0, 40),
    k=st.integers(0, 8),
    t=st.floats(0.0, 50.0),
)
def test_laguerre_poly_vs_scipy(n, k, t):
    ours = SF.laguerre_poly(n, k, t)
    ref = eval_genlaguerre(n, k, t)
    assert abs(ours - ref) <= 1e-10 * max(1.0, abs(ref))


def test_scaled_laguerre_definition_and_negative_index():
    t = 0.8
    for n in range(6):
        want = (-1.0) ** n * math.exp(-t) * eval_genlaguerre(n, 3, 2 * t)
        assert np.isclose(SF.laguerre_fn(n, 3, t), want, rtol=1e-13)
    assert SF.laguerre_fn(-1, 4, 2.0) == 0.0
    assert SF.laguerre_fn(-3, 0, 2.0) == 0.0
    assert np.isclose(SF.laguerre_fn(0, 0, 1.0), math.exp(-1.0), rtol=1e-15)
    assert abs(SF.laguerre_fn(1, 0, 0.5)) < 1e-15  # -e^{-t}(1-2t) at t=1/2


def test_laguerre_fn_rows_matches_scalar():
    t = np.array([0.0, 0.3, 4.7, 33.0])
    rows = SF.laguerre_fn_rows(12, 2, t)
    assert rows.shape == (13, 4)
    for n in range(13):
        for i, ti in enumerate(t):
            assert np.isclose(rows[n, i], SF.laguerre_fn(n, 2, ti), rtol=1e-12, atol=1e-300)


# --- the three displayed identities -------------------------------------------


def test_identity_stepdown_in_type():
    # scaled form of L_n^{(k)} = L_n^{(k+1)} - L_{n-1}^{(k+1)}
    rng = np.random.default_rng(11)
    for _ in range(40):
        n = int(rng.integers(0, 41))
        k = int(rng.integers(0, 9))
        t = float(rng.uniform(0.0, 50.0))
        lhs = SF.laguerre_fn(n, k, t)
        rhs = SF.laguerre_fn(n - 1, k + 1, t) + SF.laguerre_fn(n, k + 1, t)
        assert abs(lhs - rhs) <= 1e-10 * max(1.0, abs(lhs))


def test_identity_derivative():
    rng = np.random.default_rng(12)
    h = 1e-5
    for _ in range(40):
        n = int(rng.integers(0, 41))
        k = int(rng.integers(0, 9))
        t = float(rng.uniform(0.1, 50.0))
        num = (SF.laguerre_fn(n, k, t + h) - SF.laguerre_fn(n, k, t - h)) / (2 * h)
        rhs = SF.laguerre_fn(n - 1, k + 1, t) - SF.laguerre_fn(n, k + 1, t)
        assert abs(num - rhs) <= 1e-6 * max(1.0, abs(rhs))


def test_identity_orthogonality():
    """int_0^inf Ell_n Ell_m t^k dt = delta_nm (n+k)!/(2^{k+1} n!)."""
    nodes, weights = roots_laguerre(300)
    for k in (0, 2, 5):
        for n in (0, 1, 7, 15):
            for m in (0, 1, 7, 15):
                # substitute s = 2t; the e^{-s} weight is the quadrature's
                vals = (
                    (-1.0) ** (n + m)
                    * SF.laguerre_poly(n, k, nodes)
                    * SF.laguerre_poly(m, k, nodes)
                    * (nodes / 2.0) ** k
                    / 2.0
                )
                got = float(weights @ vals)
                want = math.factorial(n + k) / (2.0 ** (k + 1) * math.factorial(n)) if n == m else 0.0
                if n == m:
                    assert abs(got - want) <= 1e-8 * want
                else:
                    assert abs(got) <= 1e-8
    # pinned diagonal value: n = m = 0, k = 0 integrates e^{-2t} to 1/2
    diag = float(weights @ (np.ones_like(nodes) / 2.0))
    assert abs(diag - 0.5) < 1e-12


# --- Hermite functions ---------------------------------------------------------


def test_hermite_ground_state():
    assert np.isclose(SF.hermite_fn(0, 0.0), math.pi ** -0.25, rtol=1e-14)
    t = 1.3
    assert np.isclose(SF.hermite_fn(0, t), math.pi ** -0.25 * math.exp(-t * t / 2), rtol=1e-13)


@settings(max_examples=40, deadline=None)
@given(ell=st.integers(0, 20), t=st.floats(-6.0, 6.0))
def test_hermite_parity(ell, t):
    a = SF.hermite_fn(ell, t)
    b = SF.hermite_fn(ell, -t)
    assert abs(b - (-1.0) ** ell * a) <= 1e-12 * max(1.0, abs(a))


def test_hermite_orthonormal_under_quadrature():
    x, w = SF.gauss_hermite(200)
    # strip the Gaussian: h_l(x) h_m(x) = p_l(x) p_m(x) e^{-x^2}
    rows = np.array([SF.hermite_poly_part(l, x) for l in range(16)])
    gram = (rows * w) @ rows.T
    assert np.abs(gram - np.eye(16)).max() < 1e-10


# --- Fourier-Wigner diagonal ---------------------------------------------------


def test_fourier_wigner_closed_form():
    # V(omega; a, b) = (-1)^omega Ell_omega^{(0)}(a^2 + b^2); sign checked
    # against the quadrature route, normalization pinned at omega = 0
    assert np.isclose(SF.fourier_wigner_hermite(0, 0.0, 0.0), 1.0, atol=1e-12)
    rng = np.random.default_rng(3)
    for omega in (0, 1, 2, 3, 6, 10):
        th1, th2 = rng.uniform(-2, 2, size=2)
        t = th1 * th1 + th2 * th2
        closed = (-1.0) ** omega * SF.laguerre_fn(omega, 0, t)
        got = SF.fourier_wigner_hermite(omega, th1, th2)
        assert abs(got - closed) <= 1e-9 * max(abs(closed), math.exp(-t))


def test_fourier_wigner_unit_at_origin():
    for omega in range(8):
        assert np.isclose(SF.fourier_wigner_hermite(omega, 0.0, 0.0), 1.0, atol=1e-11)


# --- retype operator -----------------------------------------------------------


def test_retype_identity_and_shift():
    f = np.array([1.0, -2.0, 0.5])
    assert np.allclose(SF.laguerre_series_retype(f, 3, 3), f)
    g = SF.laguerre_series_retype(np.array([1.0]), 0, 1)
    assert np.allclose(g, [1.0])  # shift annihilates delta_0


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 9999), k=st.integers(0, 4), h=st.integers(0, 4))
def test_retype_preserves_series_values(seed, k, h):
    rng = np.random.default_rng(seed)
    f = rng.standard_normal(11)
    g = SF.laguerre_series_retype(f, k, h)
    for t in rng.uniform(0.0, 20.0, size=6):
        sk = sum(f[n] * SF.laguerre_fn(n, k, t) for n in range(len(f)))
        sh = sum(g[n] * SF.laguerre_fn(n, h, t) for n in range(len(g)))
        assert abs(sk - sh) <= 1e-10 * max(1.0, abs(sk))


def test_retype_round_trip():
    rng = np.random.default_rng(1)
    f = rng.standard_normal(8)
    back = SF.laguerre_series_retype(SF.laguerre_series_retype(f, 1, 4), 4, 1)
    assert back.shape == f.shape
    assert np.allclose(back, f, atol=1e-12)


# --- renormalized weighted sums -------------------------------------------------


def gen_heat_sum(a: float, t: float, nmax: int) -> float:
    # sum_n e^{-(2n+1)a} Ell_n^{(0)}(t) -> e^{-t tanh a}/(2 cosh a)
    coefs = np.exp(-(2 * np.arange(nmax + 1) + 1) * a)
    return float(SF.laguerre_weighted_sum(coefs, 0, np.array([t]))[0])


def test_weighted_sum_matches_generating_function():
    for a in (0.05, 0.3, 1.0):
        for t in (0.0, 3.0, 77.0, 1500.0, 4.0e4):
            nmax = int((t * math.tanh(a) + 40.0) / (2 * a)) + 10
            got = gen_heat_sum(a, t, nmax)
            want = math.exp(-t * math.tanh(a)) / (2 * math.cosh(a))
            if want < 1e-290:
                continue
            assert abs(got - want) <= 1e-12 * want, (a, t)


def test_weighted_sum_type_one_generating_function():
    # sum_n e^{-(2n+2)a} Ell_n^{(1)}(t) = e^{-t tanh a}/(2 cosh a)^2
    for a, t in [(0.2, 5.0), (0.07, 300.0), (0.4, 1.0)]:
        nmax = int((t * math.tanh(a) + 40.0) / (2 * a)) + 10
        coefs = np.exp(-(2 * np.arange(nmax + 1) + 2) * a)
        got = float(SF.laguerre_weighted_sum(coefs, 1, np.array([t]))[0])
        want = math.exp(-t * math.tanh(a)) / (2 * math.cosh(a)) ** 2
        assert abs(got - want) <= 1e-12 * want


def test_weighted_sum_deep_underflow_vs_mpmath():
    """Partial sums where every term underflows float64 individually."""
    mpmath.mp.dps = 60
    t = 350.0  # e^{-350} ~ 1e-152: all terms denormal-or-zero naively
    nmax = 60
    coefs = 1.0 / (1.0 + np.arange(nmax + 1.0)) ** 2
    got = float(SF.laguerre_weighted_sum(coefs, 0, np.array([t]))[0])
    want = mpmath.mpf(0)
    for n in range(nmax + 1):
        ln = mpmath.laguerre(n, 0, 2 * mpmath.mpf(t))
        want += mpmath.mpf(coefs[n]) * (-1) ** n * mpmath.e ** (-mpmath.mpf(t)) * ln
    want = float(want)
    assert abs(got - want) <= 1e-12 * abs(want)


def test_weighted_sum_batched_columns():
    rng = np.random.default_rng(8)
    t = np.array([0.5, 12.0, 200.0])
    coefs = rng.standard_normal((41, 4))
    out = SF.laguerre_weighted_sum(coefs, 2, t)
    assert out.shape == (4, 3)
    for b in range(4):
        single = SF.laguerre_weighted_sum(coefs[:, b], 2, t)
        assert np.allclose(out[b], single, rtol=1e-12, atol=1e-300)


def test_weighted_sum_zero_coefs():
    out = SF.laguerre_weighted_sum(np.zeros(5), 0, np.array([1.0, 10.0]))
    assert np.all(out == 0.0)
