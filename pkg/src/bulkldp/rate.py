"""Exact large-deviation rate functions for the two bulk processes.

Single-interval Sch rate (per unit tau):
    I(q)  = (2 - a)/8 - E(a)/(4 K(a)),  a = K^{-1}(pi/(2q)),  q > 0
    I'(q) = (1 - a)/(4q) - E(a)/(2 pi)          (cancellation-free form)
    I''(q) = pi / (16 q^3 K'(a))
    I_Sch(rho) = I(2 pi rho)

Sine rate:
    I_Sine(rho) = (1/8) [ nu/8 + rho H(nu) ],  nu = gamma^{-1}(rho)
with gamma the decreasing bijection (-inf, 1] -> [0, inf),
    gamma(nu) = (H(nu)/8) * int_{-inf}^{nu} H(x)^{-2} dx   (nu < 0)
    gamma(nu) = (H(nu)/8) * int_{1}^{nu}    H(x)^{-2} dx   (0 < nu < 1)
    gamma(0) = 1/(2 pi), gamma(1) = 0,
which also solves 4 x (1 - x) gamma'' = gamma with
gamma(-x) ~ sqrt(x)/4 at -inf.

Numerical scheme for gamma:

* nu < 0: substitute x = -w, u = log(16 (1 + w)).  Then
      int H(x)^{-2} dx = int G(u) du,  G(u) = (K(z) - E(z))^{-2},
  z = 1 - 16 e^{-u}, because H(-w)^2 = (1+w)(K(z) - E(z))^2 and
  dx = -(1+w) du.  G has a double pole at u0 = log 16 (i.e. x = 0) which
  is removed by subtracting P(u) = 16 e^{u-u0} / (pi^2 (e^{u-u0}-1)^2)
  (the image of 16/(pi^2 x^2), with closed-form antiderivative), and the
  u -> inf tail beyond U = 45 is the analytic 4/(U-2) with only
  O(U e^{-U}) model error since G(u) = 4 (u-2)^{-2} (1 + O(u e^{-u})).
* 0 < nu < 1: direct quadrature of H^{-2} - 16/(pi^2 x^2) on [nu, 1] plus
  the closed form of the subtracted term.  The subtraction is what keeps
  the product with the H(nu) ~ -pi nu / 4 prefactor accurate as nu -> 0.
* |nu| < 1e-6: gamma(nu) = 1/(2 pi) + (nu log|nu| - nu) / (8 pi), from
  gamma'(nu) ~ log|nu| / (8 pi).

The inverse of I' never solves a nested root problem: with
q = pi/(2 K(a)) one has the identity I'(pi/(2K(a))) = H(a)/(2 pi), so
inv_big_i_prime(c) = pi / (2 K(H^{-1}(2 pi c))).
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
from scipy import integrate

from . import special as sp
from .errors import ConvergenceError, DomainError

TWO_PI = 2.0 * math.pi
HALF_PI = 0.5 * math.pi
TYPICAL_DENSITY = 1.0 / TWO_PI

_U0 = math.log(16.0)
_UMAX = 45.0
_NEAR_ZERO_NU = 1e-8
_Y_DELTA = 18.0  # above this K-target, work with delta = 16 exp(-2y) directly
_ROOT_MAX_ITER = 200


# ---------------------------------------------------------------------------
# gamma machinery
# ---------------------------------------------------------------------------

def _g_u(u: float) -> float:
    """(K(z) - E(z))^{-2} at z = 1 - 16 exp(-u), for u > log 16."""
    delta = 16.0 * math.exp(-u)
    d = sp.ke_diff_from_delta(delta)
    return 1.0 / (d * d)


def _p_u(u: float) -> float:
    """Pole model: image of 16/(pi^2 x^2) under the u-substitution."""
    es = math.expm1(u - _U0)
    return 16.0 * math.exp(u - _U0) / (math.pi ** 2 * es * es)


# Inside |s| < _POLE_CUT the pole-subtracted remainders are evaluated from
# their two-term expansions; G - P and H^{-2} - 16/(pi^2 x^2) suffer
# catastrophic cancellation in double precision there, while the expansion
# truncation is O(s) and enters gamma multiplied by H(nu) = O(s), i.e. far
# below 1e-12.
_POLE_CUT = 1e-4


def _int_inv_h2(ua: float, ub: float) -> float:
    """int_{ua}^{ub} G(u) du with the pole subtracted and re-added exactly.

    The remainder G - P is log-singular at u0 = log 16: it equals
    4/(pi^2 s) + 5/(4 pi^2) + O(s) with s = u - u0, so the inner part is
    integrated from that model and the rest numerically in v = log s,
    where it is bounded and smooth.
    """
    sa, sb = ua - _U0, ub - _U0
    val = 0.0
    if sa < _POLE_CUT:
        sc = min(_POLE_CUT, sb)
        val += (4.0 / math.pi ** 2) * math.log(sc / sa) + (5.0 / (4.0 * math.pi ** 2)) * (sc - sa)
        sa = sc
    if sa < sb:
        q, _ = integrate.quad(
            lambda v: (_g_u(_U0 + math.exp(v)) - _p_u(_U0 + math.exp(v))) * math.exp(v),
            math.log(sa),
            math.log(sb),
            limit=300,
        )
        val += q
    sub = (16.0 / math.pi ** 2) * (1.0 / math.expm1(ua - _U0) - 1.0 / math.expm1(ub - _U0))
    return val + sub


def _int_inv_h2_tail(ua: float) -> float:
    """int_{ua}^{inf} G(u) du = int_{-inf}^{x(ua)} H^{-2} dx."""
    return _int_inv_h2(ua, _UMAX) + 4.0 / (_UMAX - 2.0)


def _u_of_neg_x(x: float) -> float:
    """u = log(16 (1 - x)) for x <= 0."""
    return math.log1p(-x) + _U0


def _s_pos(nu: float) -> float:
    """int_{nu}^{1} H(x)^{-2} dx for 0 < nu < 1, pole-subtracted at x = 0.

    The remainder r = H^{-2} - 16/(pi^2 x^2) equals
    -4/(pi^2 x) - 3/(4 pi^2) + O(x) near 0 (used below _POLE_CUT) and is
    integrated numerically in v = log x elsewhere.
    """
    c = 16.0 / math.pi ** 2
    val = 0.0
    xa = nu
    if xa < _POLE_CUT:
        val += -(4.0 / math.pi ** 2) * math.log(_POLE_CUT / xa) - (
            3.0 / (4.0 * math.pi ** 2)
        ) * (_POLE_CUT - xa)
        xa = _POLE_CUT

    def f(v: float) -> float:
        x = math.exp(v)
        h = float(sp.h_fn(x))
        return (1.0 / (h * h) - c / (x * x)) * x

    q, _ = integrate.quad(f, math.log(xa), 0.0, limit=300)
    return val + q + c * (1.0 / nu - 1.0)


@lru_cache(maxsize=8192)
def _gamma_cached(nu: float) -> float:
    if abs(nu) < _NEAR_ZERO_NU:
        if nu == 0.0:
            return TYPICAL_DENSITY
        return TYPICAL_DENSITY + (nu * math.log(abs(nu)) - nu) / (8.0 * math.pi)
    if nu < 0.0:
        return float(sp.h_fn(nu)) / 8.0 * _int_inv_h2_tail(_u_of_neg_x(nu))
    if nu == 1.0:
        return 0.0
    return -float(sp.h_fn(nu)) / 8.0 * _s_pos(nu)


def gamma_fn(nu: float) -> float:
    """The density gamma(nu) of the tilt parameter nu <= 1.

    Continuous, strictly decreasing, gamma(0) = 1/(2 pi), gamma(1) = 0,
    gamma(-x) ~ sqrt(x)/4 as x -> inf.
    """
    nu = float(nu)
    if not math.isfinite(nu) or nu > 1.0:
        raise DomainError(f"gamma_fn needs nu <= 1, got {nu}")
    return _gamma_cached(nu)


def _gamma_prime(nu: float, g: float) -> float:
    """gamma'(nu) from H gamma' = 1/8 + H' gamma with H' = -K/2."""
    h = float(sp.h_fn(nu))
    k = float(sp.k_fn(nu))
    return (0.125 - 0.5 * k * g) / h


def gamma_inv(rho: float, tol: float = 1e-10) -> float:
    """The unique nu <= 1 with gamma(nu) = rho (rho >= 0).

    Bisection on the strictly decreasing gamma to `tol`, then one Newton
    polish with the closed-form gamma'.
    """
    rho = float(rho)
    if not (rho >= 0.0) or not math.isfinite(rho):
        raise DomainError(f"gamma_inv needs rho >= 0, got {rho}")
    if rho == 0.0:
        return 1.0
    if abs(rho - TYPICAL_DENSITY) < 1e-14:
        return 0.0
    if rho > TYPICAL_DENSITY:
        lo, hi = -1.0, -1e-15
        it = 0
        while gamma_fn(lo) < rho:
            lo *= 4.0
            it += 1
            if it > _ROOT_MAX_ITER:
                raise ConvergenceError("gamma_inv bracket growth failed")
    else:
        lo, hi = 1e-15, 1.0 - 1e-15
    # gamma decreasing: gamma(lo) >= rho >= gamma(hi)
    for _ in range(_ROOT_MAX_ITER):
        mid = 0.5 * (lo + hi)
        if gamma_fn(mid) > rho:
            lo = mid
        else:
            hi = mid
        if hi - lo <= tol * max(1.0, abs(mid)):
            break
    else:
        raise ConvergenceError(f"gamma_inv bisection did not reach tol {tol}")
    nu = 0.5 * (lo + hi)
    if abs(nu) > _NEAR_ZERO_NU:
        g = gamma_fn(nu)
        gp = _gamma_prime(nu, g)
        if gp != 0.0 and math.isfinite(gp):
            nu_new = nu - (g - rho) / gp
            if lo - (hi - lo) <= nu_new <= hi + (hi - lo) and nu_new < 1.0:
                nu = nu_new
    return nu


# ---------------------------------------------------------------------------
# the Sch rate function I and friends
# ---------------------------------------------------------------------------

def _check_slope(q: float) -> float:
    q = float(q)
    if not (q > 0.0) or not math.isfinite(q):
        raise DomainError(f"slope must be > 0, got {q}")
    return q


def big_i(q: float) -> float:
    """The convex rate I(q) >= 0 of the constant-drift phase slope, I(1) = 0."""
    q = _check_slope(q)
    y = HALF_PI / q
    if y > _Y_DELTA:
        delta = 16.0 * math.exp(-2.0 * y)  # may underflow to 0: exact limit
        e = sp.e_from_delta(delta) if delta > 0.0 else 1.0
        return (1.0 + delta) / 8.0 - q * e / TWO_PI
    a = sp.inv_k(y)
    return (2.0 - a) / 8.0 - q * float(sp.e_fn(a)) / TWO_PI


def big_i_prime(q: float) -> float:
    """I'(q) = (1 - a)/(4q) - E(a)/(2 pi); increasing, I'(0+) = -1/(2 pi)."""
    q = _check_slope(q)
    y = HALF_PI / q
    if y > _Y_DELTA:
        delta = 16.0 * math.exp(-2.0 * y)
        e = sp.e_from_delta(delta) if delta > 0.0 else 1.0
        return delta / (4.0 * q) - e / TWO_PI
    a = sp.inv_k(y)
    return (1.0 - a) / (4.0 * q) - float(sp.e_fn(a)) / TWO_PI


def big_i_second(q: float) -> float:
    """I''(q) = pi / (16 q^3 K'(K^{-1}(pi/(2q)))) > 0."""
    q = _check_slope(q)
    y = HALF_PI / q
    if y > _Y_DELTA:
        delta = 16.0 * math.exp(-2.0 * y)
        if delta == 0.0:
            return 0.0  # exact limit: I is affine to all orders as q -> 0
        # K'(1-delta) = (E - delta K)/(2 delta (1-delta)) ~ 1/(2 delta)
        kp = (sp.e_from_delta(delta) - delta * sp.k_from_delta(delta)) / (
            2.0 * delta * (1.0 - delta)
        )
        return math.pi / (16.0 * q ** 3 * kp)
    a = sp.inv_k(y)
    return math.pi / (16.0 * q ** 3 * sp.ellip_k_deriv(a))


def inv_big_i_prime(c: float) -> float:
    """The unique q > 0 with I'(q) = c, for c > -1/(2 pi).

    Uses I'(pi/(2 K(a))) = H(a)/(2 pi): q = pi / (2 K(H^{-1}(2 pi c))).
    """
    c = float(c)
    if not math.isfinite(c) or c <= -TYPICAL_DENSITY:
        raise DomainError(f"inv_big_i_prime needs c > -1/(2 pi), got {c}")
    a = float(sp.h_inv(TWO_PI * c))
    return HALF_PI / float(sp.k_fn(a))


def dual_slope_param(c: float) -> float:
    """The elliptic parameter a with I'(pi/(2 K(a))) = c; a = H^{-1}(2 pi c)."""
    c = float(c)
    if not math.isfinite(c) or c <= -TYPICAL_DENSITY:
        raise DomainError(f"dual slope needs c > -1/(2 pi), got {c}")
    return float(sp.h_inv(TWO_PI * c))


# ---------------------------------------------------------------------------
# process-scale rate functions
# ---------------------------------------------------------------------------

def i_sch(rho: float) -> float:
    """I_Sch(rho) = I(2 pi rho); minimum 0 at rho = 1/(2 pi), limit 1/8 at 0."""
    rho = float(rho)
    if not math.isfinite(rho) or rho < 0.0:
        raise DomainError(f"i_sch needs rho >= 0, got {rho}")
    if rho == 0.0:
        return 0.125
    return big_i(TWO_PI * rho)


def i_sine(rho: float) -> float:
    """I_Sine(rho) = (1/8)[nu/8 + rho H(nu)], nu = gamma^{-1}(rho).

    Zero exactly at rho = 1/(2 pi); 1/64 at rho = 0; grows like
    rho^2 log(rho) / 2.
    """
    rho = float(rho)
    if not math.isfinite(rho) or rho < 0.0:
        raise DomainError(f"i_sine needs rho >= 0, got {rho}")
    if rho == 0.0:
        return 1.0 / 64.0  # nu = 1, H(1) = -1, and the rho H term vanishes
    nu = gamma_inv(rho)
    if nu == 0.0:
        return 0.0
    return (nu / 8.0 + rho * float(sp.h_fn(nu))) / 8.0


def i_sine_prime(rho: float) -> float:
    """I_Sine'(rho) = H(gamma^{-1}(rho)) / 4; -1/4 at rho -> 0+."""
    rho = float(rho)
    if not (rho > 0.0) or not math.isfinite(rho):
        raise DomainError(f"i_sine_prime needs rho > 0, got {rho}")
    nu = gamma_inv(rho)
    if nu >= 1.0:
        return -0.25  # H(1) = -1
    return float(sp.h_fn(nu)) / 4.0
