"""Complete elliptic integrals on the parameter range (-inf, 1).

K(a) = int_0^{pi/2} (1 - a sin^2 x)^{-1/2} dx
E(a) = int_0^{pi/2} (1 - a sin^2 x)^{+1/2} dx
H(a) = (1 - a) K(a) - E(a)

`a` is the *parameter* (m = k^2 in modulus notation).  Everything is
evaluated with arithmetic-geometric-mean iterations:

* 0 <= a < 1: textbook AGM with the c_n-sum for E;
* a < 0: the imaginary-modulus identities
      K(a) = K(z) / sqrt(1 - a),   E(a) = sqrt(1 - a) E(z),   z = a/(a - 1)
  map into (0, 1), keeping relative precision uniform as a -> -inf;
* a -> 1^-: the complementary parameter delta = 1 - a is fed to the AGM
  directly (b_0 = sqrt(delta)), so K and E stay accurate for delta far
  below 1e-16 when the caller knows delta exactly.

All `*_from_delta` helpers take delta = 1 - a; K(1-delta) grows like
log(16/delta)/2, E(1-delta) -> 1.

Useful derivative identities (valid for a < 1):
    K'(a) = (E(a) - (1 - a) K(a)) / (2 a (1 - a)) = -H(a) / (2 a (1 - a))
    E'(a) = (E(a) - K(a)) / (2 a)
    H'(a) = -K(a) / 2
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, DomainError, PrecisionError

_EPS = np.finfo(float).eps
_AGM_MAX_ITER = 64
_ROOT_MAX_ITER = 200

# K(1 - delta) with delta below this underflows the double representation of
# the parameter itself; inv_k refuses targets that would need it.
INV_K_MAX = 0.5 * math.log(16.0 / (4.0 * _EPS))


@dataclass(frozen=True)
class EllipticValue:
    """Value plus a crude absolute-error estimate of the evaluation."""

    value: float
    abs_err_estimate: float


def _check_param(a) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if np.any(~np.isfinite(a)) or np.any(a >= 1.0):
        raise DomainError(f"elliptic parameter must be finite and < 1, got {a!r}")
    return a


def _agm_ke(z: np.ndarray, delta: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """K(z), E(z) for z in [0, 1) with delta = 1 - z supplied exactly."""
    b = np.sqrt(delta)
    a = np.ones_like(b)
    csum = 0.5 * z  # 2^{n-1} c_n^2 summed, n = 0 term: c_0^2 = z
    pw = 0.5
    for _ in range(_AGM_MAX_ITER):
        c = 0.5 * (a - b)
        if np.all(c <= 4.0 * _EPS * a):
            break
        ab = a * b
        a, b = 0.5 * (a + b), np.sqrt(ab)
        pw *= 2.0
        csum = csum + pw * c * c
    K = np.pi / (2.0 * a)
    E = K * (1.0 - csum)
    return K, E


def _ke_any(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """K(a), E(a) for any array of parameters a < 1."""
    a = np.atleast_1d(np.asarray(a, dtype=float))
    K = np.empty_like(a)
    E = np.empty_like(a)
    neg = a < 0.0
    if np.any(neg):
        an = a[neg]
        # z = a/(a-1) in (0,1);  1 - z = 1/(1-a) exactly from a
        om = 1.0 - an
        z = an / (an - 1.0)
        dz = 1.0 / om
        Kz, Ez = _agm_ke(z, dz)
        s = np.sqrt(om)
        K[neg] = Kz / s
        E[neg] = Ez * s
    pos = ~neg
    if np.any(pos):
        ap = a[pos]
        Kp, Ep = _agm_ke(ap, 1.0 - ap)
        K[pos] = Kp
        E[pos] = Ep
    return K, E


def k_fn(a):
    """K(a) as a plain float/ndarray (no error bookkeeping)."""
    a = _check_param(a)
    K, _ = _ke_any(a)
    return K[0] if np.ndim(a) == 0 else K.reshape(np.shape(a))


def e_fn(a):
    """E(a) as a plain float/ndarray."""
    a = _check_param(a)
    _, E = _ke_any(a)
    return E[0] if np.ndim(a) == 0 else E.reshape(np.shape(a))


def h_fn(a):
    """H(a) = (1 - a) K(a) - E(a) as a plain float/ndarray."""
    a = _check_param(a)
    K, E = _ke_any(a)
    H = (1.0 - np.atleast_1d(a)) * K - E
    return H[0] if np.ndim(a) == 0 else H.reshape(np.shape(a))


def k_from_delta(delta):
    """K(1 - delta) for delta in (0, 1]; accurate for arbitrarily small delta."""
    delta = np.asarray(delta, dtype=float)
    if np.any(delta <= 0.0):
        raise DomainError("delta = 1 - a must be positive")
    d = np.atleast_1d(delta)
    K, _ = _agm_ke(1.0 - d, d)
    return K[0] if np.ndim(delta) == 0 else K.reshape(np.shape(delta))


def e_from_delta(delta):
    """E(1 - delta) for delta in (0, 1]."""
    delta = np.asarray(delta, dtype=float)
    if np.any(delta <= 0.0):
        raise DomainError("delta = 1 - a must be positive")
    d = np.atleast_1d(delta)
    # below ~1e-14 the AGM c-sum for E is eps-limited; the two-term
    # near-one expansion E = 1 + (delta/2)(log(4/sqrt(delta)) - 1/2) is not
    small = d < 1e-14
    _, E = _agm_ke(1.0 - d, d)
    if np.any(small):
        ds = d[small]
        E[small] = 1.0 + 0.5 * ds * (np.log(4.0 / np.sqrt(ds)) - 0.5)
    return E[0] if np.ndim(delta) == 0 else E.reshape(np.shape(delta))


def ke_diff_from_delta(delta):
    """K(1 - delta) - E(1 - delta), stable for small delta (-> log(16/delta)/2 - 1)."""
    return k_from_delta(delta) - e_from_delta(delta)


def ellip_k(a: float, tol: float | None = None) -> EllipticValue:
    """Complete elliptic integral of the first kind at parameter a < 1.

    Strictly increasing on (-inf, 1), K -> 0 as a -> -inf, K -> +inf as
    a -> 1^-.  The error estimate widens like eps/(2(1-a)) near 1 because
    the parameter itself only determines 1 - a to absolute eps.
    """
    a = float(a)
    _check_param(a)
    K = float(k_fn(a))
    err = 8.0 * _EPS * abs(K)
    if a > 0.0:
        err += 0.5 * _EPS * abs(a) / (1.0 - a)
    if tol is not None and err > tol:
        raise PrecisionError(f"K({a}) only computable to {err:.3e} > tol {tol:.3e}")
    return EllipticValue(K, err)


def ellip_e(a: float, tol: float | None = None) -> EllipticValue:
    """Complete elliptic integral of the second kind at parameter a < 1.

    Strictly decreasing on (-inf, 1) with E(1^-) = 1, E(a) ~ sqrt(-a) as
    a -> -inf.
    """
    a = float(a)
    _check_param(a)
    E = float(e_fn(a))
    err = 8.0 * _EPS * abs(E)
    if tol is not None and err > tol:
        raise PrecisionError(f"E({a}) only computable to {err:.3e} > tol {tol:.3e}")
    return EllipticValue(E, err)


def script_h(a: float) -> float:
    """H(a) = (1 - a) K(a) - E(a).

    H(0) = 0, H(1^-) = -1, H' = -K/2 < 0; positive for a < 0, negative on
    (0, 1), and H(-x) ~ sqrt(x) log(x)/2 for large x.
    """
    a = float(a)
    _check_param(a)
    return float(h_fn(a))


def ellip_k_deriv(a: float) -> float:
    """dK/da, via K' = -H(a) / (2 a (1 - a)); series limit pi/8 at a = 0."""
    a = float(a)
    _check_param(a)
    if abs(a) < 1e-5:
        # K = (pi/2)(1 + a/4 + 9a^2/64 + 25 a^3/256 + ...)
        return (np.pi / 8.0) * (1.0 + 9.0 * a / 8.0 + 75.0 * a * a / 64.0)
    return -float(h_fn(a)) / (2.0 * a * (1.0 - a))


def inv_k(y: float, tol: float = 1e-12) -> float:
    """The unique a < 1 with K(a) = y, for 0 < y <= INV_K_MAX.

    Bisection on the strictly increasing K down to `tol` on the bracket,
    then one Newton polish with K'.  Beyond INV_K_MAX (~18.1) the solution
    has 1 - a below machine epsilon and a PrecisionError is raised; callers
    needing that regime should work with delta = 1 - a = 16 exp(-2y)
    directly via the *_from_delta helpers.
    """
    y = float(y)
    if not (y > 0.0) or not math.isfinite(y):
        raise DomainError(f"inv_k needs y > 0, got {y}")
    if y > INV_K_MAX:
        raise PrecisionError(
            f"inv_k({y:.3f}): 1 - a = 16 exp(-2y) underflows double precision "
            f"(max supported y is {INV_K_MAX:.3f})"
        )
    half_pi = 0.5 * math.pi
    if y >= half_pi:
        lo, hi = 0.0, 1.0 - 0.5 * 16.0 * math.exp(-2.0 * y)
        # K(hi) = y + log(2)/2 > y by the near-one asymptotic
        if float(k_fn(hi)) < y:  # asymptotic slack, widen once
            hi = 1.0 - 0.25 * 16.0 * math.exp(-2.0 * y)
    else:
        # K(-w) ~ log(16(1+w)) / (2 sqrt(1+w)); grow the bracket geometrically
        lo, hi = -1.0, 0.0
        it = 0
        while float(k_fn(lo)) > y:
            lo *= 4.0
            it += 1
            if it > _ROOT_MAX_ITER:
                raise ConvergenceError("inv_k bracket growth failed")
    # K increasing: K(lo) <= y <= K(hi)
    for _ in range(_ROOT_MAX_ITER):
        mid = 0.5 * (lo + hi)
        if float(k_fn(mid)) < y:
            lo = mid
        else:
            hi = mid
        if hi - lo <= tol * max(1.0, abs(mid)):
            break
    else:
        raise ConvergenceError(f"inv_k bisection did not reach tol {tol}")
    a = 0.5 * (lo + hi)
    # Newton polish
    deriv = ellip_k_deriv(a)
    if deriv > 0.0:
        a_new = a - (float(k_fn(a)) - y) / deriv
        if a_new < 1.0 and math.isfinite(a_new):
            a = a_new
    return a


def h_inv(y, tol: float = 1e-13):
    """Solve H(a) = y for a <= 1 (H is a decreasing bijection onto [-1, inf)).

    Array-capable safeguarded Newton (H' = -K/2).  y must be > -1.
    """
    y_arr = np.atleast_1d(np.asarray(y, dtype=float))
    if np.any(y_arr <= -1.0):
        raise DomainError("h_inv needs y > -1 = H(1)")
    lo = np.full_like(y_arr, -1.0)
    hi = np.full_like(y_arr, 1.0 - 1e-16)
    # expand lo until H(lo) >= y, elementwise
    for _ in range(_ROOT_MAX_ITER):
        need = np.atleast_1d(h_fn(lo)) < y_arr
        if not need.any():
            break
        lo[need] *= 4.0
    else:
        raise ConvergenceError("h_inv bracket growth failed")
    a = np.where(y_arr > 0.0, lo / 2.0, 0.5 - 2.0 * np.clip(y_arr, -1.0, 0.25))
    a = np.clip(a, lo, hi)
    converged = np.zeros(a.shape, dtype=bool)
    for _ in range(_ROOT_MAX_ITER):
        K, E = _ke_any(a)
        f = (1.0 - a) * K - E - y_arr
        # maintain the bracket
        lo = np.where(f >= 0.0, np.maximum(lo, a), lo)
        hi = np.where(f <= 0.0, np.minimum(hi, a), hi)
        step = f / (0.5 * K)  # a_{n+1} = a_n + f / (K/2), since H' = -K/2
        a_new = a + step
        bad = (a_new <= lo) | (a_new >= hi) | ~np.isfinite(a_new)
        a_new = np.where(bad, 0.5 * (lo + hi), a_new)
        converged = np.abs(a_new - a) <= tol * np.maximum(1.0, np.abs(a_new))
        a = a_new
        if converged.all():
            break
    else:
        raise ConvergenceError("h_inv Newton did not converge within 200 iterations")
    return a[0] if np.ndim(y) == 0 else a.reshape(np.shape(y))
