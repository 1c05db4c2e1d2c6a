"""Path rate functionals and the convex variational solver.

Path functionals (profiles are piecewise linear between grid nodes):

    sch rate of g on [0, T]:   sum_cells  dt * I(dg/dt)
    sine rate of g on [0, 1]:  (beta/4) sum_cells  dy (1 - y_mid) I(dg/dy)

(the (1 - y_mid) dy factor is the exact cell integral of the weight
1 - y, which keeps the final cell meaningful).  A decreasing profile gets
the +inf sentinel, not an error.

solve_sine minimizes (beta/4) int_0^1 (1-y) I(g'(y)) dy subject to
int g' = 2 pi rho, g' >= 0, by scalar bisection on the Lagrange dual c:
the pointwise minimizer is g'(y) = (I')^{-1}(c / (1-y)) where
c/(1-y) > -1/(2 pi) and 0 elsewhere, so the constraint is a monotone
scalar function of c.

* rho <= 1/(2 pi) (c <= 0): slopes lie in [0, 1]; midpoint cells converge
  at O(n^-2) and are used directly.  The free boundary is a = 1 + 2 pi c
  (the dual slope reaches 0 exactly where c/(1-y) = -1/(2 pi)).
* rho > 1/(2 pi) (c > 0): g' blows up at y = 1 like c pi^2/((1-y) log^2(1-y));
  midpoint cells then carry a Theta(1/log n) value error that no
  representable grid removes, so the constraint mass and the objective are
  evaluated as exact integrals in the elliptic parametrization
      1 - y = 2 pi c / H(x),   g' = pi/(2 K(x)),   x in (-inf, x0],
  under which
      mass(c)  = (pi^2 c / 2) int H(x)^{-2} dx
      value(c) = (beta/4) 2 pi^2 c^2 int K(x) I(x) |H(x)|^{-3} dx
  with x0 = H^{-1}(2 pi c).  In u = log(16(1-x)) the mass integrand is the
  same G(u) used for gamma, and the value integrand tends to
  (u-4)/(2 (u-2)^3), giving the analytic tail (1/2)(1/P - 1/P^2), P = U-2,
  with only O(U e^{-U}) model error.

optimizer_profile returns the closed-form optimizer with cumulative cell
masses computed from the same exact integrals, so the endpoint constraint
holds to ~1e-10.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from . import rate, special as sp
from .errors import ConvergenceError, DomainError
from .rate import TWO_PI, TYPICAL_DENSITY, _int_inv_h2, _int_inv_h2_tail, _s_pos, _u_of_neg_x

_UMAX = 45.0
_ROOT_MAX_ITER = 200
_C_EPS = 1e-12  # lower dual bracket offset above -1/(2 pi)


@dataclass(frozen=True)
class Profile:
    """A nondecreasing path g on an ordered grid, g(0) = 0."""

    grid: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.grid, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if g.ndim != 1 or g.shape != v.shape or g.size < 2:
            raise DomainError("profile needs matching 1-d grid/values with >= 2 nodes")
        if not np.all(np.isfinite(g)) or not np.all(np.isfinite(v)):
            raise DomainError("profile grid/values must be finite")
        if np.any(np.diff(g) <= 0.0):
            raise DomainError("profile grid must be strictly increasing")
        if abs(v[0]) > 1e-12:
            raise DomainError("profile must start at 0")
        object.__setattr__(self, "grid", g)
        object.__setattr__(self, "values", v)

    def slopes(self) -> np.ndarray:
        return np.diff(self.values) / np.diff(self.grid)

    def to_csv(self, path) -> None:
        """Write `y,g,gprime` rows (gprime: forward cell slope, last repeated)."""
        s = self.slopes()
        gp = np.append(s, s[-1])
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("y,g,gprime\n")
            for y, g, p in zip(self.grid, self.values, gp):
                fh.write(f"{y:.17g},{g:.17g},{p:.17g}\n")


@dataclass(frozen=True)
class VariationalSolution:
    value: float
    dual_c: float
    free_boundary_a: float
    profile: Profile


def _slope_rate(q: float) -> float:
    """I(q) extended by the limits I(0) = 1/8; +inf for q < 0."""
    if q < 0.0:
        return math.inf
    if q == 0.0:
        return 0.125
    return rate.big_i(q)


def _check_span(grid: np.ndarray, hi: float, what: str) -> None:
    if abs(grid[0]) > 1e-12 or abs(grid[-1] - hi) > 1e-9:
        raise DomainError(f"{what} profile grid must span [0, {hi}]")


def rate_of_path_sch(profile: Profile, T: float) -> float:
    """sum dt * I(dg/dt) over cells; +inf if g decreases anywhere."""
    if not (T > 0.0):
        raise DomainError("T must be positive")
    _check_span(profile.grid, T, "sch")
    dt = np.diff(profile.grid)
    dg = np.diff(profile.values)
    if np.any(dg < -1e-12 * max(1.0, float(np.max(np.abs(profile.values))))):
        return math.inf
    dg = np.maximum(dg, 0.0)
    return float(sum(w * _slope_rate(s) for w, s in zip(dt, dg / dt)))


def rate_of_path_sine(profile: Profile, beta: float) -> float:
    """(beta/4) sum dy (1 - y_mid) I(dg/dy) over cells of a profile on [0, 1]."""
    if not (beta > 0.0):
        raise DomainError("beta must be positive")
    _check_span(profile.grid, 1.0, "sine")
    dy = np.diff(profile.grid)
    ymid = 0.5 * (profile.grid[1:] + profile.grid[:-1])
    dg = np.diff(profile.values)
    if np.any(dg < -1e-12 * max(1.0, float(np.max(np.abs(profile.values))))):
        return math.inf
    dg = np.maximum(dg, 0.0)
    cells = sum(
        w * m * _slope_rate(s) for w, m, s in zip(dy, 1.0 - ymid, dg / dy)
    )
    return float(beta / 4.0 * cells)


# ---------------------------------------------------------------------------
# dual machinery
# ---------------------------------------------------------------------------

def _dual_cells(c: float, w: np.ndarray):
    """Slopes and elliptic parameters of the dual profile on cells of weight w."""
    q = np.zeros_like(w)
    a = np.full_like(w, np.nan)
    act = c / w > -TYPICAL_DENSITY + 1e-15
    if act.any():
        a_act = sp.h_inv(TWO_PI * c / w[act])
        q[act] = (0.5 * math.pi) / sp.k_fn(a_act)
        a[act] = a_act
    return q, a, act


def _cells_rate(q: np.ndarray, a: np.ndarray, act: np.ndarray) -> np.ndarray:
    """I at the dual slopes, using the cell's elliptic parameter directly."""
    out = np.full_like(q, 0.125)
    if act.any():
        aa = a[act]
        out[act] = (2.0 - aa) / 8.0 - q[act] * sp.e_fn(aa) / TWO_PI
    return out


def _gv_u(u: float) -> float:
    """K(x) I(x) |H(x)|^{-3} in the u measure, x = -(e^u/16 - 1) < 0."""
    delta = 16.0 * math.exp(-u)
    wp1 = math.exp(u) / 16.0  # 1 - x
    w = wp1 - 1.0
    Kz = float(sp.k_from_delta(delta))
    Ez = float(sp.e_from_delta(delta)) if delta > 0.0 else 1.0
    Ix = (2.0 + w) / 8.0 - wp1 * Ez / (4.0 * Kz)
    return Kz * Ix / (wp1 * (Kz - Ez) ** 3)


def _value_tail(U: float) -> float:
    P = U - 2.0
    return 0.5 * (1.0 / P - 1.0 / (P * P))


def _mass_exact(c: float) -> float:
    """int_0^1 (I')^{-1}(c/(1-y)) dy for c > 0, via the x-parametrization."""
    x0 = float(sp.h_inv(TWO_PI * c))
    return 0.5 * math.pi ** 2 * c * _int_inv_h2_tail(_u_of_neg_x(x0))


def _value_exact(c: float, beta: float) -> float:
    """(beta/4) int_0^1 (1-y) I(g'_c(y)) dy for c > 0."""
    x0 = float(sp.h_inv(TWO_PI * c))
    u0 = _u_of_neg_x(x0)
    q, _ = integrate.quad(_gv_u, u0, _UMAX, limit=300)
    return beta / 4.0 * 2.0 * math.pi ** 2 * c * c * (q + _value_tail(_UMAX))


def _mass_pos_exact(c: float) -> float:
    """int_0^a (I')^{-1}(c/(1-t)) dt for -1/(2 pi) < c < 0 (a = 1 + 2 pi c)."""
    x0 = float(sp.h_inv(TWO_PI * c))  # in (0, 1)
    return 0.5 * math.pi ** 2 * (-c) * _s_pos(x0)


def _bisect_dual(mass_fn, target: float, lo: float, hi: float, tol: float = 1e-13) -> float:
    """Monotone-increasing mass_fn; returns c with mass_fn(c) = target."""
    it = 0
    while mass_fn(hi) < target:
        hi = hi * 2.0 if hi > 0 else hi * 0.5
        it += 1
        if it > _ROOT_MAX_ITER:
            raise ConvergenceError("dual upper bracket growth failed")
    for _ in range(_ROOT_MAX_ITER):
        mid = 0.5 * (lo + hi)
        if mass_fn(mid) < target:
            lo = mid
        else:
            hi = mid
        if hi - lo <= tol * max(1.0, abs(mid)):
            return 0.5 * (lo + hi)
    raise ConvergenceError("dual bisection did not converge")


def _check_density(rho: float) -> float:
    rho = float(rho)
    if not math.isfinite(rho) or rho < 0.0:
        raise DomainError(f"density must be >= 0, got {rho}")
    return rho


def solve_sch(rho: float, T: float, n: int = 200) -> VariationalSolution:
    """Minimize int_0^T I(g') subject to g(T) = 2 pi rho, g' >= 0.

    The minimizer has constant slope (strict convexity of I), so the value
    is T I(2 pi rho / T) with the uniform profile.
    """
    rho = _check_density(rho)
    if not (T > 0.0):
        raise DomainError("T must be positive")
    q = TWO_PI * rho / T
    grid = np.linspace(0.0, T, n + 1)
    prof = Profile(grid, q * grid)
    value = T * _slope_rate(q)
    dual = rate.big_i_prime(q) if q > 0.0 else -TYPICAL_DENSITY
    return VariationalSolution(value, dual, 1.0, prof)


def solve_sine(rho: float, beta: float, n: int = 2000) -> VariationalSolution:
    """Minimize (beta/4) int_0^1 (1-y) I(g') subject to int g' = 2 pi rho.

    Scalar dual bisection; see the module docstring for the two dual
    branches.  The reported free boundary is a = min(1, 1 + 2 pi dual_c),
    where the dual slope profile reaches zero.
    """
    rho = _check_density(rho)
    if not (beta > 0.0):
        raise DomainError("beta must be positive")
    n = int(n)
    if n < 100:
        raise DomainError("solve_sine needs a grid of at least 100 cells")
    grid = np.linspace(0.0, 1.0, n + 1)
    R = TWO_PI * rho

    if rho == 0.0:
        prof = Profile(grid, np.zeros(n + 1))
        return VariationalSolution(beta / 64.0, -TYPICAL_DENSITY, 0.0, prof)
    if abs(rho - TYPICAL_DENSITY) < 1e-14:
        return VariationalSolution(0.0, 0.0, 1.0, Profile(grid, grid))

    if rho < TYPICAL_DENSITY:
        ymid = 0.5 * (grid[1:] + grid[:-1])
        w = 1.0 - ymid
        dy = 1.0 / n

        def mass(c: float) -> float:
            q, _, _ = _dual_cells(c, w)
            return float(q.sum()) * dy

        c = _bisect_dual(mass, R, -TYPICAL_DENSITY + _C_EPS, -1e-8)
        q, a, act = _dual_cells(c, w)
        rates = _cells_rate(q, a, act)
        value = beta / 4.0 * float(np.sum(w * rates)) * dy
        free_a = min(1.0, 1.0 + TWO_PI * c)
        values = np.concatenate([[0.0], np.cumsum(q) * dy])
        return VariationalSolution(value, c, free_a, Profile(grid, values))

    # rho > typical: exact cell integrals in the elliptic parametrization
    c = _bisect_dual(_mass_exact, R, _C_EPS, 0.25)
    value = _value_exact(c, beta)
    xs = sp.h_inv(TWO_PI * c / (1.0 - grid[:-1]))
    us = np.array([_u_of_neg_x(float(x)) for x in xs])
    cell_mass = [
        0.5 * math.pi ** 2 * c * _int_inv_h2(us[i], us[i + 1]) for i in range(n - 1)
    ]
    cell_mass.append(0.5 * math.pi ** 2 * c * _int_inv_h2_tail(us[-1]))
    values = np.concatenate([[0.0], np.cumsum(cell_mass)])
    return VariationalSolution(value, c, 1.0, Profile(grid, values))


def optimizer_profile(rho: float, n: int = 2000) -> Profile:
    """The closed-form optimizer g of the sine variational problem.

    Node values are cumulative exact cell masses of the dual slope
    profile, so g(1) = 2 pi rho holds to quadrature accuracy (~1e-10).
    """
    rho = _check_density(rho)
    n = int(n)
    if n < 2:
        raise DomainError("optimizer_profile needs n >= 2")
    grid = np.linspace(0.0, 1.0, n + 1)
    if rho == 0.0:
        return Profile(grid, np.zeros(n + 1))
    if abs(rho - TYPICAL_DENSITY) < 1e-14:
        return Profile(grid, grid)
    R = TWO_PI * rho

    if rho > TYPICAL_DENSITY:
        c = _bisect_dual(_mass_exact, R, _C_EPS, 0.25, tol=1e-14)
        xs = sp.h_inv(TWO_PI * c / (1.0 - grid[:-1]))
        us = np.array([_u_of_neg_x(float(x)) for x in xs])
        cell_mass = [
            0.5 * math.pi ** 2 * c * _int_inv_h2(us[i], us[i + 1]) for i in range(n - 1)
        ]
        cell_mass.append(0.5 * math.pi ** 2 * c * _int_inv_h2_tail(us[-1]))
        return Profile(grid, np.concatenate([[0.0], np.cumsum(cell_mass)]))

    # subcritical: dual slope vanishes on (a, 1], a = 1 + 2 pi c
    c = _bisect_dual(_mass_pos_exact, R, -TYPICAL_DENSITY + _C_EPS, -1e-10, tol=1e-14)
    a_bnd = 1.0 + TWO_PI * c
    cell_mass = np.zeros(n)
    lo_t = grid[:-1]
    hi_t = grid[1:]
    s_cache: dict[float, float] = {}

    def s_at(t: float) -> float:
        if t not in s_cache:
            x = float(sp.h_inv(TWO_PI * c / (1.0 - t)))
            s_cache[t] = _s_pos(x)
        return s_cache[t]

    for i in range(n):
        t0, t1 = lo_t[i], min(hi_t[i], a_bnd)
        if t0 >= a_bnd:
            break
        cell_mass[i] = 0.5 * math.pi ** 2 * (-c) * (s_at(t0) - (s_at(t1) if t1 < a_bnd else 0.0))
    return Profile(grid, np.concatenate([[0.0], np.cumsum(cell_mass)]))


def dual_slope(c: float, y: float) -> float:
    """The dual profile slope (I')^{-1}(c/(1-y)), 0 on the inactive set."""
    if y >= 1.0:
        return 0.0 if c <= 0.0 else math.inf
    s = c / (1.0 - y)
    if s <= -TYPICAL_DENSITY:
        return 0.0
    return rate.inv_big_i_prime(s)
