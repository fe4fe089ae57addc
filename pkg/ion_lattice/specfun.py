"""Complete elliptic integrals and quadrature with declared endpoint singularities.

All elliptic functions take the PARAMETER m (m = k**2 for modulus k), so
K(m) = int_0^{pi/2} dtheta / sqrt(1 - m sin^2 theta). The pendulum formulas pass
E/U0 or U0/E straight in as m.
"""

import math

import numpy as np
from scipy import integrate

from .errors import DivergenceError, DomainError, QuadratureError

_AGM_MAX_ITER = 64
_AGM_TOL = 4 * np.finfo(float).eps


def _check_parameter(m, allow_one):
    m_arr = np.asarray(m, dtype=float)
    if np.any(np.isnan(m_arr)) or np.any(m_arr < 0) or np.any(m_arr > 1):
        raise DomainError(f"elliptic parameter must lie in [0, 1], got {m}")
    if not allow_one and np.any(m_arr == 1):
        raise DivergenceError("K(m) diverges logarithmically at m = 1")
    return m_arr


def _agm_scalar(m):
    if m == 1.0:
        return math.inf, 1.0
    a = 1.0
    b = math.sqrt(1.0 - m)
    c_sum = 0.5 * m
    power = 0.5
    for _ in range(_AGM_MAX_ITER):
        if abs(a - b) <= _AGM_TOL * a:
            break
        c = 0.5 * (a - b)
        a, b = 0.5 * (a + b), math.sqrt(a * b)
        power *= 2.0
        c_sum += power * c * c
    k = math.pi / (2.0 * a)
    return k, k * (1.0 - c_sum)


def _agm_array(m):
    at_one = m == 1.0
    m_work = np.where(at_one, 0.0, m)
    a = np.ones_like(m_work)
    b = np.sqrt(1.0 - m_work)
    c_sum = 0.5 * m_work
    power = 0.5
    for _ in range(_AGM_MAX_ITER):
        if np.all(np.abs(a - b) <= _AGM_TOL * a):
            break
        c = 0.5 * (a - b)
        a, b = 0.5 * (a + b), np.sqrt(a * b)
        power *= 2.0
        c_sum = c_sum + power * c * c
    k = np.pi / (2.0 * a)
    e = k * (1.0 - c_sum)
    return np.where(at_one, np.inf, k), np.where(at_one, 1.0, e)


def elliptic_ke(m):
    """Returns (K(m), E(m)) from a single arithmetic-geometric mean pass.

    Accepts a scalar or an array. K is +inf where m == 1.
    """
    m_arr = _check_parameter(m, allow_one=True)
    if m_arr.ndim == 0:
        return _agm_scalar(float(m_arr))
    return _agm_array(m_arr)


def elliptic_k(m):
    """Complete elliptic integral of the first kind K(m), 0 <= m < 1."""
    _check_parameter(m, allow_one=False)
    return elliptic_ke(m)[0]


def elliptic_e(m):
    """Complete elliptic integral of the second kind E(m), 0 <= m <= 1."""
    return elliptic_ke(m)[1]


def _substituted(f, lo, hi, singular_at, substitution):
    """Maps a panel with a singular endpoint onto a regular integration variable.

    Returns (g, u_lo, u_hi) such that int_lo^hi f dx = int_{u_lo}^{u_hi} g du.
    """
    width = hi - lo
    point = lo if singular_at == "lo" else hi
    sign = 1.0 if singular_at == "lo" else -1.0

    if substitution == "sqrt":

        def g(u):
            x = point + sign * width * u * u
            if u == 0.0 or x == point:
                return 0.0
            return f(x) * 2.0 * width * u

        return g, 0.0, 1.0

    if substitution == "log":

        def g(u):
            shrink = math.exp(-u)
            x = point + sign * width * shrink
            if shrink == 0.0 or x == point:
                return 0.0
            return f(x) * width * shrink

        return g, 0.0, math.inf

    raise DomainError(f"unknown substitution {substitution!r}, use 'sqrt' or 'log'")


def _quad_panel(g, lo, hi, tol, limit):
    res = integrate.quad(g, lo, hi, epsabs=tol, epsrel=0.0, limit=limit, full_output=1)
    value, abserr = res[0], res[1]
    failed = len(res) > 3
    return value, abserr, failed


def integrate_with_endpoint_singularity(
    f,
    a,
    b,
    singular_points=(),
    tol=1e-10,
    substitution="sqrt",
    limit=200,
    full_output=False,
):
    """Adaptive Gauss-Kronrod quadrature of f over [a, b].

    The interval is split at every declared singular point; each panel touching a
    singular point is integrated in a substituted variable that absorbs the
    singularity (x = p +- w u**2 for "sqrt", x = p +- w exp(-u) for "log"). The
    singular points themselves are never evaluated. `b` may be +inf.

    Arguments:
        f: scalar integrand
        a, b: integration bounds, a < b
        singular_points: integrable singularities inside [a, b]
        tol: target absolute error of the whole integral
        substitution: "sqrt" (power-law and log endpoints) or "log"
        full_output: if True, returns (value, error_estimate)

    Raises QuadratureError with the best estimate and error bound when a panel
    does not reach its share of the tolerance.
    """
    if not a < b:
        raise DomainError(f"integration bounds must satisfy a < b, got [{a}, {b}]")
    singular = sorted(set(float(p) for p in singular_points))
    for p in singular:
        if p < a or p > b or math.isinf(p):
            raise DomainError(f"singular point {p} outside [{a}, {b}]")

    edges = sorted(set([float(a), float(b)] + singular))
    panels = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        sing_lo = lo in singular
        sing_hi = hi in singular
        if math.isinf(hi):
            if sing_lo:
                panels.append((lo, lo + 1.0, "lo"))
                panels.append((lo + 1.0, hi, None))
            else:
                panels.append((lo, hi, None))
        elif sing_lo and sing_hi:
            mid = 0.5 * (lo + hi)
            panels.append((lo, mid, "lo"))
            panels.append((mid, hi, "hi"))
        elif sing_lo:
            panels.append((lo, hi, "lo"))
        elif sing_hi:
            panels.append((lo, hi, "hi"))
        else:
            panels.append((lo, hi, None))

    panel_tol = tol / len(panels)
    total = 0.0
    total_err = 0.0
    any_failed = False
    for lo, hi, singular_at in panels:
        if singular_at is None:
            value, abserr, failed = _quad_panel(f, lo, hi, panel_tol, limit)
        else:
            g, u_lo, u_hi = _substituted(f, lo, hi, singular_at, substitution)
            value, abserr, failed = _quad_panel(g, u_lo, u_hi, panel_tol, limit)
        total += value
        total_err += abserr
        any_failed = any_failed or (failed and abserr > panel_tol)

    if any_failed or not math.isfinite(total):
        raise QuadratureError(
            "quadrature did not converge after maximal refinement", total, total_err
        )
    if full_output:
        return total, total_err
    return total
