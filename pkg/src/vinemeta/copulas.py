"""Bivariate copula families: Independence, BVN (Gaussian), Frank, and Clayton
with its 90/180/270 degree rotations.

Every operation is a pure function of a :class:`CopulaSpec` and unit-interval
arguments, vectorized over numpy arrays.  The conditional cdf ("h-function")
and its inverse are the workhorses of the D-vine construction: ``hfunc`` /
``hinv`` condition on the first copula argument, ``hfunc2`` / ``hinv2`` on the
second.  Only the Clayton rotations break exchangeability, which is why both
directions are exposed.

Rotation conventions (counter-clockwise, acting on the base copula C):

    C90(u, v)  = v - C(1 - u, v)
    C180(u, v) = u + v - 1 + C(1 - u, 1 - v)
    C270(u, v) = u - C(u, 1 - v)
"""

from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import special

from .quadrature import gauss_legendre_unit

# Arguments of densities / h-functions are clamped away from the corners,
# where the Clayton and Frank expressions are singular.
_EPS = 1e-12

_ROTATIONS = (0, 90, 180, 270)


class Family(str, Enum):
    """Supported bivariate copula families."""

    INDEPENDENCE = "indep"
    BVN = "bvn"
    FRANK = "frank"
    CLAYTON = "clayton"


# CLI-facing tokens: family plus rotation in one word.
_TOKEN_TO_SPEC = {
    "indep": (Family.INDEPENDENCE, 0),
    "bvn": (Family.BVN, 0),
    "frank": (Family.FRANK, 0),
    "cln0": (Family.CLAYTON, 0),
    "cln90": (Family.CLAYTON, 90),
    "cln180": (Family.CLAYTON, 180),
    "cln270": (Family.CLAYTON, 270),
}


@dataclass(frozen=True)
class CopulaSpec:
    """A bivariate copula family with rotation and dependence parameter.

    Parameters
    ----------
    family : Family
        One of Independence, BVN, Frank, Clayton.
    theta : float
        Copula parameter.  Admissible ranges: none (Independence, fixed 0),
        (-1, 1) for BVN, any nonzero real for Frank, (0, inf) for Clayton.
    rotation : int
        0, 90, 180 or 270 degrees.  Only meaningful for Clayton; it is the
        identity for the other (exchangeable, sign-symmetric) families.
    """

    family: Family
    theta: float = 0.0
    rotation: int = 0

    def __post_init__(self):
        if self.rotation not in _ROTATIONS:
            raise ValueError(f"rotation must be one of {_ROTATIONS}, got {self.rotation}")
        _validate_theta(self.family, self.theta)

    @property
    def token(self):
        """Compact family token, e.g. ``cln180`` or ``bvn``."""
        if self.family is Family.CLAYTON:
            return f"cln{self.rotation}"
        return self.family.value


def _validate_theta(family, theta):
    if not np.isfinite(theta):
        raise ValueError(f"{family.value}: theta must be finite, got {theta}")
    if family is Family.INDEPENDENCE:
        if theta != 0.0:
            raise ValueError("independence copula admits no parameter (theta must be 0)")
    elif family is Family.BVN:
        if not -1.0 < theta < 1.0:
            raise ValueError(f"bvn: theta must lie in (-1, 1), got {theta}")
    elif family is Family.FRANK:
        if theta == 0.0:
            raise ValueError("frank: theta must be nonzero")
    elif family is Family.CLAYTON:
        if theta <= 0.0:
            raise ValueError(f"clayton: theta must be positive, got {theta}")
    else:  # pragma: no cover - exhaustive enum
        raise ValueError(f"unknown family {family}")


def independence():
    """The independence copula spec."""
    return CopulaSpec(Family.INDEPENDENCE, 0.0, 0)


def parse_family_token(token):
    """Parse a family token such as ``bvn`` or ``cln90`` into (family, rotation)."""
    try:
        return _TOKEN_TO_SPEC[token.strip().lower()]
    except KeyError:
        raise ValueError(
            f"unknown copula token {token!r}; expected one of {sorted(_TOKEN_TO_SPEC)}"
        ) from None


def _clip01(x):
    return np.clip(np.asarray(x, dtype=float), _EPS, 1.0 - _EPS)


# ---------------------------------------------------------------------------
# Base (unrotated) family implementations.  All are exchangeable in (u, v),
# so a single conditional direction suffices; rotations are layered on top.
# Signatures: (theta, u, v) with u the conditioning argument for _h / _hinv.
# ---------------------------------------------------------------------------


def _bvn_cdf(theta, u, v):
    x = special.ndtri(u)
    y = special.ndtri(v)
    r = np.sqrt(1.0 - theta * theta)
    # Owen's T representation of the bivariate normal cdf; exact zeros in
    # x or y are nudged to keep the a-ratios finite.
    x = np.where(x == 0.0, 1e-13, x)
    y = np.where(y == 0.0, 1e-13, y)
    ax = (y - theta * x) / (x * r)
    ay = (x - theta * y) / (y * r)
    beta = np.where(x * y > 0.0, 0.0, 0.5)
    val = (
        0.5 * (special.ndtr(x) + special.ndtr(y))
        - special.owens_t(x, ax)
        - special.owens_t(y, ay)
        - beta
    )
    return np.clip(val, 0.0, 1.0)


def _bvn_logpdf(theta, u, v):
    x = special.ndtri(u)
    y = special.ndtri(v)
    r2 = 1.0 - theta * theta
    return -0.5 * np.log(r2) - 0.5 * (
        theta * theta * (x * x + y * y) - 2.0 * theta * x * y
    ) / r2


def _bvn_h(theta, u, v):
    x = special.ndtri(u)
    y = special.ndtri(v)
    return special.ndtr((y - theta * x) / np.sqrt(1.0 - theta * theta))


def _bvn_hinv(theta, u, p):
    x = special.ndtri(u)
    z = special.ndtri(p)
    return special.ndtr(z * np.sqrt(1.0 - theta * theta) + theta * x)


def _frank_cdf(theta, u, v):
    g1 = np.expm1(-theta)
    gu = np.expm1(-theta * u)
    gv = np.expm1(-theta * v)
    return -np.log1p(gu * gv / g1) / theta


def _frank_logpdf(theta, u, v):
    g1 = np.expm1(-theta)
    gu = np.expm1(-theta * u)
    gv = np.expm1(-theta * v)
    # c = -theta * g1 * exp(-theta (u+v)) / (g1 + gu gv)^2, positive for all
    # admissible theta.
    denom = g1 + gu * gv
    return np.log(-theta * g1) - theta * (u + v) - 2.0 * np.log(np.abs(denom))


def _frank_h(theta, u, v):
    g1 = np.expm1(-theta)
    gu = np.expm1(-theta * u)
    gv = np.expm1(-theta * v)
    return (gu + 1.0) * gv / (g1 + gu * gv)


def _frank_hinv(theta, u, p):
    gu = np.expm1(-theta * u)
    g1 = np.expm1(-theta)
    gv = p * g1 / (1.0 + gu * (1.0 - p))
    return -np.log1p(gv) / theta


def _clayton_logS(theta, u, v):
    # log(u^-theta + v^-theta - 1) without overflowing u^-theta.
    a = -theta * np.log(u)
    b = -theta * np.log(v)
    m = np.maximum(a, b)
    return m + np.log(np.exp(a - m) + np.exp(b - m) - np.exp(-m))


def _clayton_cdf(theta, u, v):
    return np.exp(-_clayton_logS(theta, u, v) / theta)


def _clayton_logpdf(theta, u, v):
    logS = _clayton_logS(theta, u, v)
    return (
        np.log1p(theta)
        - (theta + 1.0) * (np.log(u) + np.log(v))
        - (1.0 / theta + 2.0) * logS
    )


def _clayton_h(theta, u, v):
    logS = _clayton_logS(theta, u, v)
    return np.exp(-(theta + 1.0) * np.log(u) - (1.0 / theta + 1.0) * logS)


def _clayton_hinv(theta, u, p):
    # v = [1 + u^-theta (p^(-theta/(1+theta)) - 1)]^(-1/theta), in log space.
    logq = np.log(np.expm1(-theta * np.log(p) / (1.0 + theta)))
    a = -theta * np.log(u) + logq
    return np.exp(-np.logaddexp(0.0, a) / theta)


_BASE = {
    Family.BVN: (_bvn_cdf, _bvn_logpdf, _bvn_h, _bvn_hinv),
    Family.FRANK: (_frank_cdf, _frank_logpdf, _frank_h, _frank_hinv),
    Family.CLAYTON: (_clayton_cdf, _clayton_logpdf, _clayton_h, _clayton_hinv),
}


def _effective_rotation(spec):
    return spec.rotation if spec.family is Family.CLAYTON else 0


# ---------------------------------------------------------------------------
# Public operations
# ---------------------------------------------------------------------------


def cdf(spec, u, v):
    """Copula cdf C(u, v).

    Grounded (C(u,0) = C(0,v) = 0) with uniform margins (C(u,1) = u,
    C(1,v) = v).  Boundary arguments are honoured exactly.
    """
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if spec.family is Family.INDEPENDENCE:
        return u * v
    base_cdf = _BASE[spec.family][0]
    rot = _effective_rotation(spec)
    uc, vc = _clip01(u), _clip01(v)
    if rot == 0:
        val = base_cdf(spec.theta, uc, vc)
    elif rot == 90:
        val = v - base_cdf(spec.theta, 1.0 - uc, vc)
    elif rot == 180:
        val = u + v - 1.0 + base_cdf(spec.theta, 1.0 - uc, 1.0 - vc)
    else:
        val = u - base_cdf(spec.theta, uc, 1.0 - vc)
    # Exact boundaries beat the clamped evaluation.
    val = np.where(u <= 0.0, 0.0, val)
    val = np.where(v <= 0.0, 0.0, val)
    val = np.where(u >= 1.0, np.minimum(v, 1.0), val)
    val = np.where(v >= 1.0, np.minimum(u, 1.0), val)
    return val[()] if val.ndim == 0 else val


def log_pdf(spec, u, v):
    """Log copula density log c(u, v); arguments clamped away from corners."""
    if spec.family is Family.INDEPENDENCE:
        return np.zeros(np.broadcast(np.asarray(u), np.asarray(v)).shape)[()]
    base_logpdf = _BASE[spec.family][1]
    rot = _effective_rotation(spec)
    u, v = _clip01(u), _clip01(v)
    if rot == 0:
        return base_logpdf(spec.theta, u, v)
    if rot == 90:
        return base_logpdf(spec.theta, 1.0 - u, v)
    if rot == 180:
        return base_logpdf(spec.theta, 1.0 - u, 1.0 - v)
    return base_logpdf(spec.theta, u, 1.0 - v)


def pdf(spec, u, v):
    """Copula density c(u, v)."""
    return np.exp(log_pdf(spec, u, v))


def hfunc(spec, v, u):
    """Conditional cdf of V given U = u, i.e. dC(u, v)/du.

    Nondecreasing in ``v`` with hfunc(0|u) = 0 and hfunc(1|u) = 1.
    """
    if spec.family is Family.INDEPENDENCE:
        v = np.asarray(v, dtype=float)
        return (v + np.zeros(np.broadcast(v, np.asarray(u)).shape))[()]
    base_h = _BASE[spec.family][2]
    rot = _effective_rotation(spec)
    u, v = _clip01(u), _clip01(v)
    if rot == 0:
        return base_h(spec.theta, u, v)
    if rot == 90:
        return base_h(spec.theta, 1.0 - u, v)
    if rot == 180:
        return 1.0 - base_h(spec.theta, 1.0 - u, 1.0 - v)
    return 1.0 - base_h(spec.theta, u, 1.0 - v)


def hfunc2(spec, u, v):
    """Conditional cdf of U given V = v, i.e. dC(u, v)/dv."""
    if spec.family is Family.INDEPENDENCE:
        u = np.asarray(u, dtype=float)
        return (u + np.zeros(np.broadcast(u, np.asarray(v)).shape))[()]
    # Base families are exchangeable, so conditioning on the second argument
    # reduces to the base h with swapped roles.
    base_h = _BASE[spec.family][2]
    rot = _effective_rotation(spec)
    u, v = _clip01(u), _clip01(v)
    if rot == 0:
        return base_h(spec.theta, v, u)
    if rot == 90:
        return 1.0 - base_h(spec.theta, v, 1.0 - u)
    if rot == 180:
        return 1.0 - base_h(spec.theta, 1.0 - v, 1.0 - u)
    return base_h(spec.theta, 1.0 - v, u)


def hinv(spec, p, u):
    """Inverse of :func:`hfunc` in its first argument: v with hfunc(v|u) = p."""
    if spec.family is Family.INDEPENDENCE:
        p = np.asarray(p, dtype=float)
        return (p + np.zeros(np.broadcast(p, np.asarray(u)).shape))[()]
    base_hinv = _BASE[spec.family][3]
    rot = _effective_rotation(spec)
    u, p = _clip01(u), _clip01(p)
    if rot == 0:
        val = base_hinv(spec.theta, u, p)
    elif rot == 90:
        val = base_hinv(spec.theta, 1.0 - u, p)
    elif rot == 180:
        val = 1.0 - base_hinv(spec.theta, 1.0 - u, 1.0 - p)
    else:
        val = 1.0 - base_hinv(spec.theta, u, 1.0 - p)
    if not np.all(np.isfinite(val)):
        val = _hinv_bisect(lambda vv: hfunc(spec, vv, u), p, val)
    return np.clip(val, 0.0, 1.0)


def hinv2(spec, p, v):
    """Inverse of :func:`hfunc2` in its first argument: u with hfunc2(u|v) = p."""
    if spec.family is Family.INDEPENDENCE:
        p = np.asarray(p, dtype=float)
        return (p + np.zeros(np.broadcast(p, np.asarray(v)).shape))[()]
    base_hinv = _BASE[spec.family][3]
    rot = _effective_rotation(spec)
    v, p = _clip01(v), _clip01(p)
    if rot == 0:
        val = base_hinv(spec.theta, v, p)
    elif rot == 90:
        val = 1.0 - base_hinv(spec.theta, v, 1.0 - p)
    elif rot == 180:
        val = 1.0 - base_hinv(spec.theta, 1.0 - v, 1.0 - p)
    else:
        val = base_hinv(spec.theta, 1.0 - v, p)
    if not np.all(np.isfinite(val)):
        val = _hinv_bisect(lambda uu: hfunc2(spec, uu, v), p, val)
    return np.clip(val, 0.0, 1.0)


def _hinv_bisect(h_of_x, p, bad, tol=1e-10, max_iter=200):
    """Bisection fallback for h-inverses where the closed form misbehaves.

    Monotonicity of the conditional cdf guarantees the (0, 1) bracket.
    """
    p = np.asarray(p, dtype=float)
    lo = np.full(np.broadcast(p, bad).shape, _EPS)
    hi = np.full_like(lo, 1.0 - _EPS)
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        too_low = h_of_x(mid) < p
        lo = np.where(too_low, mid, lo)
        hi = np.where(too_low, hi, mid)
        if np.max(hi - lo) < tol:
            break
    else:
        raise RuntimeError("h-function inversion did not converge within 200 bisections")
    mid = 0.5 * (lo + hi)
    return np.where(np.isfinite(bad), bad, mid)


# ---------------------------------------------------------------------------
# Kendall's tau conversions
# ---------------------------------------------------------------------------


def _frank_debye_term(theta):
    # (4/theta^2) * int_0^theta t/(e^t - 1) dt by 50-point Gauss-Legendre.
    nodes, weights = gauss_legendre_unit(50)
    t = theta * nodes
    integral = theta * np.sum(weights * t / np.expm1(t))
    return 4.0 * integral / (theta * theta)


def theta_to_tau(spec):
    """Kendall's tau implied by the copula parameter.

    BVN: tau = (2/pi) arcsin(theta).  Frank: the Debye-integral formula.
    Clayton: theta/(theta+2), negated under 90/270 degree rotation.
    """
    if spec.family is Family.INDEPENDENCE:
        return 0.0
    theta = spec.theta
    if spec.family is Family.BVN:
        return 2.0 / np.pi * np.arcsin(theta)
    if spec.family is Family.FRANK:
        if abs(theta) < 1e-5:
            return 0.0
        return 1.0 - 4.0 / theta + _frank_debye_term(theta)
    tau = theta / (theta + 2.0)
    if spec.rotation in (90, 270):
        return -tau
    return tau


def tau_range(family, rotation=0):
    """Attainable open interval of Kendall's tau for a family/rotation."""
    if family is Family.INDEPENDENCE:
        return (0.0, 0.0)
    if family is Family.CLAYTON:
        if rotation in (90, 270):
            return (-1.0, 0.0)
        return (0.0, 1.0)
    return (-1.0, 1.0)


def tau_to_theta(family, tau, rotation=0):
    """Copula parameter whose Kendall's tau equals ``tau``.

    Raises ValueError when the tau sign is unattainable for the
    family/rotation (e.g. Clayton 180 degrees with tau < 0).
    """
    lo, hi = tau_range(family, rotation)
    if family is Family.INDEPENDENCE:
        if tau != 0.0:
            raise ValueError("independence copula attains only tau = 0")
        return 0.0
    if not lo < tau < hi:
        raise ValueError(
            f"tau = {tau} outside the attainable range ({lo}, {hi}) "
            f"for {family.value} rotated {rotation} degrees"
        )
    if family is Family.BVN:
        return float(np.sin(0.5 * np.pi * tau))
    if family is Family.CLAYTON:
        t = abs(tau)
        return 2.0 * t / (1.0 - t)
    # Frank: monotone root-find on the Debye formula; tau is odd in theta.
    if tau == 0.0:
        raise ValueError("frank: tau = 0 corresponds to the excluded theta = 0")
    target = abs(tau)

    def f(th):
        return theta_to_tau(CopulaSpec(Family.FRANK, th)) - target

    lo_th, hi_th = 1e-8, 1.0
    while f(hi_th) < 0.0:
        hi_th *= 2.0
        if hi_th > 1e6:
            raise RuntimeError(f"frank: failed to bracket theta for tau = {tau}")
    for _ in range(200):
        mid = 0.5 * (lo_th + hi_th)
        if f(mid) < 0.0:
            lo_th = mid
        else:
            hi_th = mid
        if hi_th - lo_th < 1e-12 * max(1.0, hi_th):
            break
    theta = 0.5 * (lo_th + hi_th)
    return theta if tau > 0 else -theta
