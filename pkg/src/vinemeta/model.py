"""Log-likelihoods of the multinomial quadrivariate D-vine copula mixed model
(normal and beta margins), the bivariate comparator models, and AIC.

The within-study model treats each disease arm of a study's 3x2 table as a
trinomial draw: the diseased arm splits y_+1 subjects into (FN, TP, NE+),
the non-diseased arm splits y_+0 into (TN, FP, NE-).  Between studies, the
latent success probabilities follow a quadrivariate D-vine copula with
normal margins on the multinomial-logit scale or beta margins on the
original scale.

The likelihood integral over the four random effects is evaluated by
Gauss-Legendre cubature after transporting the independent quadrature nodes
to D-vine dependent uniforms, so the copula density never has to be
evaluated; the cubature sums the smooth product of trinomial pmfs at
margin-quantile-transformed nodes.  The quadruple sum is accumulated in
log space (log-sum-exp) to keep large counts from underflowing.
"""

import threading
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache

import numpy as np
from scipy import special

from . import dvine as dv
from .copulas import CopulaSpec
from .margins import BetaMargin, NormalMargin, mlogit
from .quadrature import gauss_legendre_unit


class MarginKind(str, Enum):
    NORMAL = "normal"
    BETA = "beta"


class NEHandling(str, Enum):
    """Ad-hoc recodings of non-evaluable outcomes for the bivariate models."""

    EXCLUDE = "exclude"
    INTENT_TO_DIAGNOSE = "itd"


@dataclass(frozen=True)
class StudyTable:
    """One study's 3x2 table of counts.

    Cell layout: y00 true negatives, y10 false positives, y20 non-evaluable
    negatives (the non-diseased column); y01 false negatives, y11 true
    positives, y21 non-evaluable positives (the diseased column).
    """

    y00: int
    y10: int
    y20: int
    y01: int
    y11: int
    y21: int

    def __post_init__(self):
        for name in ("y00", "y10", "y20", "y01", "y11", "y21"):
            val = getattr(self, name)
            if not isinstance(val, (int, np.integer)) or val < 0:
                raise ValueError(f"{name} must be a nonnegative integer, got {val!r}")
        if self.n_diseased == 0 and self.n_nondiseased == 0:
            raise ValueError("study has no subjects in either arm")

    @property
    def n_diseased(self):
        return self.y01 + self.y11 + self.y21

    @property
    def n_nondiseased(self):
        return self.y00 + self.y10 + self.y20


def counts_matrix(data):
    """Stack studies into an (N, 6) integer array (y00 y10 y20 y01 y11 y21)."""
    if len(data) == 0:
        raise ValueError("empty dataset")
    return np.array(
        [[s.y00, s.y10, s.y20, s.y01, s.y11, s.y21] for s in data], dtype=np.int64
    )


@dataclass(frozen=True)
class ModelParams:
    """Parameters of the quadrivariate model.

    pi = (sensitivity, specificity, P(NE+), P(NE-)); disp are the four
    variability parameters (sigmas for normal margins, gammas in (0,1) for
    beta margins); vine holds the six pair copulas.
    """

    pi: tuple
    disp: tuple
    vine: dv.DVineSpec

    def __post_init__(self):
        if len(self.pi) != 4 or len(self.disp) != 4:
            raise ValueError("pi and disp must each have four entries")

    def validate(self, margin_kind):
        p1, p2, p3, p4 = self.pi
        for j, p in enumerate(self.pi, start=1):
            if not 0.0 < p < 1.0:
                raise ValueError(f"pi{j} = {p} outside (0, 1)")
        if p1 + p3 >= 1.0:
            raise ValueError(f"pi1 + pi3 = {p1 + p3} must be < 1")
        if p2 + p4 >= 1.0:
            raise ValueError(f"pi2 + pi4 = {p2 + p4} must be < 1")
        if margin_kind is MarginKind.NORMAL:
            if any(s <= 0.0 for s in self.disp):
                raise ValueError("normal margins need positive sigmas")
        else:
            if any(not 0.0 < g < 1.0 for g in self.disp):
                raise ValueError("beta margins need gammas in (0, 1)")
        return self

    def margins(self, margin_kind):
        """The four marginal random-effect distributions."""
        p1, p2, p3, p4 = self.pi
        d1, d2, d3, d4 = self.disp
        if margin_kind is MarginKind.NORMAL:
            return (
                NormalMargin(mlogit(p1, p3), d1),
                NormalMargin(mlogit(p2, p4), d2),
                NormalMargin(mlogit(p3, p1), d3),
                NormalMargin(mlogit(p4, p2), d4),
            )
        return (
            BetaMargin(p1, d1),
            BetaMargin(p2, d2),
            BetaMargin(p3 / (1.0 - p1), d3),
            BetaMargin(p4 / (1.0 - p2), d4),
        )


@dataclass(frozen=True)
class BivParams:
    """Parameters of the bivariate comparator model (sens/spec only)."""

    pi: tuple
    disp: tuple
    copula: CopulaSpec

    def __post_init__(self):
        if len(self.pi) != 2 or len(self.disp) != 2:
            raise ValueError("pi and disp must each have two entries")

    def validate(self, margin_kind):
        for j, p in enumerate(self.pi, start=1):
            if not 0.0 < p < 1.0:
                raise ValueError(f"pi{j} = {p} outside (0, 1)")
        if margin_kind is MarginKind.NORMAL:
            if any(s <= 0.0 for s in self.disp):
                raise ValueError("normal margins need positive sigmas")
        else:
            if any(not 0.0 < g < 1.0 for g in self.disp):
                raise ValueError("beta margins need gammas in (0, 1)")
        return self

    def margins(self, margin_kind):
        if margin_kind is MarginKind.NORMAL:
            return (
                NormalMargin(_logit(self.pi[0]), self.disp[0]),
                NormalMargin(_logit(self.pi[1]), self.disp[1]),
            )
        return (BetaMargin(self.pi[0], self.disp[0]), BetaMargin(self.pi[1], self.disp[1]))


def _logit(p):
    return float(np.log(p / (1.0 - p)))


# ---------------------------------------------------------------------------
# Within-study multinomial cell probabilities
# ---------------------------------------------------------------------------


def diseased_cell_probs_normal(x1, x3):
    """(FN, TP, NE+) probabilities from latent logit-scale values."""
    from .margins import mlogit_inv

    a = mlogit_inv(x1, x3)
    b = mlogit_inv(x3, x1)
    return 1.0 - a - b, a, b


def nondiseased_cell_probs_normal(x2, x4):
    """(TN, FP, NE-) probabilities from latent logit-scale values."""
    from .margins import mlogit_inv

    a = mlogit_inv(x2, x4)
    b = mlogit_inv(x4, x2)
    return a, 1.0 - a - b, b


def diseased_cell_probs_beta(x1, x3):
    """(FN, TP, NE+) probabilities from original-scale latent values."""
    x1 = np.asarray(x1, dtype=float)
    x3 = np.asarray(x3, dtype=float)
    return 1.0 - x1 - x3 * (1.0 - x1), x1, x3 * (1.0 - x1)


def nondiseased_cell_probs_beta(x2, x4):
    """(TN, FP, NE-) probabilities from original-scale latent values."""
    x2 = np.asarray(x2, dtype=float)
    x4 = np.asarray(x4, dtype=float)
    return x2, 1.0 - x2 - x4 * (1.0 - x2), x4 * (1.0 - x2)


# ---------------------------------------------------------------------------
# Cubature engine
# ---------------------------------------------------------------------------

_XEPS = 1e-12


class _FastBetaQuantile:
    """Cubic interpolant of a beta quantile's log scales on the probit axis.

    Exact scipy beta quantiles are too slow for the cubature grids inside an
    optimizer loop.  log Q(Phi(z)) and log(1 - Q(Phi(z))) are smooth, slowly
    varying functions of z, so a few hundred exactly computed knots reproduce
    both logs to ~1e-8 even where the quantile itself is steep.  Used only on
    the fitting fast path; the public operations call the exact quantile.
    """

    _ZMAX = 8.3  # beyond ndtri(1e-12) so clamped arguments never extrapolate

    def __init__(self, margin, n_knots=321):
        from scipy.interpolate import CubicSpline

        z = np.linspace(-self._ZMAX, self._ZMAX, n_knots)
        x = margin.quantile(np.clip(special.ndtr(z), 1e-13, 1.0 - 1e-13))
        x = np.clip(x, _XEPS, 1.0 - _XEPS)
        self._log_x = CubicSpline(z, np.log(x))
        self._log_1mx = CubicSpline(z, np.log1p(-x))

    def log_scales(self, v):
        """(log x, log(1-x)) at x = quantile(v)."""
        z = special.ndtri(np.clip(v, _XEPS, 1.0 - _XEPS))
        return self._log_x(z), self._log_1mx(z)

    def __call__(self, v):
        lx, l1mx = self.log_scales(v)
        # Reconstruct x from whichever log is better conditioned.
        return np.where(lx < np.log(0.5), np.exp(lx), -np.expm1(l1mx))


@lru_cache(maxsize=64)
def _fast_beta_quantile(pi, gamma, n_knots=321):
    # Finite-difference parameter sweeps leave most margins untouched, so
    # interpolants are reused across objective evaluations.
    return _FastBetaQuantile(BetaMargin(pi, gamma), n_knots)


@lru_cache(maxsize=16)
def _cached_node_grid(vine, nq):
    # Vine grids depend only on the dependence parameters; margin-coordinate
    # perturbations in a gradient sweep hit this cache.
    return dv.node_grid(vine, gauss_legendre_unit(nq)[0])


@lru_cache(maxsize=16)
def _cached_truncated_grids(c12, c23, nq):
    from . import copulas as cop

    nodes = gauss_legendre_unit(nq)[0]
    v1 = nodes
    v2 = cop.hinv(c12, nodes[None, :], v1[:, None])
    v3 = cop.hinv(c23, nodes[None, None, :], v2[:, :, None])
    z3 = special.ndtri(np.clip(v3, _XEPS, 1.0 - _XEPS))
    return v1, v2, v3, z3


_WORKSPACE = threading.local()


def _scratch(key, shape):
    buf = getattr(_WORKSPACE, key, None)
    if buf is None or buf.shape != shape:
        buf = np.empty(shape)
        setattr(_WORKSPACE, key, buf)
    return buf


def _quantile_grid(margin, v, fast_interp=None):
    if fast_interp is not None:
        return fast_interp(v)
    return np.clip(margin.quantile(np.clip(v, _XEPS, 1.0 - _XEPS)), _XEPS, 1.0 - _XEPS)


def _log_trinomial_coef(n, y1, y2, y3):
    return (
        special.gammaln(n + 1.0)
        - special.gammaln(y1 + 1.0)
        - special.gammaln(y2 + 1.0)
        - special.gammaln(y3 + 1.0)
    )


def _stable_log_z(xa, xb):
    # log(1 + e^xa + e^xb) without overflow; shapes broadcast.
    m = np.maximum(0.0, np.maximum(xa, xb))
    return m + np.log(np.exp(-m) + np.exp(xa - m) + np.exp(xb - m))


def _inner_q4_direct(w, big_feats, big_coefs):
    """log sum_q4 w_q4 exp(sum_f c_f feat_f) per study on the full grid.

    big_feats are (nq,nq,nq,nq) arrays shared across studies; returns the
    (N, nq, nq, nq) log inner sums.  Stabilization is per (q1,q2,q3) row:
    a single per-study max would let rows far from the argmax underflow
    entirely, corrupting the log on the way back.
    """
    n_studies = big_coefs.shape[0]
    shape = (n_studies,) + big_feats[0].shape
    b = _scratch("inner_b", shape)
    tmp = _scratch("inner_tmp", shape)
    np.multiply(
        big_coefs[:, 0].reshape((-1,) + (1,) * big_feats[0].ndim),
        big_feats[0][None],
        out=b,
    )
    for c, feat in zip(big_coefs.T[1:], big_feats[1:]):
        np.multiply(c.reshape((-1,) + (1,) * feat.ndim), feat[None], out=tmp)
        b += tmp
    m = b.max(axis=-1)
    b -= m[..., None]
    np.exp(b, out=b)
    inner = b @ w
    return np.log(inner) + m


def _inner_q4_beta_truncated(nodes, w, spec_c34, margin4, y10, y20, z3_query, n_knots=400):
    """Fast inner q4 sum for a truncated vine with beta margins.

    With level-2/3 independence, v4 = hinv(u_q4 | v3) depends on the grid
    only through the value of v3, and the non-diseased trinomial factorizes
    so that the q4 sum is exp(y10 log(1-x4) + y20 log x4) integrated over
    u_q4.  That makes the log inner sum a smooth 1-d function of v3: we
    evaluate it exactly on a probit-scale knot grid and run a vectorized
    cubic spline through the knots instead of touching the nq^4 tensor.
    """
    from scipy.interpolate import CubicSpline

    from . import copulas as cop

    zk = np.linspace(-8.3, 8.3, n_knots)
    v3k = np.clip(special.ndtr(zk), _XEPS, 1.0 - _XEPS)
    v4k = cop.hinv(spec_c34, nodes[None, :], v3k[:, None])
    lx4, l1mx4 = _fast_beta_quantile(margin4.pi, margin4.gamma).log_scales(v4k)
    b = y10[:, None, None] * l1mx4[None] + y20[:, None, None] * lx4[None]
    m = b.max(axis=-1)  # per-knot stabilization keeps every row exact
    t = np.log(np.exp(b - m[..., None]) @ w) + m
    spline = CubicSpline(zk, t.T, axis=0)
    return spline(z3_query).T  # (N, len(z3_query))


def _counts_key(counts):
    return counts.tobytes(), counts.shape[0]


@lru_cache(maxsize=8)
def _cached_inner_beta_trunc(c12, c23, c34, m4_pi, m4_gamma, nq, counts_bytes, n):
    counts = np.frombuffer(counts_bytes, dtype=np.int64).reshape(n, 6)
    y10 = counts[:, 1].astype(float)
    y20 = counts[:, 2].astype(float)
    nodes, w = gauss_legendre_unit(nq)
    _, _, v3, z3 = _cached_truncated_grids(c12, c23, nq)
    m4 = BetaMargin(m4_pi, m4_gamma)
    return _inner_q4_beta_truncated(
        nodes, w, c34, m4, y10, y20, z3.ravel()
    ).reshape((n,) + v3.shape)


@lru_cache(maxsize=8)
def _cached_inner_beta_full(vine, m4_pi, m4_gamma, nq, counts_bytes, n):
    counts = np.frombuffer(counts_bytes, dtype=np.int64).reshape(n, 6)
    y10 = counts[:, 1].astype(float)
    y20 = counts[:, 2].astype(float)
    _, w = gauss_legendre_unit(nq)
    v4 = _cached_node_grid(vine, nq)[3]
    lx4, l1mx4 = _fast_beta_quantile(m4_pi, m4_gamma).log_scales(v4)
    return _inner_q4_direct(w, (l1mx4, lx4), np.column_stack([y10, y20]))


@lru_cache(maxsize=8)
def _cached_inner_normal(vine, mu2, sigma2, mu4, sigma4, nq, counts_bytes, n):
    counts = np.frombuffer(counts_bytes, dtype=np.int64).reshape(n, 6)
    y20 = counts[:, 2].astype(float)
    n0 = (counts[:, 0] + counts[:, 1] + counts[:, 2]).astype(float)
    _, w = gauss_legendre_unit(nq)
    _, v2, _, v4 = _cached_node_grid(vine, nq)
    x2 = mu2 + sigma2 * special.ndtri(np.clip(v2, _XEPS, 1.0 - _XEPS))
    x4 = mu4 + sigma4 * special.ndtri(np.clip(v4, _XEPS, 1.0 - _XEPS))
    logz24 = _stable_log_z(x2[:, :, None, None], x4)
    return _inner_q4_direct(w, (x4, logz24), np.column_stack([y20, -n0]))


def _loglik_quad_studies(counts, params, margin_kind, nq, fast=False):
    """Per-study log pmf vector for the quadrivariate model.

    counts is the (N, 6) matrix; ``fast`` enables interpolated beta
    quantiles and the reduced inner sum on the fitting hot path.
    """
    params.validate(margin_kind)
    nodes, w = gauss_legendre_unit(nq)
    logw = np.log(w)
    n_studies = len(counts)

    y00 = counts[:, 0].astype(float)
    y10 = counts[:, 1].astype(float)
    y20 = counts[:, 2].astype(float)
    y01 = counts[:, 3].astype(float)
    y11 = counts[:, 4].astype(float)
    y21 = counts[:, 5].astype(float)
    n1 = y01 + y11 + y21
    n0 = y00 + y10 + y20

    m1, m2, m3, m4 = params.margins(margin_kind)
    beta = margin_kind is MarginKind.BETA
    fast_beta_trunc = fast and beta and params.vine.is_truncated

    if fast_beta_trunc:
        # With level-2/3 independence v4 is resolved inside the reduced
        # inner sum; only the v1..v3 grids are needed.
        v1, v2, v3, _ = _cached_truncated_grids(params.vine.c12, params.vine.c23, nq)
        v4 = None
    elif fast:
        v1, v2, v3, v4 = _cached_node_grid(params.vine, nq)
    else:
        v1, v2, v3, v4 = dv.node_grid(params.vine, nodes)

    if beta:
        x1 = _quantile_grid(m1, v1)
        x2 = _quantile_grid(m2, v2)
        if fast:
            lx3, l1mx3 = _fast_beta_quantile(m3.pi, m3.gamma).log_scales(v3)
        else:
            x3 = _quantile_grid(m3, v3)
            lx3, l1mx3 = np.log(x3), np.log1p(-x3)
        # Trinomial logs factorize: pFN = (1-x1)(1-x3), pTP = x1,
        # pNE+ = x3 (1-x1), and mirrored in the non-diseased arm.
        a1 = (
            (y11[:, None] * np.log(x1) + (y01 + y21)[:, None] * np.log1p(-x1))[
                :, :, None, None
            ]
            + y01[:, None, None, None] * l1mx3[None]
            + y21[:, None, None, None] * lx3[None]
        )
        a2_small = (
            y00[:, None, None] * np.log(x2)[None]
            + (y10 + y20)[:, None, None] * np.log1p(-x2)[None]
        )
    else:
        x1 = m1.quantile(np.clip(v1, _XEPS, 1.0 - _XEPS))
        x2 = m2.quantile(np.clip(v2, _XEPS, 1.0 - _XEPS))
        x3 = m3.quantile(np.clip(v3, _XEPS, 1.0 - _XEPS))
        # pTP = e^x1 / Z13, pNE+ = e^x3 / Z13, pFN = 1 / Z13.
        logz13 = _stable_log_z(x1[:, None, None], x3)
        a1 = (
            (y11[:, None] * x1)[:, :, None, None]
            + y21[:, None, None, None] * x3[None]
            - n1[:, None, None, None] * logz13[None]
        )
        a2_small = y00[:, None, None] * x2[None]

    if fast_beta_trunc:
        log_inner = _cached_inner_beta_trunc(
            params.vine.c12, params.vine.c23, params.vine.c34,
            m4.pi, m4.gamma, nq, *_counts_key(counts),
        )
    elif fast and beta:
        log_inner = _cached_inner_beta_full(
            params.vine, m4.pi, m4.gamma, nq, *_counts_key(counts)
        )
    elif fast:
        log_inner = _cached_inner_normal(
            params.vine, m2.mu, m2.sigma, m4.mu, m4.sigma, nq, *_counts_key(counts)
        )
    elif beta:
        x4 = _quantile_grid(m4, v4)
        log_inner = _inner_q4_direct(
            w, (np.log1p(-x4), np.log(x4)), np.column_stack([y10, y20])
        )
    else:
        x4 = m4.quantile(np.clip(v4, _XEPS, 1.0 - _XEPS))
        logz24 = _stable_log_z(x2[:, :, None, None], x4)
        log_inner = _inner_q4_direct(w, (x4, logz24), np.column_stack([y20, -n0]))

    logw123 = logw[:, None, None] + logw[None, :, None] + logw[None, None, :]
    e = a1 + a2_small[:, :, :, None] + log_inner + logw123
    emax = e.reshape(n_studies, -1).max(axis=1)
    total = np.log(np.exp(e - emax[:, None, None, None]).reshape(n_studies, -1).sum(axis=1)) + emax

    logc = _log_trinomial_coef(n1, y01, y11, y21) + _log_trinomial_coef(
        n0, y00, y10, y20
    )
    return total + logc


def study_log_pmf(study, params, margin_kind, nq=15):
    """Log joint pmf of one study's 3x2 table under the quadrivariate model.

    Evaluates the quadruple Gauss-Legendre sum over D-vine dependent nodes;
    an arm with zero total contributes log(1) = 0.
    """
    margin_kind = MarginKind(margin_kind)
    if nq < 2:
        raise ValueError(f"nq must be >= 2, got {nq}")
    val = _loglik_quad_studies(counts_matrix([study]), params, margin_kind, nq)
    return float(val[0])


def loglik_quad(data, params, margin_kind, nq=15, fast=False):
    """Log-likelihood of the quadrivariate model over a dataset.

    Raises a numeric error naming the first study whose contribution is
    non-finite.
    """
    margin_kind = MarginKind(margin_kind)
    per_study = _loglik_quad_studies(counts_matrix(data), params, margin_kind, nq, fast)
    bad = np.flatnonzero(~np.isfinite(per_study))
    if bad.size:
        raise FloatingPointError(
            f"non-finite log-likelihood contribution at study index {bad[0]}"
        )
    return float(np.sum(per_study))


def _biv_counts(counts, handling):
    y00, y10, y20, y01, y11, y21 = (counts[:, j].astype(float) for j in range(6))
    if handling is NEHandling.EXCLUDE:
        return y11, y01 + y11, y00, y00 + y10
    return y11, y01 + y11 + y21, y00, y00 + y10 + y20


def _loglik_biv_studies(counts, params, margin_kind, handling, nq):
    params.validate(margin_kind)
    nodes, w = gauss_legendre_unit(nq)
    logw = np.log(w)
    from . import copulas as cop

    v1 = nodes
    v2 = cop.hinv(params.copula, nodes[None, :], nodes[:, None])
    m1, m2 = params.margins(margin_kind)

    k1, n1, k0, n0 = _biv_counts(counts, handling)

    if margin_kind is MarginKind.BETA:
        p1 = np.clip(m1.quantile(np.clip(v1, _XEPS, 1.0 - _XEPS)), _XEPS, 1 - _XEPS)
        p2 = np.clip(m2.quantile(np.clip(v2, _XEPS, 1.0 - _XEPS)), _XEPS, 1 - _XEPS)
        lp1, l1mp1 = np.log(p1), np.log1p(-p1)
        lp2, l1mp2 = np.log(p2), np.log1p(-p2)
    else:
        x1 = m1.quantile(np.clip(v1, _XEPS, 1.0 - _XEPS))
        x2 = m2.quantile(np.clip(v2, _XEPS, 1.0 - _XEPS))
        # log expit(x) = -softplus(-x)
        lp1, l1mp1 = -_softplus(-x1), -_softplus(x1)
        lp2, l1mp2 = -_softplus(-x2), -_softplus(x2)

    a1 = k1[:, None] * lp1[None, :] + (n1 - k1)[:, None] * l1mp1[None, :]
    a2 = (
        k0[:, None, None] * lp2[None, :, :]
        + (n0 - k0)[:, None, None] * l1mp2[None, :, :]
    )
    e = a1[:, :, None] + a2 + logw[None, :, None] + logw[None, None, :]
    emax = e.reshape(len(counts), -1).max(axis=1)
    total = np.log(np.einsum("nab->n", np.exp(e - emax[:, None, None]))) + emax
    logc = (
        special.gammaln(n1 + 1.0)
        - special.gammaln(k1 + 1.0)
        - special.gammaln(n1 - k1 + 1.0)
        + special.gammaln(n0 + 1.0)
        - special.gammaln(k0 + 1.0)
        - special.gammaln(n0 - k0 + 1.0)
    )
    return total + logc


def _softplus(x):
    return np.logaddexp(0.0, x)


def loglik_bivariate(data, params, margin_kind, handling, nq=15):
    """Log-likelihood of the bivariate comparator model.

    ``handling`` chooses the binomial recoding of non-evaluable outcomes:
    EXCLUDE drops them (TP out of TP+FN, TN out of TN+FP); INTENT_TO_DIAGNOSE
    counts NE+ as false negatives and NE- as false positives.  With a BVN
    copula and normal margins this is the classic bivariate GLMM.
    """
    margin_kind = MarginKind(margin_kind)
    handling = NEHandling(handling)
    per_study = _loglik_biv_studies(counts_matrix(data), params, margin_kind, handling, nq)
    bad = np.flatnonzero(~np.isfinite(per_study))
    if bad.size:
        raise FloatingPointError(
            f"non-finite log-likelihood contribution at study index {bad[0]}"
        )
    return float(np.sum(per_study))


def aic(loglik, n_params):
    """Akaike information criterion -2 loglik + 2 n_params."""
    return -2.0 * float(loglik) + 2.0 * int(n_params)
