"""Maximum-likelihood fitting by quasi-Newton with numerical derivatives.

All constrained parameters are mapped to an unconstrained vector before
optimization: additive-logistic transforms for the (pi_j, pi_k) simplex
pairs, log for sigmas and Clayton thetas, logit for gammas, Fisher-z for
BVN thetas, identity for Frank.  Standard errors come from the numerical
Hessian in the unconstrained space, delta-method mapped to the natural
scale (probabilities, dispersions, Kendall taus).

A fit of the full six-pair vine that drives a level-2/3 dependence
estimate against its parameter-space boundary is automatically refitted
as the level-1 truncated vine.
"""

import warnings
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np
from scipy import special
from scipy.stats import kendalltau

from . import copulas as cop
from . import model as mdl
from .copulas import CopulaSpec, Family
from .dvine import DVineSpec
from .model import BivParams, MarginKind, ModelParams, NEHandling

_PENALTY = 1e10


class ModelKind(str, Enum):
    QUAD_NORMAL = "quad-normal"
    QUAD_BETA = "quad-beta"
    BIV_EXCLUDE = "biv-exclude"
    BIV_ITD = "biv-itd"

    @property
    def is_quad(self):
        return self in (ModelKind.QUAD_NORMAL, ModelKind.QUAD_BETA)


@dataclass(frozen=True)
class FitOptions:
    """Tuning knobs of the quasi-Newton fit.

    nq is the Gauss-Legendre rule size per dimension; stage_nq < nq runs a
    cheap warm-up pass on a coarser rule before polishing at nq.  grad_step
    and hess_step are relative finite-difference steps.
    """

    nq: int = 15
    max_iter: int = 500
    grad_step: float = 1e-5
    convergence_tol: float = 1e-7
    truncation_threshold: float = 0.95
    stage_nq: tuple = (8, 12)
    hess_step: float = 1e-4
    central_hessian: bool = False
    fast: bool = True

    def __post_init__(self):
        for name in ("nq", "max_iter", "grad_step", "convergence_tol",
                     "truncation_threshold", "hess_step"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        stages = self.stage_nq
        if stages is None:
            stages = ()
        elif isinstance(stages, int):
            stages = (stages,)
        if any(s < 2 for s in stages):
            raise ValueError("stage_nq entries must be >= 2")
        object.__setattr__(self, "stage_nq", tuple(stages))


@dataclass
class FitResult:
    """Estimates, standard errors and diagnostics of one model fit."""

    model_kind: ModelKind
    margin_kind: MarginKind
    params: object  # ModelParams or BivParams at the optimum
    param_names: list
    estimates: np.ndarray  # natural scale: pis, dispersions, Kendall taus
    se: object  # ndarray aligned with estimates, or None if unavailable
    loglik: float
    aic: float
    converged: bool
    truncated: bool
    n_iter: int
    n_params: int
    message: str = ""

    def tau_estimates(self):
        return {
            name: est
            for name, est in zip(self.param_names, self.estimates)
            if name.startswith("tau")
        }


# ---------------------------------------------------------------------------
# Parameter packing
# ---------------------------------------------------------------------------

_PAIR_KEYS = ("c12", "c23", "c34", "c13|2", "c24|3", "c14|23")


def _theta_to_unconstrained(spec):
    if spec.family is Family.BVN:
        return np.arctanh(spec.theta)
    if spec.family is Family.CLAYTON:
        return np.log(spec.theta)
    return spec.theta  # Frank: identity


def _theta_from_unconstrained(family, z):
    if family is Family.BVN:
        # tanh saturates to +-1.0 exactly beyond |z| ~ 19; keep theta interior.
        return float(np.clip(np.tanh(z), -1.0 + 1e-12, 1.0 - 1e-12))
    if family is Family.CLAYTON:
        return float(np.exp(np.clip(z, -300.0, 300.0)))
    return float(z)


def _free_pairs(vine):
    return [
        (key, spec)
        for key, spec in vine.pairs.items()
        if spec.family is not Family.INDEPENDENCE
    ]


_PI_EPS = 1e-12


def _softmax_pair(za, zb):
    # Stabilized inverse additive-logistic; clipped to the open simplex so
    # downstream validation never sees a boundary from a wild optimizer step.
    m = max(0.0, za, zb)
    ea, eb, e0 = np.exp(za - m), np.exp(zb - m), np.exp(-m)
    den = e0 + ea + eb
    pa = float(np.clip(ea / den, _PI_EPS, 1.0 - 2.0 * _PI_EPS))
    pb = float(np.clip(eb / den, _PI_EPS, 1.0 - pa - _PI_EPS))
    return pa, pb


def pack(params, margin_kind):
    """Map model parameters to the unconstrained optimization vector."""
    if isinstance(params, ModelParams):
        params.validate(margin_kind)
        p1, p2, p3, p4 = params.pi
        z = [
            np.log(p1 / (1.0 - p1 - p3)),
            np.log(p3 / (1.0 - p1 - p3)),
            np.log(p2 / (1.0 - p2 - p4)),
            np.log(p4 / (1.0 - p2 - p4)),
        ]
        for d in params.disp:
            z.append(np.log(d) if margin_kind is MarginKind.NORMAL else special.logit(d))
        for _, spec in _free_pairs(params.vine):
            z.append(_theta_to_unconstrained(spec))
        return np.asarray(z, dtype=float)
    params.validate(margin_kind)
    z = [special.logit(params.pi[0]), special.logit(params.pi[1])]
    for d in params.disp:
        z.append(np.log(d) if margin_kind is MarginKind.NORMAL else special.logit(d))
    if params.copula.family is not Family.INDEPENDENCE:
        z.append(_theta_to_unconstrained(params.copula))
    return np.asarray(z, dtype=float)


def unpack(z, template, margin_kind):
    """Inverse of :func:`pack`; ``template`` fixes the structure."""
    z = np.asarray(z, dtype=float)
    if isinstance(template, ModelParams):
        pi13 = _softmax_pair(z[0], z[1])
        pi24 = _softmax_pair(z[2], z[3])
        pi = (pi13[0], pi24[0], pi13[1], pi24[1])
        if margin_kind is MarginKind.NORMAL:
            disp = tuple(np.exp(np.clip(z[4:8], -300.0, 300.0)))
        else:
            disp = tuple(np.clip(special.expit(z[4:8]), _PI_EPS, 1.0 - _PI_EPS))
        pairs = dict(template.vine.pairs)
        k = 8
        for key, spec in _free_pairs(template.vine):
            pairs[key] = replace(
                spec, theta=_theta_from_unconstrained(spec.family, z[k])
            )
            k += 1
        vine = DVineSpec(
            pairs["c12"], pairs["c23"], pairs["c34"],
            pairs["c13|2"], pairs["c24|3"], pairs["c14|23"],
        )
        return ModelParams(pi=pi, disp=disp, vine=vine)
    pi = (
        float(np.clip(special.expit(z[0]), _PI_EPS, 1.0 - _PI_EPS)),
        float(np.clip(special.expit(z[1]), _PI_EPS, 1.0 - _PI_EPS)),
    )
    if margin_kind is MarginKind.NORMAL:
        disp = tuple(np.exp(np.clip(z[2:4], -300.0, 300.0)))
    else:
        disp = tuple(np.clip(special.expit(z[2:4]), _PI_EPS, 1.0 - _PI_EPS))
    copula = template.copula
    if copula.family is not Family.INDEPENDENCE:
        copula = replace(copula, theta=_theta_from_unconstrained(copula.family, z[4]))
    return BivParams(pi=pi, disp=disp, copula=copula)


def _natural_vector(params, margin_kind):
    """Reporting scale: probabilities, dispersions, Kendall taus."""
    if isinstance(params, ModelParams):
        names = ["pi1", "pi2", "pi3", "pi4"]
        values = list(params.pi)
        disp_prefix = "sigma" if margin_kind is MarginKind.NORMAL else "gamma"
        names += [f"{disp_prefix}{j}" for j in range(1, 5)]
        values += list(params.disp)
        for key, spec in _free_pairs(params.vine):
            names.append("tau" + key[1:])
            values.append(cop.theta_to_tau(spec))
        return names, np.asarray(values, dtype=float)
    disp_prefix = "sigma" if margin_kind is MarginKind.NORMAL else "gamma"
    names = ["pi1", "pi2", f"{disp_prefix}1", f"{disp_prefix}2"]
    values = [params.pi[0], params.pi[1], params.disp[0], params.disp[1]]
    if params.copula.family is not Family.INDEPENDENCE:
        names.append("tau12")
        values.append(cop.theta_to_tau(params.copula))
    return names, np.asarray(values, dtype=float)


# ---------------------------------------------------------------------------
# Numerical derivatives
# ---------------------------------------------------------------------------


def numerical_gradient(f, x, step, central=True):
    """Finite-difference gradient with relative step step*max(1, |x_j|)."""
    x = np.asarray(x, dtype=float)
    g = np.empty_like(x)
    f0 = None if central else f(x)
    for j in range(x.size):
        h = step * max(1.0, abs(x[j]))
        xp = x.copy()
        xp[j] = x[j] + h
        fp = f(xp)
        if central:
            xm = x.copy()
            xm[j] = x[j] - h
            g[j] = (fp - f(xm)) / (2.0 * h)
        else:
            g[j] = (fp - f0) / h
    return g


def numerical_hessian(f, x, step=1e-4, central=False):
    """Numerical Hessian; forward differences by default, central on request.

    The forward scheme needs (k^2 + 3k)/2 + 1 evaluations; central needs
    2k^2 + 2k and halves the truncation error order.  Both are exact for
    quadratics.
    """
    x = np.asarray(x, dtype=float)
    k = x.size
    h = step * np.maximum(1.0, np.abs(x))
    hess = np.empty((k, k))
    if central:
        for i in range(k):
            for j in range(i, k):
                pp = x.copy(); pp[i] += h[i]; pp[j] += h[j]
                pm = x.copy(); pm[i] += h[i]; pm[j] -= h[j]
                mp = x.copy(); mp[i] -= h[i]; mp[j] += h[j]
                mm = x.copy(); mm[i] -= h[i]; mm[j] -= h[j]
                hess[i, j] = hess[j, i] = (f(pp) - f(pm) - f(mp) + f(mm)) / (
                    4.0 * h[i] * h[j]
                )
        return hess
    f0 = f(x)
    fi = np.empty(k)
    for i in range(k):
        xi = x.copy()
        xi[i] += h[i]
        fi[i] = f(xi)
    for i in range(k):
        for j in range(i, k):
            xij = x.copy()
            xij[i] += h[i]
            xij[j] += h[j]
            hess[i, j] = hess[j, i] = (f(xij) - fi[i] - fi[j] + f0) / (h[i] * h[j])
    return hess


def _nearest_pd(a):
    # One spectral repair attempt: clip eigenvalues from below.
    vals, vecs = np.linalg.eigh(0.5 * (a + a.T))
    floor = 1e-10 * max(vals.max(), 1.0)
    if vals.min() > 0:
        return a, True
    vals = np.maximum(vals, floor)
    return (vecs * vals) @ vecs.T, False


# ---------------------------------------------------------------------------
# Starting values
# ---------------------------------------------------------------------------


def _pooled_starts(counts):
    tot = counts.sum(axis=0).astype(float)
    n1 = tot[3] + tot[4] + tot[5]
    n0 = tot[0] + tot[1] + tot[2]
    p1 = np.clip(tot[4] / max(n1, 1.0), 0.02, 0.97)
    p2 = np.clip(tot[0] / max(n0, 1.0), 0.02, 0.97)
    p3 = np.clip(tot[5] / max(n1, 1.0), 0.01, 0.5)
    p4 = np.clip(tot[2] / max(n0, 1.0), 0.01, 0.5)
    # Keep each pair comfortably inside the simplex.
    if p1 + p3 > 0.98:
        scale = 0.98 / (p1 + p3)
        p1, p3 = p1 * scale, p3 * scale
    if p2 + p4 > 0.98:
        scale = 0.98 / (p2 + p4)
        p2, p4 = p2 * scale, p4 * scale
    return p1, p2, p3, p4


def _study_logits(counts):
    c = counts.astype(float)
    n1 = c[:, 3] + c[:, 4] + c[:, 5]
    n0 = c[:, 0] + c[:, 1] + c[:, 2]
    # Continuity-corrected study-level rates on the logit scale.
    def lo(y, n):
        r = (y + 0.5) / (n + 1.0)
        return np.log(r / (1.0 - r))

    return np.column_stack([lo(c[:, 4], n1), lo(c[:, 0], n0), lo(c[:, 5], n1), lo(c[:, 2], n0)])


def _rank_sign(a, b):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        t = kendalltau(a, b).statistic
    if not np.isfinite(t) or t == 0.0:
        return 0.0
    return float(np.sign(t))


def _start_tau_for(key, family, rotation, data_sign, requested=None):
    if requested is not None:
        # Explicit starting taus are honoured strictly; an unattainable sign
        # is a configuration error, reported against the offending pair.
        try:
            cop.tau_to_theta(family, requested, rotation)
        except ValueError as exc:
            raise ValueError(f"{key}: {exc}") from None
        return requested
    lo, hi = cop.tau_range(family, rotation)
    tau = 0.2 * (data_sign if data_sign != 0.0 else 1.0)
    # Data-derived starts are clamped into the attainable range.
    return float(np.clip(tau, lo + 0.02, hi - 0.02))


def _build_start_quad(counts, margin_kind, families, start_taus):
    p1, p2, p3, p4 = _pooled_starts(counts)
    disp = (1.0,) * 4 if margin_kind is MarginKind.NORMAL else (0.5,) * 4
    logits = _study_logits(counts)
    pair_cols = {"c12": (0, 1), "c23": (1, 2), "c34": (2, 3),
                 "c13|2": (0, 2), "c24|3": (1, 3), "c14|23": (0, 3)}
    specs = {}
    for idx, key in enumerate(_PAIR_KEYS):
        family, rotation = families[idx]
        if family is Family.INDEPENDENCE:
            specs[key] = cop.independence()
            continue
        a, b = pair_cols[key]
        sign = _rank_sign(logits[:, a], logits[:, b])
        requested = None if start_taus is None else start_taus.get(key)
        tau = _start_tau_for(key, family, rotation, sign, requested)
        specs[key] = CopulaSpec(family, cop.tau_to_theta(family, tau, rotation), rotation)
    vine = DVineSpec(specs["c12"], specs["c23"], specs["c34"],
                     specs["c13|2"], specs["c24|3"], specs["c14|23"])
    return ModelParams(pi=(p1, p2, p3, p4), disp=disp, vine=vine)


def _build_start_biv(counts, margin_kind, family_rot, handling, start_taus):
    c = counts.astype(float)
    if handling is NEHandling.EXCLUDE:
        n1, k1 = c[:, 3] + c[:, 4], c[:, 4]
        n0, k0 = c[:, 0] + c[:, 1], c[:, 0]
    else:
        n1, k1 = c[:, 3] + c[:, 4] + c[:, 5], c[:, 4]
        n0, k0 = c[:, 0] + c[:, 1] + c[:, 2], c[:, 0]
    p1 = float(np.clip(k1.sum() / max(n1.sum(), 1.0), 0.02, 0.97))
    p2 = float(np.clip(k0.sum() / max(n0.sum(), 1.0), 0.02, 0.97))
    disp = (1.0, 1.0) if margin_kind is MarginKind.NORMAL else (0.5, 0.5)
    family, rotation = family_rot
    if family is Family.INDEPENDENCE:
        copula = cop.independence()
    else:
        l1 = np.log((k1 + 0.5) / (n1 - k1 + 0.5))
        l0 = np.log((k0 + 0.5) / (n0 - k0 + 0.5))
        sign = _rank_sign(l1, l0)
        requested = None if start_taus is None else start_taus.get("c12")
        tau = _start_tau_for("c12", family, rotation, sign, requested)
        copula = CopulaSpec(family, cop.tau_to_theta(family, tau, rotation), rotation)
    return BivParams(pi=(p1, p2), disp=disp, copula=copula)


# ---------------------------------------------------------------------------
# Fitting
# ---------------------------------------------------------------------------


def _parse_copula_tokens(tokens):
    parsed = [cop.parse_family_token(t) for t in tokens]
    if len(parsed) == 3:
        parsed = parsed + [(Family.INDEPENDENCE, 0)] * 3
    if len(parsed) != 6:
        raise ValueError(
            "expected 3 (truncated) or 6 copula tokens for the quadrivariate "
            f"vine, got {len(parsed)}"
        )
    return parsed


def _neg_loglik_factory(counts, template, model_kind, margin_kind, nq, fast):
    data_stub = counts

    def neg_loglik(z):
        try:
            params = unpack(z, template, margin_kind)
            if model_kind.is_quad:
                per = mdl._loglik_quad_studies(data_stub, params, margin_kind, nq, fast)
            else:
                handling = (
                    NEHandling.EXCLUDE
                    if model_kind is ModelKind.BIV_EXCLUDE
                    else NEHandling.INTENT_TO_DIAGNOSE
                )
                per = mdl._loglik_biv_studies(data_stub, params, margin_kind, handling, nq)
            total = per.sum()
            if not np.isfinite(total):
                return _PENALTY
            return -float(total)
        except (ValueError, FloatingPointError, OverflowError):
            return _PENALTY

    return neg_loglik


@dataclass
class _OptimResult:
    x: np.ndarray
    fun: float
    jac: np.ndarray
    nit: int
    success: bool
    message: str = ""
    hess_inv: np.ndarray = None


def _cubic_backtrack(phi0, dphi0, alpha, f_alpha, alpha_prev, f_prev):
    # Minimizer of the cubic through (0, phi0, dphi0), (alpha, f_alpha),
    # (alpha_prev, f_prev); quadratic fallback on degenerate geometry.
    if alpha_prev is None:
        denom = 2.0 * (f_alpha - phi0 - dphi0 * alpha)
        if denom <= 0:
            return 0.5 * alpha
        return float(np.clip(-dphi0 * alpha * alpha / denom, 0.1 * alpha, 0.5 * alpha))
    da, db = alpha, alpha_prev
    va = f_alpha - phi0 - dphi0 * da
    vb = f_prev - phi0 - dphi0 * db
    det = da * da * db * db * (da - db)
    if det == 0:
        return 0.5 * alpha
    a = (db * db * va - da * da * vb) / det
    b = (-db * db * db * va + da * da * da * vb) / det
    if a == 0:
        cand = -dphi0 / (2.0 * b) if b != 0 else 0.5 * alpha
    else:
        rad = b * b - 3.0 * a * dphi0
        if rad < 0:
            return 0.5 * alpha
        cand = (-b + np.sqrt(rad)) / (3.0 * a)
    if not np.isfinite(cand):
        return 0.5 * alpha
    return float(np.clip(cand, 0.1 * alpha, 0.5 * alpha))


def _minimize(neg_loglik, z0, grad_step, gtol, max_iter, central, ftol=1e-7,
              h0=None):
    """Dense BFGS with a cubic-interpolation backtracking (Armijo) line
    search.  Gradients are finite differences evaluated only at accepted
    iterates, which keeps the objective-evaluation count proportional to
    the iteration count rather than to the line-search trials.  ``h0``
    seeds the inverse-Hessian approximation (e.g. from a coarser-quadrature
    warm-up on the same likelihood)."""
    grad = lambda z: numerical_gradient(neg_loglik, z, grad_step, central=central)
    x = np.asarray(z0, dtype=float)
    fx = neg_loglik(x)
    gx = grad(x)
    k = x.size
    eye = np.eye(k)
    h = eye.copy() if h0 is None else h0.copy()
    scaled = h0 is not None
    message = "converged"
    success = False
    it = 0
    for it in range(1, max_iter + 1):
        if np.max(np.abs(gx)) < gtol:
            success = True
            break
        d = -h @ gx
        dphi0 = float(d @ gx)
        if not np.isfinite(dphi0) or dphi0 >= 0:
            h = eye.copy()
            d = -gx
            dphi0 = float(d @ gx)
        # Armijo backtracking with cubic interpolation.
        alpha, alpha_prev, f_prev = 1.0, None, None
        accepted = False
        for _ in range(40):
            f_trial = neg_loglik(x + alpha * d)
            if np.isfinite(f_trial) and f_trial <= fx + 1e-4 * alpha * dphi0:
                accepted = True
                break
            new_alpha = (
                0.5 * alpha
                if not np.isfinite(f_trial)
                else _cubic_backtrack(fx, dphi0, alpha, f_trial, alpha_prev, f_prev)
            )
            alpha_prev, f_prev = alpha, f_trial
            alpha = new_alpha
            if alpha < 1e-14:
                break
        if not accepted:
            success = np.max(np.abs(gx)) < 100.0 * gtol
            message = "line search failed"
            break
        s = alpha * d
        x_new = x + s
        g_new = grad(x_new)
        y = g_new - gx
        sy = float(s @ y)
        if sy > 1e-10 * np.linalg.norm(s) * np.linalg.norm(y):
            if not scaled:
                h = (sy / float(y @ y)) * eye
                scaled = True
            rho = 1.0 / sy
            v = eye - rho * np.outer(s, y)
            h = v @ h @ v.T + rho * np.outer(s, s)
        df = fx - f_trial
        x, fx, gx = x_new, f_trial, g_new
        if 0.0 <= df < ftol:
            success = True
            break
    else:
        message = "maximum iterations reached"
    return _OptimResult(
        x=x, fun=fx, jac=gx, nit=it, success=success, message=message, hess_inv=h
    )


def fit(data, model_kind, copulas, options=None, margin_kind=None, start=None,
        start_taus=None):
    """Maximum-likelihood fit of one model to a dataset.

    Parameters
    ----------
    data : list of StudyTable
    model_kind : ModelKind or str
        quad-normal / quad-beta / biv-exclude / biv-itd.
    copulas : sequence of str
        Family tokens (indep, bvn, frank, cln0/90/180/270).  Quadrivariate
        models take 3 tokens (truncated vine) or 6 (full vine); bivariate
        models take 1.
    options : FitOptions
    margin_kind : MarginKind or str, optional
        Required for bivariate models; implied by model_kind otherwise.
    start : ModelParams or BivParams, optional
        Overrides the data-derived starting values.
    start_taus : dict, optional
        Explicit starting Kendall taus keyed by pair ("c12", "c23", ...).
        Signs incompatible with the family rotation raise a domain error
        naming the pair.

    Returns
    -------
    FitResult
    """
    model_kind = ModelKind(model_kind)
    options = options or FitOptions()
    if model_kind is ModelKind.QUAD_NORMAL:
        margin_kind = MarginKind.NORMAL
    elif model_kind is ModelKind.QUAD_BETA:
        margin_kind = MarginKind.BETA
    elif margin_kind is None:
        raise ValueError("bivariate models need an explicit margin_kind")
    else:
        margin_kind = MarginKind(margin_kind)

    counts = mdl.counts_matrix(data)

    if model_kind.is_quad:
        families = _parse_copula_tokens(copulas)
        template = start or _build_start_quad(counts, margin_kind, families, start_taus)
    else:
        if len(copulas) != 1:
            raise ValueError("bivariate models take exactly one copula token")
        handling = (
            NEHandling.EXCLUDE
            if model_kind is ModelKind.BIV_EXCLUDE
            else NEHandling.INTENT_TO_DIAGNOSE
        )
        template = start or _build_start_biv(
            counts, margin_kind, cop.parse_family_token(copulas[0]), handling, start_taus
        )

    result = _fit_from_template(counts, template, model_kind, margin_kind, options)

    # Boundary detection at levels 2-3 triggers the truncated refit: a
    # conditional dependence estimate at the edge of its space means the
    # full structure carries more dependence than the data support.
    if model_kind.is_quad and not template.vine.is_truncated:
        taus = result.params.vine.taus()
        hit = [
            key
            for key in ("c13|2", "c24|3", "c14|23")
            if abs(taus[key]) > options.truncation_threshold
        ]
        if hit:
            trunc_template = ModelParams(
                pi=result.params.pi,
                disp=result.params.disp,
                vine=DVineSpec.truncated(
                    result.params.vine.c12,
                    result.params.vine.c23,
                    result.params.vine.c34,
                ),
            )
            result = _fit_from_template(
                counts, trunc_template, model_kind, margin_kind, options
            )
            result.truncated = True
            result.message = (
                f"level-2/3 dependence at boundary ({', '.join(hit)}); "
                "refitted the truncated vine"
            )
    return result


def _fit_from_template(counts, template, model_kind, margin_kind, options):
    z0 = pack(template, margin_kind)
    nq = options.nq
    total_iter = 0

    h0 = None
    # Coarse-rule warm-ups do the bulk of the descent cheaply and hand the
    # accumulated inverse-Hessian approximation up the ladder.
    for rung in sorted(set(s for s in options.stage_nq if s < nq)):
        warm = _neg_loglik_factory(
            counts, template, model_kind, margin_kind, rung, options.fast
        )
        res0 = _minimize(
            warm, z0, options.grad_step, 2e-5, options.max_iter,
            central=False, ftol=1e-9, h0=h0,
        )
        total_iter += res0.nit
        if np.all(np.isfinite(res0.x)) and res0.fun < _PENALTY:
            z0 = res0.x
            h0 = res0.hess_inv

    neg_loglik = _neg_loglik_factory(
        counts, template, model_kind, margin_kind, nq, options.fast
    )
    res = _minimize(
        neg_loglik, z0, options.grad_step, 1e-5,
        max(options.max_iter - total_iter, 50),
        central=False, ftol=options.convergence_tol, h0=h0,
    )
    total_iter += res.nit
    z_hat = res.x
    f_hat = res.fun

    grad_inf = float(np.max(np.abs(res.jac))) if res.jac is not None else np.inf
    converged = bool(res.success) or grad_inf < 1e-3
    params_hat = unpack(z_hat, template, margin_kind)
    loglik = -f_hat

    names, natural = _natural_vector(params_hat, margin_kind)
    se = _standard_errors_z(
        neg_loglik, z_hat, template, margin_kind, options
    )
    n_params = z_hat.size
    result = FitResult(
        model_kind=model_kind,
        margin_kind=margin_kind,
        params=params_hat,
        param_names=names,
        estimates=natural,
        se=se,
        loglik=loglik,
        aic=mdl.aic(loglik, n_params),
        converged=converged,
        truncated=(
            template.vine.is_truncated if isinstance(template, ModelParams) else False
        ),
        n_iter=int(total_iter),
        n_params=n_params,
        message="" if converged else res.message,
    )
    return result


def _natural_jacobian(z, template, margin_kind, step=1e-6):
    _, f0 = _natural_vector(unpack(z, template, margin_kind), margin_kind)
    jac = np.empty((f0.size, z.size))
    for j in range(z.size):
        h = step * max(1.0, abs(z[j]))
        zp = z.copy(); zp[j] += h
        zm = z.copy(); zm[j] -= h
        _, fp = _natural_vector(unpack(zp, template, margin_kind), margin_kind)
        _, fm = _natural_vector(unpack(zm, template, margin_kind), margin_kind)
        jac[:, j] = (fp - fm) / (2.0 * h)
    return jac


def _standard_errors_z(neg_loglik, z_hat, template, margin_kind, options):
    try:
        hess = numerical_hessian(
            neg_loglik, z_hat, options.hess_step, central=options.central_hessian
        )
        if not np.all(np.isfinite(hess)):
            return None
        hess, was_pd = _nearest_pd(hess)
        cov_z = np.linalg.inv(hess)
        jac = _natural_jacobian(z_hat, template, margin_kind)
        var_nat = np.einsum("ij,jk,ik->i", jac, cov_z, jac)
        if np.any(var_nat < 0):
            return None
        return np.sqrt(var_nat)
    except np.linalg.LinAlgError:
        return None


def standard_errors(data, fit_result, options=None):
    """Recompute delta-method natural-scale SEs for a converged fit."""
    options = options or FitOptions()
    counts = mdl.counts_matrix(data)
    template = fit_result.params
    z_hat = pack(template, fit_result.margin_kind)
    neg_loglik = _neg_loglik_factory(
        counts, template, fit_result.model_kind, fit_result.margin_kind,
        options.nq, options.fast,
    )
    return _standard_errors_z(
        neg_loglik, z_hat, template, fit_result.margin_kind, options
    )
