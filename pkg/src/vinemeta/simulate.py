"""Data generation and the simulation-study harness.

A replicate draws N studies: D-vine uniforms for the four random effects,
margin quantile transforms (normal margins on the multinomial-logit scale
or beta margins on the original scale), heterogeneous arm sizes from a
shifted gamma, and one trinomial draw per arm.  The harness fits a list of
model specifications to every replicate and aggregates Bias, SD, RMSE and
the square root of the mean theoretical variance, all scaled by 100 as in
the reported tables.
"""

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import dvine as dv
from . import estimate as est
from .model import MarginKind, ModelParams, StudyTable


@dataclass(frozen=True)
class SizeDist:
    """Shifted-gamma model for per-arm study sizes: Gamma(shape, rate) + lag,
    rounded to the nearest integer.  The defaults give mean 30 + 1.2/0.01 =
    150 subjects per arm."""

    shape: float = 1.2
    rate: float = 0.01
    lag: float = 30.0

    def __post_init__(self):
        if self.shape <= 0 or self.rate <= 0 or self.lag < 0:
            raise ValueError("shape and rate must be positive, lag nonnegative")

    @property
    def mean(self):
        return self.lag + self.shape / self.rate


def draw_study_sizes(dist, rng):
    """One (diseased, non-diseased) pair of arm sizes."""
    n1 = int(np.rint(dist.lag + rng.gamma(dist.shape, 1.0 / dist.rate)))
    n2 = int(np.rint(dist.lag + rng.gamma(dist.shape, 1.0 / dist.rate)))
    return n1, n2


@dataclass(frozen=True)
class SimDesign:
    """Truth and layout of a simulation study."""

    n_studies: int
    truth: ModelParams
    margin_kind: MarginKind
    size_dist: SizeDist = SizeDist()
    replications: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.n_studies < 1:
            raise ValueError("n_studies must be >= 1")
        if self.replications < 1:
            raise ValueError("replications must be >= 1")


def _replicate_rng(design, rep):
    return np.random.default_rng(
        np.random.SeedSequence(entropy=design.seed, spawn_key=(int(rep),))
    )


def generate_dataset(design, rep):
    """The ``rep``-th replicate dataset of a design (deterministic per seed)."""
    rng = _replicate_rng(design, rep)
    truth = design.truth.validate(design.margin_kind)
    m1, m2, m3, m4 = truth.margins(design.margin_kind)
    u = rng.uniform(1e-12, 1.0 - 1e-12, size=(design.n_studies, 4))
    v1, v2, v3, v4 = dv.dependent_nodes(truth.vine, u[:, 0], u[:, 1], u[:, 2], u[:, 3])
    x1, x2, x3, x4 = (m.quantile(v) for m, v in zip((m1, m2, m3, m4), (v1, v2, v3, v4)))

    studies = []
    for i in range(design.n_studies):
        n1, n2 = draw_study_sizes(design.size_dist, rng)
        if design.margin_kind is MarginKind.BETA:
            p_tp = x1[i]
            p_ne1 = x3[i] * (1.0 - x1[i])
            p_tn = x2[i]
            p_ne0 = x4[i] * (1.0 - x2[i])
        else:
            e1, e3 = np.exp(x1[i]), np.exp(x3[i])
            p_tp = e1 / (1.0 + e1 + e3)
            p_ne1 = e3 / (1.0 + e1 + e3)
            e2, e4 = np.exp(x2[i]), np.exp(x4[i])
            p_tn = e2 / (1.0 + e2 + e4)
            p_ne0 = e4 / (1.0 + e2 + e4)
        y01, y11, y21 = rng.multinomial(n1, [1.0 - p_tp - p_ne1, p_tp, p_ne1])
        y00, y10, y20 = rng.multinomial(n2, [p_tn, 1.0 - p_tn - p_ne0, p_ne0])
        studies.append(
            StudyTable(
                y00=int(y00), y10=int(y10), y20=int(y20),
                y01=int(y01), y11=int(y11), y21=int(y21),
            )
        )
    return studies


@dataclass(frozen=True)
class FitSpec:
    """One model configuration evaluated in the simulation study."""

    label: str
    model_kind: est.ModelKind
    copulas: tuple
    margin_kind: MarginKind

    @classmethod
    def make(cls, label, model_kind, copulas, margin_kind=None):
        model_kind = est.ModelKind(model_kind)
        if model_kind is est.ModelKind.QUAD_NORMAL:
            margin_kind = MarginKind.NORMAL
        elif model_kind is est.ModelKind.QUAD_BETA:
            margin_kind = MarginKind.BETA
        elif margin_kind is None:
            raise ValueError("bivariate fit specs need a margin kind")
        else:
            margin_kind = MarginKind(margin_kind)
        return cls(label, model_kind, tuple(copulas), margin_kind)


@dataclass
class SimSummary:
    """Bias/SD/RMSE/sqrt(mean theoretical variance) per parameter, x100.

    Parameters whose scale differs between the fitted and generating model
    (dispersions under margin misspecification) are omitted.
    """

    label: str
    param_names: list
    truth: np.ndarray
    bias: np.ndarray
    sd: np.ndarray
    rmse: np.ndarray
    sqrt_vbar: np.ndarray
    n_converged: int
    n_failed: int

    def as_dict(self):
        return {
            "label": self.label,
            "params": list(self.param_names),
            "truth": [float(v) for v in self.truth],
            "bias": [float(v) for v in self.bias],
            "sd": [float(v) for v in self.sd],
            "rmse": [float(v) for v in self.rmse],
            "sqrt_vbar": [float(v) for v in self.sqrt_vbar],
            "n_converged": self.n_converged,
            "n_failed": self.n_failed,
        }


def _truth_natural(design):
    names, values = est._natural_vector(design.truth, design.margin_kind)
    return dict(zip(names, values))


def _fit_one_replicate(args):
    design, rep, fit_specs, options = args
    data = generate_dataset(design, rep)
    out = []
    for spec in fit_specs:
        try:
            res = est.fit(
                data, spec.model_kind, spec.copulas, options=options,
                margin_kind=spec.margin_kind,
            )
            est_map = dict(zip(res.param_names, res.estimates))
            se_map = (
                dict(zip(res.param_names, res.se)) if res.se is not None else None
            )
            out.append((res.converged, est_map, se_map))
        except Exception:
            out.append((False, None, None))
    return out


def run_simulation_study(design, fit_specs, options=None, n_jobs=None):
    """Fit every spec to every replicate and aggregate the summary table.

    Replicates run in parallel over processes (n_jobs defaults to the
    machine's CPU count); per-replicate seeds derive deterministically from
    the design seed, and aggregation follows replicate order, so results
    are identical for identical (seed, design, fit_specs).
    """
    options = options or est.FitOptions()
    if n_jobs is None:
        n_jobs = int(os.environ.get("VINEMETA_THREADS", os.cpu_count() or 1))
    truth_map = _truth_natural(design)

    payloads = [(design, rep, tuple(fit_specs), options) for rep in range(design.replications)]
    if n_jobs > 1 and design.replications > 1:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            all_results = list(pool.map(_fit_one_replicate, payloads, chunksize=1))
    else:
        all_results = [_fit_one_replicate(p) for p in payloads]

    summaries = []
    for k, spec in enumerate(fit_specs):
        rows = [r[k] for r in all_results]
        converged = [r for r in rows if r[0] and r[1] is not None]
        n_failed = len(rows) - len(converged)
        # Parameters reported: common pi's always; dispersions only on the
        # generating scale; taus for every fitted dependence parameter.
        sample_names = converged[0][1].keys() if converged else []
        names = [
            n for n in sample_names
            if n.startswith("pi") or n.startswith("tau")
            or (spec.margin_kind is design.margin_kind
                and (n.startswith("sigma") or n.startswith("gamma")))
        ]
        truth = np.array([truth_map.get(n, np.nan) for n in names])
        ests = np.array([[c[1][n] for n in names] for c in converged])
        if len(converged):
            bias = ests.mean(axis=0) - truth
            sd = ests.std(axis=0, ddof=0)
            rmse = np.sqrt(((ests - truth) ** 2).mean(axis=0))
            ses = np.array(
                [
                    [c[2][n] if c[2] is not None else np.nan for n in names]
                    for c in converged
                ]
            )
            with np.errstate(invalid="ignore"):
                sqrt_vbar = np.sqrt(np.nanmean(ses**2, axis=0))
        else:
            bias = sd = rmse = sqrt_vbar = np.full(len(names), np.nan)
        summaries.append(
            SimSummary(
                label=spec.label,
                param_names=names,
                truth=truth,
                bias=100.0 * bias,
                sd=100.0 * sd,
                rmse=100.0 * rmse,
                sqrt_vbar=100.0 * sqrt_vbar,
                n_converged=len(converged),
                n_failed=n_failed,
            )
        )
    return summaries


def summaries_to_csv(summaries):
    """Render summaries as CSV text: one row per statistic and fit spec,
    one column per parameter, mirroring the reported table layout."""
    all_names = []
    for s in summaries:
        for n in s.param_names:
            if n not in all_names:
                all_names.append(n)
    lines = ["stat,fit," + ",".join(all_names)]
    for stat in ("bias", "sd", "sqrt_vbar", "rmse"):
        for s in summaries:
            vals = dict(zip(s.param_names, getattr(s, stat)))
            cells = [
                ("%.6f" % vals[n]) if n in vals and np.isfinite(vals[n]) else ""
                for n in all_names
            ]
            lines.append(f"{stat},{s.label}," + ",".join(cells))
    for s in summaries:
        lines.append(f"converged,{s.label},{s.n_converged}")
        lines.append(f"failed,{s.label},{s.n_failed}")
    return "\n".join(lines) + "\n"
