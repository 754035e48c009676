"""Quadrivariate D-vine copula on the path 1-2-3-4.

Level 1 joins neighbours (1,2), (2,3), (3,4); level 2 joins the conditional
pairs (1,3|2), (2,4|3); level 3 joins (1,4|23).  A truncated vine keeps the
level-1 copulas and sets levels 2-3 to independence (conditional
independence), which preserves any tail dependence introduced at level 1.

The module provides the log density, the transformation of independent
uniforms into uniforms with the D-vine distribution (used both for the
cubature nodes of the likelihood and for simulation), and a seeded sampler.
"""

from dataclasses import dataclass

import numpy as np

from . import copulas as cop
from .copulas import CopulaSpec, Family


@dataclass(frozen=True)
class DVineSpec:
    """Pair-copula assignment for the quadrivariate D-vine.

    ``c12, c23, c34`` are the level-1 pair copulas; ``c13_2, c24_3`` sit at
    level 2 and ``c14_23`` at level 3.  Variable order is fixed to
    (1, 2, 3, 4).
    """

    c12: CopulaSpec
    c23: CopulaSpec
    c34: CopulaSpec
    c13_2: CopulaSpec = cop.independence()
    c24_3: CopulaSpec = cop.independence()
    c14_23: CopulaSpec = cop.independence()

    @classmethod
    def truncated(cls, c12, c23, c34):
        """Level-1 vine with independence copulas at levels 2 and 3."""
        return cls(c12, c23, c34)

    @property
    def is_truncated(self):
        return (
            self.c13_2.family is Family.INDEPENDENCE
            and self.c24_3.family is Family.INDEPENDENCE
            and self.c14_23.family is Family.INDEPENDENCE
        )

    @property
    def pairs(self):
        """The six pair copulas keyed by conventional labels."""
        return {
            "c12": self.c12,
            "c23": self.c23,
            "c34": self.c34,
            "c13|2": self.c13_2,
            "c24|3": self.c24_3,
            "c14|23": self.c14_23,
        }

    def taus(self):
        """Kendall's tau of every pair copula."""
        return {k: cop.theta_to_tau(s) for k, s in self.pairs.items()}


def dvine_log_density(spec, u1, u2, u3, u4):
    """Log density of the quadrivariate D-vine copula.

    The density factorizes over the three levels,

        c1234 = c12 c23 c34 * c13|2(F(1|2), F(3|2)) c24|3(F(2|3), F(4|3))
                * c14|23(F(1|23), F(4|23)),

    with the conditional cdf arguments produced by the pair h-functions.
    All-independence specs give 0; inputs are broadcast and clamped.
    """
    u1, u2, u3, u4 = np.broadcast_arrays(
        np.asarray(u1, dtype=float),
        np.asarray(u2, dtype=float),
        np.asarray(u3, dtype=float),
        np.asarray(u4, dtype=float),
    )
    logd = cop.log_pdf(spec.c12, u1, u2)
    logd = logd + cop.log_pdf(spec.c23, u2, u3)
    logd = logd + cop.log_pdf(spec.c34, u3, u4)
    if spec.is_truncated:
        return logd
    f1_2 = cop.hfunc2(spec.c12, u1, u2)
    f3_2 = cop.hfunc(spec.c23, u3, u2)
    f2_3 = cop.hfunc2(spec.c23, u2, u3)
    f4_3 = cop.hfunc(spec.c34, u4, u3)
    logd = logd + cop.log_pdf(spec.c13_2, f1_2, f3_2)
    logd = logd + cop.log_pdf(spec.c24_3, f2_3, f4_3)
    f1_23 = cop.hfunc2(spec.c13_2, f1_2, f3_2)
    f4_23 = cop.hfunc(spec.c24_3, f4_3, f2_3)
    logd = logd + cop.log_pdf(spec.c14_23, f1_23, f4_23)
    return logd


def dependent_nodes(spec, u1, u2, u3, u4):
    """Transform independent uniforms into D-vine distributed uniforms.

    Implements the conditional (inverse Rosenblatt) construction

        v1 = u1
        v2 = h^-1_{2|1}(u2 | v1)
        v3 = h^-1_{3|2}( h^-1_{3|1;2}(u3 | t1) | v2 )
        v4 = h^-1_{4|3}( h^-1_{4|2;3}( h^-1_{4|1;23}(u4 | t4) | t3 ) | v3 )

    where t1 = h_{1|2}(v1|v2), t3 = h_{2|3}(v2|v3) and
    t4 = h_{1|3;2}(t1 | t2) carry the conditional cdfs down the vine.
    Arguments broadcast, so quadrature grids can be fed as
    (n,1,1,1), (1,n,1,1), ... to produce the full tensor of nodes.

    Returns
    -------
    v1, v2, v3, v4 : ndarray
        Dependent uniforms; with an all-independence spec the inputs are
        returned unchanged.
    """
    u1 = np.asarray(u1, dtype=float)
    u2 = np.asarray(u2, dtype=float)
    u3 = np.asarray(u3, dtype=float)
    u4 = np.asarray(u4, dtype=float)
    v1 = u1
    v2 = cop.hinv(spec.c12, u2, v1)
    t1 = cop.hfunc2(spec.c12, v1, v2)
    t2 = cop.hinv(spec.c13_2, u3, t1)
    v3 = cop.hinv(spec.c23, t2, v2)
    t3 = cop.hfunc2(spec.c23, v2, v3)
    t4 = cop.hfunc2(spec.c13_2, t1, t2)
    t5 = cop.hinv(spec.c14_23, u4, t4)
    t6 = cop.hinv(spec.c24_3, t5, t3)
    v4 = cop.hinv(spec.c34, t6, v3)
    return v1, v2, v3, v4


def node_grid(spec, nodes):
    """Dependent cubature nodes over the tensor grid of 1-d quadrature nodes.

    Returns v1 (n,), v2 (n,n), v3 (n,n,n), v4 (n,n,n,n): successive
    coordinates depend on all preceding grid indices.
    """
    n = np.asarray(nodes, dtype=float)
    v1, v2, v3, v4 = dependent_nodes(
        spec,
        n[:, None, None, None],
        n[None, :, None, None],
        n[None, None, :, None],
        n[None, None, None, :],
    )
    return (
        v1[:, 0, 0, 0],
        v2[:, :, 0, 0],
        v3[:, :, :, 0],
        v4,
    )


def sample(spec, n, seed):
    """Draw ``n`` rows from the D-vine copula with a seeded generator.

    Returns an (n, 4) array of dependent uniforms; reproducible per seed.
    """
    if n < 1:
        raise ValueError(f"sample size must be >= 1, got {n}")
    rng = np.random.default_rng(seed)
    u = rng.uniform(1e-12, 1.0 - 1e-12, size=(int(n), 4))
    v1, v2, v3, v4 = dependent_nodes(spec, u[:, 0], u[:, 1], u[:, 2], u[:, 3])
    return np.column_stack([v1, v2, v3, v4])
