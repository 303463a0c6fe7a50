"""Built-in analytic example metrics with known ground truth.

Every entry's declared facts are machine-checkable by the other modules;
the test suite audits them (the catalog is self-auditing).  All charts are
centered at the origin, which is the distinguished point for radial
quantities.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import jets
from .jets import norm_sq
from .metric import ChartMetric


@dataclass(frozen=True)
class CatalogEntry:
    name: str
    params: dict
    metric: ChartMetric
    constant_curvature: Optional[float] = None   # None: not a space form
    einstein: bool = False
    harmonic_at_center: bool = True
    closed_form_density: Optional[Callable] = None   # r -> Theta_P(r)
    center_in_chart: bool = True
    notes: str = ""

    @property
    def dim(self) -> int:
        return self.metric.dim

    def reduced_density(self, r):
        """Theta / r^(m-1) from the closed form, if available."""
        if self.closed_form_density is None:
            return None
        r = np.asarray(r, dtype=float)
        return self.closed_form_density(r) / r ** (self.dim - 1)


def _space_form_density(kappa: float, m: int) -> Callable:
    def theta(r):
        r = np.asarray(r, dtype=float)
        if kappa > 0:
            s = np.sin(np.sqrt(kappa) * r) / np.sqrt(kappa)
        elif kappa < 0:
            s = np.sinh(np.sqrt(-kappa) * r) / np.sqrt(-kappa)
        else:
            s = r
        return s ** (m - 1)
    return theta


def euclidean(dim: int) -> CatalogEntry:
    def components(xj):
        space = xj[0].space
        one = 1.0
        return [[one if i == j else 0.0 for j in range(dim)] for i in range(dim)]

    metric = ChartMetric(
        dim=dim, components=components, name="euclidean", params={"dim": dim},
        injectivity_radius=math.inf, radial_distance_sq=norm_sq,
        normal_chart=True)
    return CatalogEntry(
        name="euclidean", params={"dim": dim}, metric=metric,
        constant_curvature=0.0, einstein=True,
        closed_form_density=_space_form_density(0.0, dim))


def space_form(a: float, b: float, dim: int) -> CatalogEntry:
    """Conformally flat chart g_ab = (a + b |x|^2)^(-2) g_e; kappa = 4ab."""
    if a == 0 and b == 0:
        raise ValueError("space form requires (a, b) != (0, 0)")

    def components(xj):
        t = norm_sq(xj)
        w = (a + b * t).reciprocal() ** 2
        return [[w if i == j else 0.0 for j in range(dim)] for i in range(dim)]

    def domain(x):
        return a + b * np.sum(np.asarray(x) ** 2, axis=-1) > 0

    kappa = 4 * a * b
    # geodesic distance from the origin (chart covers it only if a > 0)
    rdist_sq = None
    iota = None
    if a > 0:
        if b > 0:
            iota = math.pi / math.sqrt(kappa)  # chart reaches the antipode

            def rdist_sq(xjets, _a=a, _b=b):
                # (arctan(sqrt(b/a) s) / sqrt(ab))^2 with s^2 = |x|^2
                t = norm_sq(xjets)
                return jets.atan_sqrt_sq(t * (_b / _a)) * (1.0 / (_a * _b))
        elif b == 0:
            iota = math.inf

            def rdist_sq(xjets, _a=a):
                return norm_sq(xjets) * (1.0 / _a ** 2)
        else:
            iota = math.inf  # hyperbolic: boundary is at infinite distance

    metric = ChartMetric(
        dim=dim, components=components, domain=domain, name="space_form",
        params={"a": a, "b": b, "dim": dim}, injectivity_radius=iota,
        radial_distance_sq=rdist_sq, normal_chart=False)
    return CatalogEntry(
        name="space_form", params={"a": a, "b": b, "dim": dim}, metric=metric,
        constant_curvature=kappa, einstein=True, center_in_chart=a > 0,
        closed_form_density=_space_form_density(kappa, dim) if a > 0 else None)


def sphere(dim: int) -> CatalogEntry:
    """Round unit sphere in normal coordinates at a pole (covers r < pi).

    g = xhat xhat^T + (sin^2 r / r^2)(Id - xhat xhat^T), analytic in the
    chart because both radial profiles are even functions of r.
    """
    def components(xj):
        t = norm_sq(xj)
        s = jets.sin_sq_sqrt_over_t(t)            # sin^2(r)/r^2
        w = jets.t_minus_sinsq_over_t2(t)          # (1 - s)/t, analytic at 0
        comps = [[None] * dim for _ in range(dim)]
        for i in range(dim):
            for j in range(i, dim):
                cross = xj[i] * xj[j] * w
                comps[i][j] = cross + s if i == j else cross
                comps[j][i] = comps[i][j]
        return comps

    def domain(x):
        return np.sum(np.asarray(x) ** 2, axis=-1) < math.pi ** 2

    metric = ChartMetric(
        dim=dim, components=components, domain=domain, name="sphere",
        params={"dim": dim}, injectivity_radius=math.pi,
        radial_distance_sq=norm_sq, normal_chart=True)
    return CatalogEntry(
        name="sphere", params={"dim": dim}, metric=metric,
        constant_curvature=1.0, einstein=True,
        closed_form_density=_space_form_density(1.0, dim))


def fubini_study(cdim: int) -> CatalogEntry:
    """Fubini-Study on the affine chart of CP^cdim, real dimension 2*cdim.

    Normalized so holomorphic sectional curvature is 4 (sec in [1, 4]) and
    the cut locus sits at distance pi/2.  Real components:

        g = [ (1+t) Id - x x^T - (Jx)(Jx)^T ] / (1+t)^2,   t = |x|^2,

    with J the standard complex structure pairing slots (2a, 2a+1).
    """
    dim = 2 * cdim

    def components(xj):
        t = norm_sq(xj)
        inv = (1.0 + t).reciprocal()
        inv2 = inv * inv
        # Jx in real coordinates: (Jx)_{2a} = -x_{2a+1}, (Jx)_{2a+1} = x_{2a}
        jx = []
        for a in range(cdim):
            jx.extend([-1.0 * xj[2 * a + 1], xj[2 * a]])
        comps = [[None] * dim for _ in range(dim)]
        for i in range(dim):
            for j in range(i, dim):
                cross = xj[i] * xj[j] + jx[i] * jx[j]
                if i == j:
                    entry = (1.0 + t - cross) * inv2
                else:
                    entry = (-1.0 * cross) * inv2
                comps[i][j] = entry
                comps[j][i] = entry
        return comps

    def fs_density(r):
        r = np.asarray(r, dtype=float)
        return np.sin(r) ** (dim - 1) * np.cos(r)

    def rdist_sq(xjets):
        return jets.atan_sqrt_sq(norm_sq(xjets))

    metric = ChartMetric(
        dim=dim, components=components, name="fubini_study",
        params={"cdim": cdim}, injectivity_radius=math.pi / 2,
        radial_distance_sq=rdist_sq, normal_chart=False)
    return CatalogEntry(
        name="fubini_study", params={"cdim": cdim}, metric=metric,
        constant_curvature=None, einstein=True,
        closed_form_density=fs_density,
        notes="density closed form is engine-validated, sec in [1, 4]")


def two_d_family(n: int, b: float) -> CatalogEntry:
    """Polar-chart surface ds^2 = dr^2 + f dtheta^2, f = (r (1 + b r^n))^2.

    The chart excludes its own center r = 0, but the radial coordinate
    lines are unit-speed geodesics from it and the volume density about
    the center is exactly Theta(r) = r (1 + b r^n), so the density
    expansion can be read off without shooting.
    """
    if n < 2:
        raise ValueError("family needs n >= 2")

    def components(xj):
        r = xj[0]
        f = (r * (1.0 + b * r ** n)) ** 2
        return [[1.0, 0.0], [0.0, f]]

    def domain(x):
        x = np.asarray(x)
        r = x[..., 0]
        return (r > 0) & (1.0 + b * r ** n > 0)

    def theta_density(r):
        r = np.asarray(r, dtype=float)
        return r * (1.0 + b * r ** n)

    metric = ChartMetric(
        dim=2, components=components, domain=domain, name="two_d_family",
        params={"n": n, "b": b}, normal_chart=False)
    return CatalogEntry(
        name="two_d_family", params={"n": n, "b": b}, metric=metric,
        constant_curvature=None, einstein=True,  # any surface is Einstein
        closed_form_density=theta_density, center_in_chart=False,
        notes="polar chart: center excluded, density known in closed form")


_FAMILIES = {
    "euclidean": (euclidean, ("dim",)),
    "space_form": (space_form, ("a", "b", "dim")),
    "g_ab": (space_form, ("a", "b", "dim")),
    "sphere": (sphere, ("dim",)),
    "fubini_study": (fubini_study, ("cdim",)),
    "two_d_family": (two_d_family, ("n", "b")),
}


def build(name: str, params: dict) -> CatalogEntry:
    """Construct a catalog entry from a manifest-style (name, params) pair."""
    if name not in _FAMILIES:
        raise ValueError(f"unknown catalog family {name!r}; "
                         f"known: {sorted(set(_FAMILIES) - {'g_ab'})}")
    fn, keys = _FAMILIES[name]
    missing = [k for k in keys if k not in params]
    if missing:
        raise ValueError(f"family {name!r} needs parameters {missing}")
    extra = [k for k in params if k not in keys]
    if extra:
        raise ValueError(f"family {name!r} got unknown parameters {extra}")
    return fn(**{k: params[k] for k in keys})
