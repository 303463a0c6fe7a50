"""Analytic metrics on coordinate charts, evaluated through jets.

A ``ChartMetric`` wraps a component function written with the overloaded
arithmetic of :mod:`hml.jets`; evaluating it on seeded jets produces the
metric together with every partial derivative up to a requested order.
Charts are immutable after construction and safe to share across threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import jets
from .jets import MultiJet, jet_space, seed_point


class DomainError(ValueError):
    """Evaluation point fails the chart's domain predicate."""


class DegenerateMetricError(ValueError):
    """Metric factorization failed: not positive definite at the point."""


class OrderExceededError(ValueError):
    """Requested derivative order exceeds what the metric provides."""


@dataclass(frozen=True)
class ChartMetric:
    """Analytic Riemannian metric on an open chart of R^dim.

    ``components(xjets)`` must return a dim x dim nested structure of jets
    (symmetric); it is evaluated with whatever jet order the caller seeds,
    so all derivatives come from one formula.  ``radial_distance_sq`` is an
    optional analytic expression for the squared geodesic distance r_P^2
    from the chart's distinguished center (the origin); charts that provide
    it support radial conformal deformation.  ``normal_chart`` marks the
    special case r_P(x) = |x|.
    """

    dim: int
    components: Callable
    domain: Callable = lambda x: np.full(np.shape(x)[:-1], True)
    name: str = "metric"
    params: dict = field(default_factory=dict)
    injectivity_radius: Optional[float] = None  # about the center; None = unknown
    radial_distance_sq: Optional[Callable] = None
    normal_chart: bool = False
    max_order: Optional[int] = None  # None: analytic, any order

    def __repr__(self):
        ps = ", ".join(f"{k}={v}" for k, v in self.params.items())
        return f"<ChartMetric {self.name}({ps}) dim={self.dim}>"

    # -- validation -----------------------------------------------------
    def contains(self, x) -> np.ndarray:
        return np.asarray(self.domain(np.asarray(x, dtype=float)))

    def require_inside(self, x):
        ok = self.contains(x)
        if not np.all(ok):
            raise DomainError(f"point outside domain of {self.name}")

    def check_order(self, order: int):
        if self.max_order is not None and order > self.max_order:
            raise OrderExceededError(
                f"{self.name} provides derivatives to order {self.max_order}, "
                f"order {order} requested")

    # -- evaluation -------------------------------------------------------
    def component_jets(self, x, order: int):
        """dim x dim object array of jets at x (x may carry a batch axis)."""
        self.require_inside(x)
        self.check_order(order)
        xj = seed_point(x, order)
        comps = self.components(xj)
        out = np.empty((self.dim, self.dim), dtype=object)
        space = jet_space(self.dim, order)
        batch = np.shape(x)[:-1]
        for i in range(self.dim):
            for j in range(self.dim):
                c = comps[i][j]
                if not isinstance(c, MultiJet):
                    c = MultiJet.constant(space, c, batch)
                    c.coef[0] = c.coef[0] + np.zeros(batch)
                out[i, j] = c
        return out

    def value(self, x) -> np.ndarray:
        """Metric matrix (batch +) (dim, dim) without derivatives."""
        comps = self.component_jets(x, 0)
        batch = np.shape(x)[:-1]
        g = np.empty(batch + (self.dim, self.dim))
        for i in range(self.dim):
            for j in range(self.dim):
                g[..., i, j] = comps[i, j].value
        return g

    def derivative_arrays(self, x, order: int):
        """[g, dg, d2g, ...]: dg[..., i, j, p] = d_p g_ij and so on."""
        comps = self.component_jets(x, order)
        batch = np.shape(x)[:-1]
        m = self.dim
        out = []
        for d in range(order + 1):
            arr = np.empty(batch + (m, m) + (m,) * d)
            for i in range(m):
                for j in range(m):
                    da = comps[i, j].derivative_array(d)
                    if d:
                        da = np.moveaxis(da, range(d), range(-d, 0))
                    arr[(Ellipsis, i, j) + (slice(None),) * d] = da
            out.append(arr)
        return out

    def check_positive_definite(self, x):
        g = self.value(x)
        try:
            np.linalg.cholesky(g)
        except np.linalg.LinAlgError as exc:
            raise DegenerateMetricError(
                f"degenerate metric: {self.name} not positive definite at {x}"
            ) from exc
        return True

    def sqrt_det(self, x) -> np.ndarray:
        return np.sqrt(np.linalg.det(self.value(x)))

    def norm(self, x, v) -> float:
        g = self.value(x)
        v = np.asarray(v, dtype=float)
        return float(np.sqrt(v @ g @ v))

    def unit(self, x, v) -> np.ndarray:
        return np.asarray(v, dtype=float) / self.norm(x, v)


@dataclass(frozen=True)
class ScalarField:
    """Scalar function on a chart, jet-evaluable like metric components."""

    fn: Callable
    name: str = "phi"

    def jet(self, x, order: int) -> MultiJet:
        xj = seed_point(x, order)
        out = self.fn(xj)
        if not isinstance(out, MultiJet):
            space = jet_space(np.shape(x)[-1], order)
            out = MultiJet.constant(space, out, np.shape(x)[:-1])
        return out

    def value(self, x):
        return self.jet(x, 0).value

    def gradient(self, x) -> np.ndarray:
        return self.jet(x, 1).derivative_array(1)

    def hessian_coords(self, x) -> np.ndarray:
        """Plain coordinate second-derivative matrix (not covariant)."""
        return self.jet(x, 2).derivative_array(2)

    @staticmethod
    def from_radial(radial_derivs: Callable, metric: ChartMetric,
                    name: str = "phi") -> "ScalarField":
        """Field f(x) = fcheck(r_P(x)) from fcheck's derivative evaluator.

        ``radial_derivs(r0, order)`` must return [fcheck(r0), fcheck'(r0), ...].
        Requires the chart to expose r_P^2 analytically.
        """
        if metric.radial_distance_sq is None:
            raise ValueError("chart does not declare a radial distance")

        def fn(xjets):
            t = metric.radial_distance_sq(xjets)
            r = jets.sqrt(t)
            r0 = np.asarray(r.const_value())
            order = r.space.order if isinstance(r, MultiJet) else r.order
            return r.apply_analytic(radial_derivs(r0, order))

        return ScalarField(fn, name=name)


def euclidean_norm_sq_field(name="r_sq") -> ScalarField:
    return ScalarField(jets.norm_sq, name=name)
