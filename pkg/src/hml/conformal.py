"""Radial conformal deformations g_psi = psi(r_P^2)^(-2) g and diagnostics.

Deforming preserves central harmonicity about P; the deformed polar density
obeys

    Theta_{P, g_psi}(rc, theta) = psi(r(rc)^2)^(1-m) Theta_{P, g}(r(rc)),

where rc is the deformed radial coordinate with d(rc) = psi(r^2)^(-1) dr.
This module also carries the Ricci conformal-change law, the g_ab isometry
checks, the density-trivializing factor, and the near-cut-locus blow-up
diagnostics for the trivial-density construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import CubicHermiteSpline, PchipInterpolator

from . import jets
from .curvature import curvature, gradient_norm_sq, hessian, laplacian
from .geodesics import DensityProfile, NonRadialProfileError
from .jets import seed_point
from .metric import ChartMetric, ScalarField
from .series import TruncatedSeries


# ---------------------------------------------------------------------------
# radial functions psi(t), t = r^2
# ---------------------------------------------------------------------------

class RadialFunction:
    """One-variable analytic factor psi(t) with derivatives on demand.

    Subclasses provide ``series(t0, order)`` returning a TruncatedSeries of
    psi about t0; t0 may be a numpy array, in which case the coefficients
    broadcast (used when composing into batched jets).
    """

    name = "psi"

    def series(self, t0, order: int) -> TruncatedSeries:
        raise NotImplementedError

    def derivs(self, t0, order: int):
        s = self.series(t0, order)
        return [s.coeffs[k] * math.factorial(k) for k in range(order + 1)]

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        return np.asarray(self.series(t, 0).coeffs[0])

    def deriv1(self, t):
        return np.asarray(self.series(np.asarray(t, dtype=float), 1).coeffs[1])

    def compose_jet(self, t_jet):
        """psi(t_jet) for a MultiJet (or series) argument t_jet."""
        order = t_jet.space.order if hasattr(t_jet, "space") else t_jet.order
        return t_jet.apply_analytic(self.derivs(t_jet.const_value(), order))

    def find_zero(self, t_max: float, n: int = 2048) -> Optional[float]:
        """Location of a sign change of psi on [0, t_max], if any."""
        from scipy.optimize import brentq
        ts = np.linspace(0.0, t_max, n)
        vals = np.atleast_1d(self(ts))
        sign = np.sign(vals)
        change = np.nonzero(sign[:-1] * sign[1:] <= 0)[0]
        if len(change) == 0:
            return None
        i = change[0]
        if vals[i] == 0:
            return float(ts[i])
        return float(brentq(lambda t: float(self(t)), ts[i], ts[i + 1]))


def _seed_series(t0, order: int) -> TruncatedSeries:
    t0 = np.asarray(t0, dtype=float)
    if order == 0:
        return TruncatedSeries([t0 + 0.0])
    return TruncatedSeries.variable(order, at=t0)


class AnalyticRadialFunction(RadialFunction):
    """psi defined by a formula acting on a truncated series in t."""

    def __init__(self, fn: Callable, name: str = "psi"):
        self.fn = fn
        self.name = name

    def series(self, t0, order: int) -> TruncatedSeries:
        seed = _seed_series(t0, order)
        out = self.fn(seed)
        if not isinstance(out, TruncatedSeries):
            out = TruncatedSeries.constant(out + 0.0 * seed.coeffs[0], order)
        return out


class PolynomialRadialFunction(AnalyticRadialFunction):
    """psi(t) = c0 + c1 t + ... (the manifest 'poly' kind)."""

    def __init__(self, coeffs):
        self.poly_coeffs = [float(c) for c in coeffs]

        def fn(t):
            acc = 0.0 * t + self.poly_coeffs[-1]
            for c in reversed(self.poly_coeffs[:-1]):
                acc = acc * t + c
            return acc

        super().__init__(fn, name=f"poly{self.poly_coeffs}")


class ProfileRadialFunction(RadialFunction):
    """Monotone-cubic interpolated psi from (t, value) samples.

    Derivative access is limited to order 2.  The interpolant is anchored
    at t = 0 with the supplied anchor value (reduced densities have
    psi -> 1 there).
    """

    max_order = 2

    def __init__(self, t_knots, values, anchor: float = 1.0,
                 name: str = "psi_profile"):
        t_knots = np.asarray(t_knots, dtype=float)
        values = np.asarray(values, dtype=float)
        if t_knots[0] > 0:
            t_knots = np.concatenate([[0.0], t_knots])
            values = np.concatenate([[anchor], values])
        self._interp = PchipInterpolator(t_knots, values)
        self._ds = [self._interp.derivative(k) for k in (1, 2)]
        self.name = name

    def series(self, t0, order: int) -> TruncatedSeries:
        if order > self.max_order:
            raise ValueError(
                f"interpolated radial function supports order <= {self.max_order}")
        t0 = np.asarray(t0, dtype=float)
        cs = [self._interp(t0), self._ds[0](t0), self._ds[1](t0) / 2.0]
        return TruncatedSeries(cs[: order + 1])


# ---------------------------------------------------------------------------
# reparametrization rc(r) with d(rc) = psi(r^2)^(-1) dr
# ---------------------------------------------------------------------------

@dataclass
class Reparametrization:
    """Forward map rc(r) and its inverse on [0, r_max], C^1-consistent."""

    psi: RadialFunction
    r_max: float
    r_grid: np.ndarray
    rc_grid: np.ndarray
    roundtrip_error: float = 0.0

    def __post_init__(self):
        self._fwd = CubicHermiteSpline(
            self.r_grid, self.rc_grid, 1.0 / self.psi(self.r_grid ** 2))
        self._inv = CubicHermiteSpline(
            self.rc_grid, self.r_grid, self.psi(self.r_grid ** 2))

    @property
    def rc_max(self) -> float:
        return float(self.rc_grid[-1])

    def rc(self, r):
        return self._fwd(np.asarray(r, dtype=float))

    def r(self, rc):
        return self._inv(np.asarray(rc, dtype=float))


def reparametrize(psi: RadialFunction, r_max: float,
                  n_grid: int = 1200) -> Reparametrization:
    """Integrate d(rc) = psi(r^2)^(-1) dr by composite Gauss quadrature."""
    zero = psi.find_zero(r_max ** 2)
    if zero is not None:
        raise ValueError(
            f"psi vanishes at t = {zero:.6g} (r = {math.sqrt(max(zero, 0)):.6g}) "
            "inside the requested range")
    nodes, weights = np.polynomial.legendre.leggauss(8)
    r_grid = np.linspace(0.0, r_max, n_grid + 1)
    a, b = r_grid[:-1], r_grid[1:]
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    pts = mid[:, None] + half[:, None] * nodes[None, :]
    vals = 1.0 / np.asarray(psi(pts.ravel() ** 2)).reshape(pts.shape)
    seg = half * (vals * weights[None, :]).sum(axis=1)
    rc_grid = np.concatenate([[0.0], np.cumsum(seg)])
    rep = Reparametrization(psi=psi, r_max=r_max, r_grid=r_grid,
                            rc_grid=rc_grid)
    probe = np.linspace(0.0, r_max, 137)
    rep.roundtrip_error = float(np.max(np.abs(rep.r(rep.rc(probe)) - probe)))
    return rep


# ---------------------------------------------------------------------------
# metric deformation and the density law
# ---------------------------------------------------------------------------

def conformal_factor_field(metric: ChartMetric, psi: RadialFunction
                           ) -> ScalarField:
    """Psi(x) = psi(r_P(x)^2) as a jet-evaluable scalar field."""
    _require_radial_chart(metric)
    return ScalarField(
        lambda xj: psi.compose_jet(metric.radial_distance_sq(xj)),
        name=f"{psi.name}(r^2)")


def _require_radial_chart(metric: ChartMetric):
    if metric.radial_distance_sq is None:
        raise ValueError(
            f"{metric.name} does not expose an analytic radial distance; "
            "radial deformation needs r_P (declare a normal or radially "
            "symmetric chart)")


def deform_metric(metric: ChartMetric, psi: RadialFunction) -> ChartMetric:
    """The radial conformal deformation psi(r_P^2)^(-2) g on the same chart."""
    _require_radial_chart(metric)
    base_components = metric.components
    rsq = metric.radial_distance_sq
    m = metric.dim

    def components(xjets):
        base = base_components(xjets)
        Psi = psi.compose_jet(rsq(xjets))
        w = Psi.reciprocal() ** 2
        return [[w * base[i][j] for j in range(m)] for i in range(m)]

    base_domain = metric.domain

    def domain(x):
        ok = np.asarray(base_domain(x))
        t = radial_sq_value(metric, x)
        return ok & (np.asarray(psi(t)) > 0)

    return ChartMetric(
        dim=m, components=components, domain=domain,
        name=f"{metric.name}_psi",
        params={**metric.params, "psi": psi.name},
        injectivity_radius=None, radial_distance_sq=None, normal_chart=False)


def radial_sq_value(metric: ChartMetric, x) -> np.ndarray:
    """r_P(x)^2 evaluated numerically through order-0 jets."""
    _require_radial_chart(metric)
    out = metric.radial_distance_sq(seed_point(np.asarray(x, dtype=float), 0))
    return np.asarray(out.value if hasattr(out, "value") else out)


def deformed_density(base_theta: Callable, psi: RadialFunction, m: int,
                     rc_values, r_max: float,
                     rep: Optional[Reparametrization] = None):
    """Push a radial base density through the deformation law.

    ``base_theta(r)`` is the base polar density; returns the deformed
    density at the requested deformed radii.
    """
    if rep is None:
        rep = reparametrize(psi, r_max)
    rc_values = np.asarray(rc_values, dtype=float)
    if np.any(rc_values > rep.rc_max + 1e-12):
        raise ValueError(
            f"deformed radius beyond rc({r_max}) = {rep.rc_max:.6g}")
    r = rep.r(rc_values)
    return np.asarray(psi(r ** 2)) ** (1.0 - m) \
        * np.asarray(base_theta(r), dtype=float)


def profile_is_radial(profile: DensityProfile, tolerance: float = 1e-6) -> bool:
    return bool(profile.theta_spread().max() <= tolerance)


# ---------------------------------------------------------------------------
# Ricci conformal change law
# ---------------------------------------------------------------------------

def ricci_conformal(metric: ChartMetric, psi: RadialFunction, x,
                    bundle=None) -> np.ndarray:
    """Predicted Ricci of g_psi from the base metric's data at x:

        rho_psi = rho + (m-2)/Psi Hess(Psi)
                  + ( -Delta0(Psi)/Psi - (m-1) |dPsi|^2/Psi^2 ) g,

    with Delta0 the positive Laplacian.  Compare against the directly
    computed Ricci of deform_metric(metric, psi) to cross-check both paths.
    """
    x = np.asarray(x, dtype=float)
    m = metric.dim
    if bundle is None:
        bundle = curvature(metric, x, k_max=0)
    field = conformal_factor_field(metric, psi)
    Psi0 = float(field.value(x))
    H = hessian(metric, field, x)
    lap = float(laplacian(metric, field, x))
    gn = float(gradient_norm_sq(metric, field, x))
    return (bundle.ricci + (m - 2) / Psi0 * H
            + (-lap / Psi0 - (m - 1) * gn / Psi0 ** 2) * bundle.g)


# ---------------------------------------------------------------------------
# space-form isometries (inversion and scaling)
# ---------------------------------------------------------------------------

@dataclass
class IsometryReport:
    a: float
    b: float
    n_points: int
    max_dev_inversion: float
    max_dev_scaling: float
    scaling_c: float

    def max_dev(self) -> float:
        return max(self.max_dev_inversion, self.max_dev_scaling)


def space_form_isometry_check(a: float, b: float, points,
                              c: float = 3.0) -> IsometryReport:
    """Pull g_{b,a} back through inversion eta = xi/|xi|^2 and check the
    scaling identity relating g_{a,b} to g_{a/c, bc}; both componentwise."""
    from .catalog import space_form

    points = np.atleast_2d(np.asarray(points, dtype=float))
    m = points.shape[1]
    g_ab = space_form(a, b, m).metric
    g_ba = space_form(b, a, m).metric
    g_scaled = space_form(a / c, b * c, m).metric

    dev_inv = 0.0
    dev_scale = 0.0
    for xi in points:
        r2 = float(xi @ xi)
        if r2 < 1e-12:
            raise ValueError("points must avoid the inversion singularity at 0")
        eta = xi / r2
        if not (g_ab.contains(xi) and g_ba.contains(eta)):
            raise ValueError(f"point {xi} leaves a domain of g_ab / g_ba")
        Jac = (np.eye(m) - 2.0 * np.outer(xi, xi) / r2) / r2
        pulled = Jac.T @ g_ba.value(eta) @ Jac
        dev_inv = max(dev_inv, float(np.max(np.abs(pulled - g_ab.value(xi)))))
        # scaling xi = c eta: (phi_c^* g_{a,b})(eta) = c^2 g_{a,b}(c eta)
        eta_s = xi / c
        pulled_s = c ** 2 * g_ab.value(xi)
        dev_scale = max(dev_scale,
                        float(np.max(np.abs(pulled_s - g_scaled.value(eta_s)))))
    return IsometryReport(a=a, b=b, n_points=len(points),
                          max_dev_inversion=dev_inv,
                          max_dev_scaling=dev_scale, scaling_c=c)


# ---------------------------------------------------------------------------
# trivializing conformal factor (deformed density == rc^(m-1) exactly)
# ---------------------------------------------------------------------------

def _recenter_poly(coeffs, t0):
    """Shift a short polynomial sum c_k t^k to powers of (t - t0)."""
    K = len(coeffs) - 1
    out = []
    for j in range(K + 1):
        acc = 0.0
        for k in range(K, j - 1, -1):
            acc = acc * t0 + math.comb(k, j) * coeffs[k]
        out.append(acc)
    return out


class TrivializerRadialFunction(RadialFunction):
    """The unique psi with psi(0) = 1 making the deformed density trivial.

    Writing q = 1/(m-1) and Ttilde(t) for the base reduced density at
    t = r^2, the deformed polar density equals rc^(m-1) identically iff

        psi(t) = Ttilde(t)^q / V(t),
        log V(t) = (1/2) int_0^t (Ttilde(tau)^-q - 1) / tau  d tau,

    because then rc(r) = r V(r^2) and psi^(1-m) Theta = rc^(m-1) exactly.
    Neither psi = Ttilde nor psi = Ttilde^q does this: the former leaves
    Theta_deformed = Ttilde^(2-m) r^(m-1), the latter r^(m-1) in the *base*
    radial coordinate rather than the deformed one.
    """

    def __init__(self, ttilde_t: Callable, m: int, t_max: float,
                 n_grid: int = 1600, name: str = "trivializer"):
        self.ttilde_t = ttilde_t
        self.m = m
        self.q = 1.0 / (m - 1)
        self.t_max = t_max
        self.name = name
        ts = np.linspace(0.0, t_max, n_grid + 1)
        nodes, weights = np.polynomial.legendre.leggauss(10)
        a, b = ts[:-1], ts[1:]
        mid, half = 0.5 * (a + b), 0.5 * (b - a)
        pts = (mid[:, None] + half[:, None] * nodes[None, :]).ravel()
        seg = (self._h_values(pts).reshape(len(a), -1)
               * weights[None, :]).sum(axis=1) * half
        logv = np.concatenate([[0.0], np.cumsum(seg)])
        self._logV = CubicHermiteSpline(ts, logv, self._h_values(ts))

    # -- pieces -----------------------------------------------------------
    def _ttilde_series(self, t0, order: int) -> TruncatedSeries:
        return self.ttilde_t(_seed_series(t0, order))

    def _h_series_at0(self, order: int):
        """Maclaurin coefficients of h(t) = (Ttilde^-q - 1)/(2t)."""
        tt = self._ttilde_series(0.0, order + 1)
        top = jets.powf(tt, -self.q) - 1.0
        return [0.5 * np.asarray(c) for c in top.unshift(1).coeffs[: order + 1]]

    def _h_series(self, t0, order: int) -> TruncatedSeries:
        t0 = np.asarray(t0, dtype=float)
        small = t0 < 1e-4
        if not np.any(small):
            tt = self._ttilde_series(t0, order)
            top = jets.powf(tt, -self.q) - 1.0
            return top / (2.0 * _seed_series(t0, order))
        near = TruncatedSeries(_recenter_poly(
            self._h_series_at0(order + 4), np.where(small, t0, 0.0))[: order + 1])
        if np.all(small):
            return near
        far = self._h_series(np.where(small, 1.0, t0), order)
        merged = [np.where(small, np.asarray(n) + 0.0 * t0, np.asarray(f))
                  for n, f in zip(near.coeffs, far.coeffs)]
        return TruncatedSeries(merged)

    def _h_values(self, t):
        t = np.asarray(t, dtype=float)
        scalar = t.ndim == 0
        t = np.atleast_1d(t)
        out = np.empty_like(t)
        small = t < 1e-5
        if np.any(~small):
            tt = np.asarray(self._ttilde_series(t[~small], 0).coeffs[0])
            out[~small] = (tt ** -self.q - 1.0) / (2.0 * t[~small])
        if np.any(small):
            coeffs = self._h_series_at0(4)
            acc = np.zeros_like(t[small])
            for c in reversed(coeffs):
                acc = acc * t[small] + c
            out[small] = acc
        return out[0] if scalar else out

    def V(self, t):
        return np.exp(self._logV(np.asarray(t, dtype=float)))

    # -- the radial function ------------------------------------------------
    def series(self, t0, order: int) -> TruncatedSeries:
        t0 = np.asarray(t0, dtype=float)
        num = jets.powf(self._ttilde_series(t0, order), self.q)
        v0 = self.V(t0) * np.ones_like(t0)
        if order == 0:
            return TruncatedSeries([np.asarray(num.coeffs[0]) / v0])
        h = self._h_series(t0, order - 1)
        vcoef = [v0]
        for k in range(order):
            acc = 0.0
            for j in range(k + 1):
                acc = acc + vcoef[j] * h.coeffs[k - j]
            vcoef.append(acc / (k + 1))
        return num * TruncatedSeries(vcoef).reciprocal()


def trivial_density_factor(profile, m: int, t_max: Optional[float] = None,
                           spread_tolerance: float = 1e-6) -> RadialFunction:
    """Conformal factor making the deformed density exactly trivial.

    ``profile`` may be a DensityProfile from the geodesic engine (checked
    for radiality, then interpolated), a (radii, theta_values) pair, or a
    callable giving the reduced density Ttilde as a function of t = r^2
    acting on truncated series (exact derivatives; preferred when the
    deformed chart will be re-shot).
    """
    if callable(profile):
        if t_max is None:
            raise ValueError("t_max required with a callable reduced density")
        return TrivializerRadialFunction(profile, m, t_max)
    if isinstance(profile, DensityProfile):
        if not profile_is_radial(profile, spread_tolerance):
            raise NonRadialProfileError(
                "refusing to trivialize a non-radial base profile")
        radii = profile.radii
        theta = profile.mean_theta()
    else:
        radii, theta = profile
        radii = np.asarray(radii, dtype=float)
        theta = np.asarray(theta, dtype=float)
        if theta.ndim == 2:
            spread = (theta.max(axis=1) - theta.min(axis=1)) / theta.mean(axis=1)
            if spread.max() > spread_tolerance:
                raise NonRadialProfileError(
                    "refusing to trivialize a non-radial base profile")
            theta = theta.mean(axis=1)
    ttilde = theta / radii ** (m - 1)
    interp = PchipInterpolator(np.concatenate([[0.0], radii ** 2]),
                               np.concatenate([[1.0], ttilde]))
    ders = [interp.derivative(k) for k in (1, 2, 3)]

    def ttilde_t(ts):
        if isinstance(ts, TruncatedSeries):
            t0 = np.asarray(ts.coeffs[0], dtype=float)
            # the monotone-cubic interpolant carries three honest
            # derivatives; higher orders enter only through terms that are
            # negligible at the small t0 where they are requested
            derivs = [interp(t0)] + [d(t0) for d in ders[: min(ts.order, 3)]]
            derivs += [np.zeros_like(t0)] * (ts.order + 1 - len(derivs))
            return ts.apply_analytic(derivs)
        return interp(ts)

    return TrivializerRadialFunction(
        ttilde_t, m,
        t_max=float(np.max(radii) ** 2) if t_max is None else t_max,
        name="trivializer_profile")


# ---------------------------------------------------------------------------
# completeness and Ricci blow-up near the cut locus
# ---------------------------------------------------------------------------

@dataclass
class BlowupReport:
    """Diagnostics of the complex-projective trivial-density deformation."""

    m: int
    variant: str                 # "density-root" or "trivializer"
    exponent: float              # p in rho ~ c u^-p
    coefficient: float           # c (negative)
    fit_residual: float
    psi_exponent: float          # q in psi ~ a u^q near the cut locus
    psi_scale: float             # a
    length: float                # int_0^(pi/2) psi^-1 du
    length_finite: bool
    u_window: tuple
    samples: list

    def to_json_dict(self) -> dict:
        return {
            "m": self.m, "variant": self.variant,
            "exponent": self.exponent, "coefficient": self.coefficient,
            "fit_residual": self.fit_residual,
            "psi_exponent": self.psi_exponent, "psi_scale": self.psi_scale,
            "length": self.length, "length_finite": self.length_finite,
            "u_window": list(self.u_window), "samples": self.samples,
        }


def _u_series(u0, order: int) -> TruncatedSeries:
    return _seed_series(float(u0), order)


def _fs_theta_u_series(u0, m: int, order: int) -> TruncatedSeries:
    """Projective-space density as a function of u = pi/2 - r:
    Theta = cos(u)^(m-1) sin(u), well conditioned near u = 0."""
    u = _u_series(u0, order)
    return jets.cos(u) ** (m - 1) * jets.sin(u)


class _DensityRootPsiU:
    """The (m-1)-th root of the reduced density, as a function of u."""

    def __init__(self, m: int):
        self.m = m
        self.q = 1.0 / (m - 1)

    def series(self, u0, order: int) -> TruncatedSeries:
        u = _u_series(u0, order)
        r = math.pi / 2 - u
        return jets.cos(u) / r * jets.powf(jets.sin(u), self.q)

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        return np.cos(u) / (math.pi / 2 - u) * np.sin(u) ** self.q


class _TrivializerPsiU:
    """The exact trivializer as a function of u, built in u-space.

    psi(u) = Theta(u)^q / W(u) where dW/du = -W Theta^(-q) and
    W ~ (pi/2 - u) at the center; log(W/(pi/2 - u)) is accumulated on a
    grid geometric in u near the cut locus, where the integrand behaves
    like u^(-q).
    """

    def __init__(self, m: int, u_min: float = 1e-10):
        self.m = m
        self.q = 1.0 / (m - 1)
        self.u_min = u_min
        # omega(u) = d/du log V, V = W/(pi/2 - u):
        # dW/du = -W Theta^(-q)  and  d(pi/2 - u)/du = -1 give
        # omega = 1/(pi/2 - u) - Theta(u)^(-q)
        lin = np.linspace(math.pi / 2, 0.05, 900)
        geo = np.geomspace(0.05, u_min, 900)
        self._u_knots = np.concatenate([lin, geo[1:]])
        om = self._omega(self._u_knots)
        nodes, weights = np.polynomial.legendre.leggauss(10)
        a, b = self._u_knots[:-1], self._u_knots[1:]
        mid, half = 0.5 * (a + b), 0.5 * (b - a)
        pts = (mid[:, None] + half[:, None] * nodes[None, :]).ravel()
        seg = (self._omega(pts).reshape(len(a), -1)
               * weights[None, :]).sum(axis=1) * half
        logv = np.concatenate([[0.0], np.cumsum(seg)])
        # knots run downward in u; store ascending for the spline
        order_idx = np.argsort(self._u_knots)
        self._logV = CubicHermiteSpline(
            self._u_knots[order_idx], logv[order_idx], om[order_idx])

    def _theta(self, u):
        u = np.asarray(u, dtype=float)
        return np.cos(u) ** (self.m - 1) * np.sin(u)

    def _omega(self, u):
        """d/du log(W/(pi/2 - u)) = (1 - Ttilde(r)^-q)/r, r = pi/2 - u."""
        u = np.asarray(u, dtype=float)
        r = math.pi / 2 - u
        out = np.empty_like(r)
        small = r < 1e-3
        rs = r[~small]
        ttil = (np.sin(rs) / rs) ** (self.m - 1) * np.cos(rs)
        out[~small] = (1.0 - ttil ** -self.q) / rs
        # Ttilde = 1 - (m+2)/6 r^2 + O(r^4) near the center
        out[small] = -self.q * (self.m + 2) / 6.0 * r[small]
        return out

    def W(self, u):
        u = np.asarray(u, dtype=float)
        return (math.pi / 2 - u) * np.exp(self._logV(u))

    def series(self, u0, order: int) -> TruncatedSeries:
        theta = _fs_theta_u_series(u0, self.m, order)
        num = jets.powf(theta, self.q)
        rate = jets.powf(_fs_theta_u_series(u0, self.m, max(order - 1, 0)),
                         -self.q) * (-1.0)
        w = [float(self.W(u0))]
        for k in range(order):
            acc = 0.0
            for j in range(k + 1):
                acc = acc + w[j] * rate.coeffs[k - j]
            w.append(acc / (k + 1))
        return num * TruncatedSeries(w).reciprocal()

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        return self._theta(u) ** self.q / self.W(u)


def deformed_radial_ricci(psi_u, theta_u_series, u: float, m: int,
                          einstein_const: float) -> float:
    """rho_{g_psi}(psi d_u, psi d_u) by the radial conformal-change law:

        einstein_const psi^2 + (m-2) psi psi''
        + psi (Theta psi')'/Theta - (m-1) psi'^2,

    all derivatives in u; series arithmetic, no finite differences.
    """
    ps = psi_u.series(u, 3)
    th = theta_u_series(u, 3)
    psi0 = float(ps.coeffs[0])
    psid = float(ps.coeffs[1])
    psidd = 2.0 * float(ps.coeffs[2])
    flux = TruncatedSeries(th.coeffs[:3]) * ps.derive()   # Theta psi', order 2
    flux_d = float(flux.derive().coeffs[0])
    return (einstein_const * psi0 ** 2 + (m - 2) * psi0 * psidd
            + psi0 * flux_d / float(th.coeffs[0]) - (m - 1) * psid ** 2)


def completeness_and_blowup(m: int, variant: str = "density-root",
                            u_window=(1e-4, 1e-2), n_fit: int = 25
                            ) -> BlowupReport:
    """Geodesic length and Ricci blow-up of the trivial-density build.

    The base is the projective space of real dimension m (even, in
    {4, 6, 8}) with sec in [1, 4]; psi is expressed as a function of
    u = pi/2 - r near the cut locus.  Reports (i) int psi^-1 du with a
    finiteness verdict from local exponent detection psi ~ a u^q, and
    (ii) the log-log fit rho_{g_psi}(psi d_u, psi d_u) ~ c u^-p over the
    u-window.
    """
    if m not in (4, 6, 8):
        raise ValueError("blow-up diagnostics support m in {4, 6, 8}")
    if variant == "density-root":
        psi_u = _DensityRootPsiU(m)
    elif variant == "trivializer":
        psi_u = _TrivializerPsiU(m)
    else:
        raise ValueError("variant must be 'density-root' or 'trivializer'")

    einstein_const = m + 2.0   # rho = (m+2) g under the sec in [1,4] scaling

    def theta_series(u0, order):
        return _fs_theta_u_series(u0, m, order)

    us = np.geomspace(u_window[0], u_window[1], n_fit)
    rho = np.array([deformed_radial_ricci(psi_u, theta_series, float(u), m,
                                          einstein_const) for u in us])
    if np.any(rho >= 0):
        raise ValueError("expected negative radial Ricci in the fit window")
    design = np.stack([np.ones_like(us), np.log(us)], axis=1)
    sol, *_ = np.linalg.lstsq(design, np.log(-rho), rcond=None)
    coefficient = -math.exp(sol[0])
    exponent = -float(sol[1])
    resid = float(np.max(np.abs(design @ sol - np.log(-rho))))

    u1, u2 = 1e-7, 1e-6
    p1, p2 = float(psi_u(u1)), float(psi_u(u2))
    q_est = math.log(p2 / p1) / math.log(u2 / u1)
    a_est = p1 / u1 ** q_est
    finite = q_est < 1.0
    delta = 1e-4
    tail, _ = quad(lambda u: 1.0 / float(psi_u(np.asarray(u))), delta,
                   math.pi / 2 - 1e-9, limit=400)
    head = delta ** (1 - q_est) / (a_est * (1 - q_est)) if finite else math.inf
    return BlowupReport(
        m=m, variant=variant, exponent=exponent,
        coefficient=float(coefficient), fit_residual=resid,
        psi_exponent=float(q_est), psi_scale=float(a_est),
        length=float(head + tail), length_finite=finite,
        u_window=tuple(u_window),
        samples=[{"u": float(u), "ricci": float(r)} for u, r in zip(us, rho)])
