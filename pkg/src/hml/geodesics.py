"""Geodesic and Jacobi-field integration: densities, shapes, radiality.

The workhorse integrates, jointly and batched over directions,

    x'' + Gamma(x', x') = 0                 (geodesic),
    E'_a + Gamma(x', E_a) = 0               (parallel frame),
    A'' + Rtilde(r) A = 0,  A(0) = 0, A'(0) = Id   (normal Jacobi fields),

where Rtilde_ab = R(E_a, x', x', E_b) is the reduced Jacobi operator in the
parallel frame.  The volume density is Theta = det A and the geodesic-sphere
mean curvature is Xi = Tr(A' A^{-1}).  The system is regular at r = 0 in
this linear form, so integration starts at the center exactly.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.special import ndtri

from .curvature import curvature, curvature_arrays, einstein_defect
from .metric import ChartMetric, DomainError


class DomainExitError(DomainError):
    """A trajectory left the chart; ``last_r`` is the last valid radius."""

    def __init__(self, last_r: float):
        super().__init__(f"geodesic left the chart domain after r = {last_r:.6g}")
        self.last_r = last_r


class ConjugatePointError(ValueError):
    pass


class NonRadialProfileError(ValueError):
    pass


# ---------------------------------------------------------------------------
# deterministic direction sampling
# ---------------------------------------------------------------------------

def unit_directions(m: int, n: int) -> np.ndarray:
    """n deterministic low-discrepancy Euclidean-unit directions on S^(m-1).

    Kronecker sequence with the generalized golden ratio, pushed through
    the inverse normal CDF; seedless and reproducible by construction.
    """
    phi = 2.0
    for _ in range(60):
        phi = (1 + phi) ** (1 / (m + 1))
    alpha = np.array([phi ** -(k + 1) for k in range(m)])
    u = (0.5 + np.outer(np.arange(1, n + 1), alpha)) % 1.0
    z = ndtri(np.clip(u, 1e-12, 1 - 1e-12))
    norms = np.linalg.norm(z, axis=1)
    if np.any(norms < 1e-8):  # essentially impossible; keep determinism
        bad = norms < 1e-8
        z[bad] = np.eye(m)[0]
        norms = np.linalg.norm(z, axis=1)
    return z / norms[:, None]


def g_unit_directions(metric: ChartMetric, P, n: int) -> np.ndarray:
    """Directions of g-norm 1 at P, distributed round in the g sense."""
    g0 = metric.value(np.asarray(P, dtype=float))
    L = np.linalg.cholesky(g0)
    u = unit_directions(metric.dim, n)
    return np.linalg.solve(L.T, u.T).T


def parallel_frame_start(g0: np.ndarray, theta: np.ndarray) -> np.ndarray:
    """g0-orthonormal basis of theta-perp, deterministic; shape (m, m-1)."""
    m = len(theta)
    vecs = [np.asarray(theta, dtype=float)]
    for e in np.eye(m):
        w = e.copy()
        for b in vecs:
            w = w - (w @ g0 @ b) * b
        nw = math.sqrt(max(w @ g0 @ w, 0.0))
        if nw > 1e-10:
            vecs.append(w / nw)
        if len(vecs) == m:
            break
    if len(vecs) < m:
        raise ValueError("failed to complete parallel frame")
    return np.stack(vecs[1:], axis=1)


# ---------------------------------------------------------------------------
# integration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ShootConfig:
    steps: int = 2000          # fixed RK4 substeps over the full radius
    method: str = "rk4"        # "rk4" | "rk45"
    abs_tol: float = 1e-10     # rk45 controls
    rel_tol: float = 1e-9
    check_domain: bool = True


def _rhs(metric: ChartMetric, state):
    x, v, E, A, Ad = state
    _, _, Gamma, R = curvature_arrays(metric, x)
    dv = -np.einsum('...ijk,...i,...j->...k', Gamma, v, v)
    dE = -np.einsum('...ijk,...i,...ja->...ka', Gamma, v, E)
    Rt = np.einsum('...ijkl,...ia,...j,...k,...lc->...ac', R, E, v, v, E)
    return (v, dv, dE, Ad, -Rt @ A)


class _ConjugateTracker:
    """Latch conjugate-point crossings of det A along the integration.

    det A <= 0 catches odd-multiplicity zeros; collapses of det A to a tiny
    fraction of its running maximum catch the even-multiplicity crossings a
    pointwise sign test cannot see.
    """

    DIP = 1e-4

    def __init__(self, batch: int):
        self.max_det = np.zeros(batch)
        self.latched = np.zeros(batch, dtype=bool)

    def update(self, A):
        det = np.linalg.det(A)
        self.latched |= (det <= 0) | (det < self.DIP * self.max_det)
        self.max_det = np.maximum(self.max_det, det)


def _rk4_segment(metric, state, length, nsteps, check_domain, r_start,
                 tracker=None):
    h = length / nsteps
    for i in range(nsteps):
        try:
            k1 = _rhs(metric, state)
            k2 = _rhs(metric, tuple(y + 0.5 * h * k for y, k in zip(state, k1)))
            k3 = _rhs(metric, tuple(y + 0.5 * h * k for y, k in zip(state, k2)))
            k4 = _rhs(metric, tuple(y + h * k for y, k in zip(state, k3)))
        except DomainError as exc:
            raise DomainExitError(r_start + i * h) from exc
        state = tuple(y + (h / 6.0) * (a + 2 * b + 2 * c + d)
                      for y, a, b, c, d in zip(state, k1, k2, k3, k4))
        if check_domain and not np.all(metric.contains(state[0])):
            raise DomainExitError(r_start + i * h)
        if tracker is not None:
            tracker.update(state[3])
    return state


_DP_C = np.array([0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_DP_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_DP_B5 = np.array([35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0])
_DP_B4 = np.array([5179 / 57600, 0, 7571 / 16695, 393 / 640,
                   -92097 / 339200, 187 / 2100, 1 / 40])


def _rk45_segment(metric, state, length, cfg: ShootConfig, r_start,
                  tracker=None):
    """Adaptive Dormand-Prince 5(4) over one segment."""
    t, t_end = 0.0, length
    h = length / 50.0
    while t < t_end - 1e-15 * length:
        h = min(h, t_end - t)
        ks = []
        try:
            for s in range(7):
                ys = state
                if s:
                    ys = tuple(
                        y + h * sum(_DP_A[s][j] * k[i] for j, k in enumerate(ks))
                        for i, y in enumerate(state))
                ks.append(_rhs(metric, ys))
        except DomainError as exc:
            raise DomainExitError(r_start + t) from exc
        y5 = tuple(y + h * sum(_DP_B5[j] * ks[j][i] for j in range(7))
                   for i, y in enumerate(state))
        y4 = tuple(y + h * sum(_DP_B4[j] * ks[j][i] for j in range(7))
                   for i, y in enumerate(state))
        err = 0.0
        for a, b, y in zip(y5, y4, state):
            scale = cfg.abs_tol + cfg.rel_tol * np.maximum(np.abs(y), np.abs(a))
            err = max(err, float(np.max(np.abs(a - b) / scale)))
        if err <= 1.0:
            t += h
            state = y5
            if cfg.check_domain and not np.all(metric.contains(state[0])):
                raise DomainExitError(r_start + t)
            if tracker is not None:
                tracker.update(state[3])
        h *= min(5.0, max(0.2, 0.9 * (max(err, 1e-16)) ** -0.2))
    return state


def _initial_state(metric: ChartMetric, P, thetas):
    P = np.asarray(P, dtype=float)
    thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
    B, m = thetas.shape
    g0 = metric.value(P)
    x = np.tile(P, (B, 1))
    E = np.stack([parallel_frame_start(g0, th) for th in thetas])
    A = np.zeros((B, m - 1, m - 1))
    Ad = np.tile(np.eye(m - 1), (B, 1, 1))
    return (x, thetas.copy(), E, A, Ad)


def _integrate_recording(metric, P, thetas, radii, cfg: ShootConfig):
    """March through sorted radii, yielding (r, state, crossed) at each."""
    radii = np.asarray(radii, dtype=float)
    if np.any(radii <= 0) or np.any(np.diff(radii) <= 0):
        raise ValueError("record radii must be positive and increasing")
    state = _initial_state(metric, P, thetas)
    tracker = _ConjugateTracker(state[0].shape[0])
    total = radii[-1]
    r_prev = 0.0
    for r in radii:
        seg = r - r_prev
        if cfg.method == "rk4":
            n = max(1, int(round(cfg.steps * seg / total)))
            state = _rk4_segment(metric, state, seg, n, cfg.check_domain,
                                 r_prev, tracker)
        elif cfg.method == "rk45":
            state = _rk45_segment(metric, state, seg, cfg, r_prev, tracker)
        else:
            raise ValueError(f"unknown integrator {cfg.method!r}")
        r_prev = r
        yield r, state, tracker.latched.copy()


# ---------------------------------------------------------------------------
# samples and profiles
# ---------------------------------------------------------------------------

@dataclass
class PolarDensitySample:
    """One (center, direction, radius) shot: endpoint, frame, density data."""

    center: np.ndarray
    direction: np.ndarray
    radius: float
    endpoint: np.ndarray
    velocity: np.ndarray
    frame: np.ndarray              # (m, m-1), parallel-transported
    A: np.ndarray                  # (m-1, m-1) normal Jacobi matrix
    A_prime: np.ndarray
    theta: float                   # det A
    xi: float                      # Tr(A' A^{-1})
    conjugate: bool
    energy_error: float

    @property
    def reduced_theta(self) -> float:
        m = len(self.center)
        return self.theta / self.radius ** (m - 1)


def _finalize_sample(metric, P, theta_dir, r, state, b, crossed):
    x, v, E, A, Ad = (s[b] for s in state)
    detA = float(np.linalg.det(A))
    conj = detA <= 0 or bool(crossed[b])
    xi = float(np.trace(np.linalg.solve(A, Ad))) if detA > 0 else math.nan
    g = metric.value(x)
    energy = abs(float(v @ g @ v) - 1.0)
    return PolarDensitySample(
        center=np.asarray(P, float), direction=theta_dir, radius=float(r),
        endpoint=x, velocity=v, frame=E, A=A, A_prime=Ad, theta=detA,
        xi=xi, conjugate=conj, energy_error=energy)


def shoot(metric: ChartMetric, P, theta, r: float,
          config: ShootConfig = ShootConfig()) -> PolarDensitySample:
    """Integrate a single geodesic with its Jacobi system out to radius r."""
    theta = np.asarray(theta, dtype=float)
    nrm = metric.norm(P, theta)
    if abs(nrm - 1.0) > 1e-8:
        raise ValueError(f"direction must be g-unit at P (|theta|_g = {nrm:.3g})")
    for rr, state, crossed in _integrate_recording(metric, P, theta[None, :],
                                                   [r], config):
        pass
    return _finalize_sample(metric, P, theta, r, state, 0, crossed)


@dataclass
class DensityProfile:
    """Theta and Xi over a (radius, direction) grid about one center."""

    center: np.ndarray
    radii: np.ndarray                  # (R,)
    directions: np.ndarray             # (N, m), g-unit at the center
    theta: np.ndarray                  # (R, N) densities det A
    xi: np.ndarray                     # (R, N)
    umbilicity: np.ndarray             # (R, N) defect of A' A^{-1}
    conjugate: np.ndarray              # (R, N) bool
    energy_error: float
    largest_safe_radius: float

    def theta_spread(self) -> np.ndarray:
        """Relative direction-spread of Theta at each radius."""
        return ((self.theta.max(axis=1) - self.theta.min(axis=1))
                / np.abs(self.theta.mean(axis=1)))

    def xi_spread(self) -> np.ndarray:
        return ((self.xi.max(axis=1) - self.xi.min(axis=1))
                / np.abs(self.xi.mean(axis=1)))

    def mean_theta(self) -> np.ndarray:
        return self.theta.mean(axis=1)


def density_profile(metric: ChartMetric, P, directions, radii,
                    config: ShootConfig = ShootConfig()) -> DensityProfile:
    """Batch of shoot results organized for radiality analysis.

    ``directions`` is either a count (deterministic sampling) or an array
    of g-unit vectors.  Directions are integrated in one vectorized batch;
    set HML_THREADS > 1 to split the batch across worker threads instead.
    """
    P = np.asarray(P, dtype=float)
    if isinstance(directions, (int, np.integer)):
        directions = g_unit_directions(metric, P, int(directions))
    else:
        directions = np.atleast_2d(np.asarray(directions, dtype=float))
    radii = np.asarray(sorted(float(r) for r in radii))

    n_threads = max(1, int(os.environ.get("HML_THREADS", "1")))
    chunks = np.array_split(np.arange(len(directions)), n_threads) \
        if n_threads > 1 else [np.arange(len(directions))]
    chunks = [c for c in chunks if len(c)]

    def run(idx):
        out = []
        for r, state, crossed in _integrate_recording(metric, P, directions[idx],
                                                      radii, config):
            out.append((tuple(np.copy(s) for s in state), crossed))
        return out

    if len(chunks) == 1:
        results = [run(chunks[0])]
    else:
        with ThreadPoolExecutor(max_workers=len(chunks)) as pool:
            results = list(pool.map(run, chunks))

    R, N, m = len(radii), len(directions), metric.dim
    theta = np.empty((R, N))
    xi = np.empty((R, N))
    umb = np.full((R, N), np.nan)
    conj = np.zeros((R, N), dtype=bool)
    energy = 0.0
    eye = np.eye(m - 1)
    for chunk, states in zip(chunks, results):
        for ir, ((x, v, E, A, Ad), crossed) in enumerate(states):
            det = np.linalg.det(A)
            theta[ir, chunk] = det
            bad = (det <= 0) | crossed
            conj[ir, chunk] = bad
            xi_vals = np.full(len(chunk), np.nan)
            umb_vals = np.full(len(chunk), np.nan)
            good = ~bad
            if np.any(good):
                shape_op = np.linalg.solve(
                    np.transpose(A[good], (0, 2, 1)),
                    np.transpose(Ad[good], (0, 2, 1)))
                shape_op = np.transpose(shape_op, (0, 2, 1))  # Ad A^{-1}
                tr = np.trace(shape_op, axis1=1, axis2=2)
                xi_vals[good] = tr
                dev = shape_op - tr[:, None, None] / (m - 1) * eye
                umb_vals[good] = np.linalg.norm(dev, axis=(1, 2))
            xi[ir, chunk] = xi_vals
            umb[ir, chunk] = umb_vals
            g = metric.value(x)
            energy = max(energy, float(np.max(np.abs(
                np.einsum('bi,bij,bj->b', v, g, v) - 1.0))))
    safe = radii[-1]
    if conj.any():
        first_bad = np.argmax(conj.any(axis=1))
        safe = radii[first_bad - 1] if first_bad else 0.0
    return DensityProfile(center=P, radii=radii, directions=directions,
                          theta=theta, xi=xi, umbilicity=umb, conjugate=conj,
                          energy_error=energy, largest_safe_radius=float(safe))


# ---------------------------------------------------------------------------
# harmonicity
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HarmonicityConfig:
    radii: Optional[Sequence[float]] = None   # default: geometric in (0, r_max)
    r_max: float = 0.8
    n_radii: int = 6
    n_directions: int = 16
    tolerance: float = 1e-6        # relative spread separating radial/non-radial
    shoot: ShootConfig = ShootConfig(steps=800)


@dataclass
class HarmonicityReport:
    """Numerical verdict on central harmonicity about one point."""

    center: list
    verdict: bool
    inconclusive: bool
    tolerance: float
    theta_spread_max: float
    xi_spread_max: float
    einstein_defect: float
    radii: list
    theta_spread: list
    xi_spread: list
    n_directions: int
    largest_safe_radius: float
    profile: Optional[DensityProfile] = field(default=None, repr=False)

    def to_json_dict(self) -> dict:
        return {
            "center": list(map(float, self.center)),
            "verdict": bool(self.verdict),
            "inconclusive": bool(self.inconclusive),
            "tolerance": self.tolerance,
            "theta_spread_max": self.theta_spread_max,
            "xi_spread_max": self.xi_spread_max,
            "einstein_defect": self.einstein_defect,
            "radii": list(map(float, self.radii)),
            "theta_spread": list(map(float, self.theta_spread)),
            "xi_spread": list(map(float, self.xi_spread)),
            "n_directions": self.n_directions,
            "largest_safe_radius": self.largest_safe_radius,
        }


def centrally_harmonic_test(metric: ChartMetric, P,
                            config: HarmonicityConfig = HarmonicityConfig()
                            ) -> HarmonicityReport:
    """Radiality of Theta and Xi across directions, plus the Einstein check.

    The verdict is 'harmonic about P' iff both relative spreads stay below
    the tolerance at every probed radius.  Radii that leave the chart or
    cross a conjugate point make the result inconclusive rather than false.
    """
    P = np.asarray(P, dtype=float)
    radii = config.radii
    if radii is None:
        r_max = config.r_max
        iota = metric.injectivity_radius
        if np.allclose(P, 0.0) and iota is not None and math.isfinite(iota):
            r_max = min(r_max, 0.45 * iota)
        radii = np.geomspace(r_max / 4.0, r_max, config.n_radii)
    inconclusive = False
    try:
        profile = density_profile(metric, P, config.n_directions, radii,
                                  config.shoot)
        if profile.conjugate.any():
            inconclusive = True
    except DomainExitError:
        profile = None
        inconclusive = True
    bundle = curvature(metric, P, k_max=0)
    defect = einstein_defect(bundle)
    if inconclusive or profile is None:
        sp_t = sp_x = [math.nan]
        verdict = False
    else:
        sp_t = profile.theta_spread()
        sp_x = profile.xi_spread()
        verdict = bool(max(sp_t.max(), sp_x.max()) <= config.tolerance)
    return HarmonicityReport(
        center=list(P), verdict=verdict, inconclusive=inconclusive,
        tolerance=config.tolerance,
        theta_spread_max=float(np.max(sp_t)), xi_spread_max=float(np.max(sp_x)),
        einstein_defect=defect,
        radii=list(map(float, radii)),
        theta_spread=list(map(float, np.atleast_1d(sp_t))),
        xi_spread=list(map(float, np.atleast_1d(sp_x))),
        n_directions=config.n_directions,
        largest_safe_radius=(profile.largest_safe_radius
                             if profile is not None else 0.0),
        profile=profile)


# ---------------------------------------------------------------------------
# radial harmonic function
# ---------------------------------------------------------------------------

def radial_harmonic(radii, theta_values, spread_tolerance: float = 1e-6):
    """The nonconstant radial harmonic function from a radial profile.

    f(r) = int_{r0}^{r} Theta(s)^{-1} ds, normalized f(r0) = 0 and
    Theta f' = 1, which makes the positive Laplacian of f vanish on
    0 < r < iota_P.  ``theta_values`` may be (R,) or (R, N) across
    directions; a non-radial table is refused.
    """
    from scipy.interpolate import CubicSpline

    radii = np.asarray(radii, dtype=float)
    theta_values = np.asarray(theta_values, dtype=float)
    if theta_values.ndim == 2:
        spread = ((theta_values.max(axis=1) - theta_values.min(axis=1))
                  / np.abs(theta_values.mean(axis=1)))
        if spread.max() > spread_tolerance:
            raise NonRadialProfileError(
                f"profile spread {spread.max():.3e} exceeds "
                f"{spread_tolerance:.1e}; not radial")
        theta_values = theta_values.mean(axis=1)
    if np.any(theta_values <= 0):
        raise ValueError("density must be positive on the profile")
    spline = CubicSpline(radii, 1.0 / theta_values)
    F = spline.antiderivative()
    f = F(radii) - F(radii[0])
    return f, 1.0 / theta_values


# ---------------------------------------------------------------------------
# geodesic-sphere shape
# ---------------------------------------------------------------------------

@dataclass
class SphereShapeSample:
    """Second fundamental form of S_P(r) at one point, in the parallel frame.

    Oriented so Tr L = +Xi (see hml.conventions); the reduced Jacobi
    operator at the endpoint comes with its eigenvalue extremes.
    """

    center: np.ndarray
    direction: np.ndarray
    radius: float
    L: np.ndarray                   # (m-1, m-1) shape operator A' A^{-1}
    umbilicity_defect: float
    xi: float
    jacobi_endpoint_eigs: np.ndarray
    m_min: float
    m_max: float


def second_fundamental_form(metric: ChartMetric, P, theta, r: float,
                            config: ShootConfig = ShootConfig()
                            ) -> SphereShapeSample:
    sample = shoot(metric, P, theta, r, config)
    if sample.conjugate:
        raise ConjugatePointError(
            f"det A <= 0 at r = {r}: conjugate point crossed")
    L = sample.A_prime @ np.linalg.inv(sample.A)
    L = 0.5 * (L + L.T)
    mdim = metric.dim
    defect = float(np.linalg.norm(L - np.trace(L) / (mdim - 1) * np.eye(mdim - 1)))
    _, _, _, R = curvature_arrays(metric, sample.endpoint)
    Rt = np.einsum('ijkl,ia,j,k,lb->ab', R, sample.frame, sample.velocity,
                   sample.velocity, sample.frame)
    eigs = np.linalg.eigvalsh(0.5 * (Rt + Rt.T))
    return SphereShapeSample(
        center=sample.center, direction=sample.direction, radius=r, L=L,
        umbilicity_defect=defect, xi=float(np.trace(L)),
        jacobi_endpoint_eigs=eigs, m_min=float(eigs[0]), m_max=float(eigs[-1]))


def reduced_jacobi_at(metric: ChartMetric, P, xi_dir) -> np.ndarray:
    """J0 restricted to xi-perp in a g-orthonormal frame at P."""
    P = np.asarray(P, dtype=float)
    g0 = metric.value(P)
    theta = np.asarray(xi_dir, dtype=float)
    theta = theta / math.sqrt(theta @ g0 @ theta)
    E = parallel_frame_start(g0, theta)
    _, _, _, R = curvature_arrays(metric, P)
    Rt = np.einsum('ijkl,ia,j,k,lb->ab', R, E, theta, theta, E)
    return 0.5 * (Rt + Rt.T)


def eigen_spread(metric: ChartMetric, P, n_directions: int = 64):
    """s_P: minimum over sampled unit xi of (max - min) eigenvalue of J0~."""
    dirs = g_unit_directions(metric, P, n_directions)
    spreads = []
    for th in dirs:
        eigs = np.linalg.eigvalsh(reduced_jacobi_at(metric, P, th))
        spreads.append(float(eigs[-1] - eigs[0]))
    return min(spreads), np.array(spreads)
