"""Taylor-mode forward differentiation on truncated multivariate polynomials.

A ``MultiJet`` is a truncated Taylor expansion in ``nvars`` variables about a
base point, carrying every mixed partial derivative up to a total ``order``.
Metric components, conformal factors and scalar fields are written once as
plain Python formulas; evaluating them on seeded jets yields all derivatives
needed by the curvature machinery.  Coefficient arrays may carry an extra
batch axis so that one evaluation serves many base points (used heavily by
the geodesic integrator).

Analytic functions (sqrt, sin, atan, ...) act on jets through truncated
composition with the univariate Taylor expansion at the constant term; the
same helpers also accept plain floats and numpy arrays so oracle code can
reuse the formulas verbatim.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

from .conventions import MAX_JET_ORDER


@lru_cache(maxsize=None)
def _indices(nvars: int, order: int):
    """Multi-indices of total degree <= order in graded-lex order."""
    by_degree = [[(0,) * nvars]]
    for _ in range(order):
        nxt = []
        seen = set()
        for alpha in by_degree[-1]:
            for k in range(nvars):
                beta = alpha[:k] + (alpha[k] + 1,) + alpha[k + 1:]
                if beta not in seen:
                    seen.add(beta)
                    nxt.append(beta)
        nxt.sort()
        by_degree.append(nxt)
    flat = [a for group in by_degree for a in group]
    return tuple(flat), {a: i for i, a in enumerate(flat)}


@lru_cache(maxsize=None)
def _mul_table(nvars: int, order: int):
    """(ia, ib, starts) for product accumulation via add.reduceat."""
    idx, pos = _indices(nvars, order)
    pairs = []
    for ia, a in enumerate(idx):
        da = sum(a)
        for ib, b in enumerate(idx):
            if da + sum(b) > order:
                continue
            out = pos[tuple(x + y for x, y in zip(a, b))]
            pairs.append((out, ia, ib))
    pairs.sort()
    out_idx = np.array([p[0] for p in pairs])
    ia = np.array([p[1] for p in pairs])
    ib = np.array([p[2] for p in pairs])
    # every output index occurs (alpha + 0 = alpha), so segments are dense
    starts = np.searchsorted(out_idx, np.arange(len(idx)))
    return ia, ib, starts


@lru_cache(maxsize=None)
def _partial_table(nvars: int, order: int, k: int):
    """(src, dst, scale) implementing d/dx_k inside the same space."""
    idx, pos = _indices(nvars, order)
    src, dst, scale = [], [], []
    for a in idx:
        if sum(a) == 0 or a[k] == 0:
            continue
        b = a[:k] + (a[k] - 1,) + a[k + 1:]
        src.append(pos[a])
        dst.append(pos[b])
        scale.append(a[k])
    return np.array(src), np.array(dst), np.array(scale, dtype=float)


@lru_cache(maxsize=None)
def _extraction_table(nvars: int, order: int, d: int):
    """Positions and factorials mapping coefficients to d-th partials.

    Returns (flat_pos, fact) of length nvars**d: the array of all partial
    derivatives d_{p1} ... d_{pd} f is coef[flat_pos] * fact reshaped to
    (nvars,)*d.
    """
    _, pos = _indices(nvars, order)
    shape = (nvars,) * d
    flat_pos = np.empty(nvars ** d, dtype=int)
    fact = np.empty(nvars ** d)
    for flat, ptuple in enumerate(np.ndindex(shape) if d else [()]):
        alpha = [0] * nvars
        for p in ptuple:
            alpha[p] += 1
        flat_pos[flat] = pos[tuple(alpha)]
        fact[flat] = math.prod(math.factorial(a) for a in alpha)
    return flat_pos, fact


class JetSpace:
    """Shared truncation data for jets in ``nvars`` variables of ``order``."""

    def __init__(self, nvars: int, order: int):
        if not 0 <= order <= MAX_JET_ORDER:
            raise ValueError(f"jet order {order} outside [0, {MAX_JET_ORDER}]")
        self.nvars = nvars
        self.order = order
        self.index_list, self.index_of = _indices(nvars, order)
        self.size = len(self.index_list)

    def __repr__(self):
        return f"JetSpace(nvars={self.nvars}, order={self.order})"


@lru_cache(maxsize=None)
def jet_space(nvars: int, order: int) -> JetSpace:
    return JetSpace(nvars, order)


class MultiJet:
    __slots__ = ("space", "coef")

    def __init__(self, space: JetSpace, coef: np.ndarray):
        self.space = space
        self.coef = coef

    # -- constructors -------------------------------------------------
    @staticmethod
    def constant(space: JetSpace, value, batch_shape=()):
        coef = np.zeros((space.size,) + batch_shape,
                        dtype=np.result_type(np.asarray(value), np.float64))
        coef[0] = value
        return MultiJet(space, coef)

    @staticmethod
    def variable(space: JetSpace, k: int, value, batch_shape=()):
        jet = MultiJet.constant(space, value, batch_shape)
        if space.order >= 1:
            e_k = tuple(1 if i == k else 0 for i in range(space.nvars))
            jet.coef[space.index_of[e_k]] = 1.0
        return jet

    # -- basic queries ------------------------------------------------
    @property
    def value(self):
        return self.coef[0]

    def const_value(self):
        return self.coef[0]

    @property
    def batch_shape(self):
        return self.coef.shape[1:]

    def derivative_array(self, d: int):
        """All order-d partials as an array of shape (nvars,)*d + batch."""
        if d > self.space.order:
            raise ValueError("derivative order exceeds jet order")
        flat_pos, fact = _extraction_table(self.space.nvars, self.space.order, d)
        out = self.coef[flat_pos]
        out = out * fact.reshape((-1,) + (1,) * len(self.batch_shape))
        return out.reshape((self.space.nvars,) * d + self.batch_shape)

    # -- ring operations ----------------------------------------------
    def _coerce(self, other):
        if isinstance(other, MultiJet):
            if other.space is not self.space:
                raise ValueError("jets from different spaces")
            return other
        return None

    def __add__(self, other):
        o = self._coerce(other)
        if o is not None:
            return MultiJet(self.space, self.coef + o.coef)
        other = np.asarray(other)
        coef = self.coef.astype(np.result_type(self.coef, other), copy=True)
        coef[0] = coef[0] + other
        return MultiJet(self.space, coef)

    __radd__ = __add__

    def __neg__(self):
        return MultiJet(self.space, -self.coef)

    def __sub__(self, other):
        return self + (-other if isinstance(other, MultiJet) else -np.asarray(other))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        o = self._coerce(other)
        if o is None:
            return MultiJet(self.space, self.coef * other)
        ia, ib, starts = _mul_table(self.space.nvars, self.space.order)
        prod = self.coef[ia] * o.coef[ib]
        return MultiJet(self.space, np.add.reduceat(prod, starts, axis=0))

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is None:
            return MultiJet(self.space, self.coef / other)
        return self * o.reciprocal()

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def __pow__(self, n):
        if not isinstance(n, int):
            raise TypeError("use powf() for non-integer exponents")
        if n < 0:
            return self.reciprocal() ** (-n)
        result = MultiJet.constant(self.space, 1.0, self.batch_shape)
        base = self
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result

    def partial(self, k: int) -> "MultiJet":
        """d/dx_k as a jet in the same space (top-degree terms become zero)."""
        src, dst, scale = _partial_table(self.space.nvars, self.space.order, k)
        coef = np.zeros_like(self.coef)
        if len(src):
            coef[dst] = self.coef[src] * scale.reshape(
                (-1,) + (1,) * len(self.batch_shape))
        return MultiJet(self.space, coef)

    # -- analytic composition ------------------------------------------
    def apply_analytic(self, derivs):
        """Compose with a univariate function given f^(k)(c0), k = 0..order."""
        order = self.space.order
        du = MultiJet(self.space, self.coef.copy())
        du.coef[0] = np.zeros_like(du.coef[0])
        ck = [derivs[k] / math.factorial(k) for k in range(min(len(derivs), order + 1))]
        result = MultiJet.constant(self.space, 0.0, self.batch_shape)
        result = result + ck[-1]
        for k in range(len(ck) - 2, -1, -1):
            result = result * du + ck[k]
        return result

    def reciprocal(self):
        u0 = np.asarray(self.coef[0])
        if np.any(u0 == 0):
            raise ZeroDivisionError("reciprocal of jet with zero constant term")
        derivs = [1.0 / u0]
        for k in range(1, self.space.order + 1):
            derivs.append(-k * derivs[-1] / u0)
        return self.apply_analytic(derivs)

    def real(self):
        return MultiJet(self.space, np.real(self.coef))

    def conj(self):
        return MultiJet(self.space, np.conj(self.coef))

    def __repr__(self):
        return f"MultiJet(order={self.space.order}, value={self.value})"


def seed_point(x, order: int):
    """Seed coordinate jets at x (shape (m,) or (B, m)); returns list of jets."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        space = jet_space(x.shape[0], order)
        return [MultiJet.variable(space, k, x[k]) for k in range(x.shape[0])]
    space = jet_space(x.shape[-1], order)
    batch = x.shape[:-1]
    return [MultiJet.variable(space, k, x[..., k], batch) for k in range(x.shape[-1])]


# ---------------------------------------------------------------------------
# analytic function helpers, usable on MultiJet / TruncatedSeries / ndarray
# ---------------------------------------------------------------------------

def _is_jetlike(x):
    return hasattr(x, "apply_analytic")


def _order_of(x):
    return x.space.order if isinstance(x, MultiJet) else x.order


def sqrt(x):
    if not _is_jetlike(x):
        return np.sqrt(x)
    u0 = np.asarray(x.const_value())
    if np.any(u0 <= 0):
        raise ValueError("sqrt of jet requires positive constant term")
    derivs = [np.sqrt(u0)]
    for k in range(1, _order_of(x) + 1):
        derivs.append(derivs[-1] * (0.5 - (k - 1)) / u0)
    return x.apply_analytic(derivs)


def powf(x, alpha: float):
    """x**alpha for non-integer alpha (constant term must be positive)."""
    if not _is_jetlike(x):
        return np.power(x, alpha)
    u0 = np.asarray(x.const_value())
    if np.any(u0 <= 0):
        raise ValueError("powf requires positive constant term")
    derivs = [np.power(u0, alpha)]
    for k in range(1, _order_of(x) + 1):
        derivs.append(derivs[-1] * (alpha - (k - 1)) / u0)
    return x.apply_analytic(derivs)


def exp(x):
    if not _is_jetlike(x):
        return np.exp(x)
    e0 = np.exp(np.asarray(x.const_value()))
    return x.apply_analytic([e0] * (_order_of(x) + 1))


def log(x):
    if not _is_jetlike(x):
        return np.log(x)
    u0 = np.asarray(x.const_value())
    derivs = [np.log(u0)]
    for k in range(1, _order_of(x) + 1):
        derivs.append((-1.0) ** (k - 1) * math.factorial(k - 1) / u0 ** k)
    return x.apply_analytic(derivs)


def sin(x):
    if not _is_jetlike(x):
        return np.sin(x)
    u0 = np.asarray(x.const_value())
    s, c = np.sin(u0), np.cos(u0)
    cycle = [s, c, -s, -c]
    return x.apply_analytic([cycle[k % 4] for k in range(_order_of(x) + 1)])


def cos(x):
    if not _is_jetlike(x):
        return np.cos(x)
    u0 = np.asarray(x.const_value())
    s, c = np.sin(u0), np.cos(u0)
    cycle = [c, -s, -c, s]
    return x.apply_analytic([cycle[k % 4] for k in range(_order_of(x) + 1)])


def atan(x):
    if not _is_jetlike(x):
        return np.arctan(x)
    u0 = np.asarray(x.const_value())
    order = _order_of(x)
    # Taylor coefficients of atan(u0 + h): integrate 1/(1 + (u0+h)^2),
    # whose h-series is the reciprocal of (1+u0^2) + 2 u0 h + h^2.
    denom = [1.0 + u0 ** 2, 2.0 * u0, np.ones_like(u0)]
    recip = [1.0 / denom[0]]
    for k in range(1, order):
        acc = 0.0
        for j in range(1, min(k, 2) + 1):
            acc = acc + denom[j] * recip[k - j]
        recip.append(-acc / denom[0])
    coeffs = [np.arctan(u0)] + [recip[k - 1] / k for k in range(1, order + 1)]
    derivs = [coeffs[k] * math.factorial(k) for k in range(order + 1)]
    return x.apply_analytic(derivs)


def _entire_apply(x, coef_fn, n_extra=40):
    """Apply an entire function of t given its Maclaurin coefficients.

    coef_fn(k) -> k-th Taylor coefficient at 0.  Derivatives at the jet's
    constant term are obtained by term-wise differentiation of the series;
    usable whenever the series converges comfortably there (all uses here
    have |t| bounded by ~pi^2).
    """
    if not _is_jetlike(x):
        t = np.asarray(x, dtype=float)
        n = n_extra + 15
        return sum(coef_fn(k) * t ** k for k in range(n))
    order = _order_of(x)
    t0 = np.asarray(x.const_value(), dtype=float)
    n = order + 1 + n_extra
    derivs = []
    for d in range(order + 1):
        # Horner for sum_{k>=d} c_k k!/(k-d)! t0^(k-d), highest power first
        acc = np.zeros_like(t0)
        for k in range(n - 1, d - 1, -1):
            acc = acc * t0 + coef_fn(k) * math.factorial(k) / math.factorial(k - d)
        derivs.append(acc)
    return x.apply_analytic(derivs)


def cos_sqrt(x):
    """cos(sqrt(t)) as an entire function of t."""
    return _entire_apply(x, lambda k: (-1.0) ** k / math.factorial(2 * k))


def sinc_sqrt(x):
    """sin(sqrt(t))/sqrt(t) as an entire function of t."""
    return _entire_apply(x, lambda k: (-1.0) ** k / math.factorial(2 * k + 1))


def sin_sq_sqrt_over_t(x):
    """sin^2(sqrt(t))/t as an entire function of t."""
    return _entire_apply(
        x, lambda k: (-1.0) ** k * 2.0 ** (2 * k + 1) / math.factorial(2 * k + 2))


def t_minus_sinsq_over_t2(x):
    """(t - sin^2 sqrt(t)) / t^2 as an entire function of t."""
    return _entire_apply(
        x, lambda k: (-1.0) ** k * 2.0 ** (2 * k + 3) / math.factorial(2 * k + 4))


@lru_cache(maxsize=None)
def _atan_sqrt_sq_coeffs(n: int):
    """Maclaurin coefficients of atan(sqrt(t))^2 / 1, radius of convergence 1."""
    # atan(sqrt t)/sqrt t = sum (-1)^k t^k/(2k+1); square then shift by t.
    a = [(-1.0) ** k / (2 * k + 1) for k in range(n + 1)]
    sq = [sum(a[j] * a[k - j] for j in range(k + 1)) for k in range(n + 1)]
    return tuple([0.0] + sq[:n])


def atan_sqrt_sq(x):
    """atan(sqrt(t))^2; series route near 0, smooth composition elsewhere."""
    if not _is_jetlike(x):
        return np.arctan(np.sqrt(x)) ** 2
    t0 = float(np.min(np.asarray(x.const_value())))
    if t0 < 0.5:
        coeffs = _atan_sqrt_sq_coeffs(_order_of(x) + 45)
        return _entire_apply(x, lambda k: coeffs[k] if k < len(coeffs) else 0.0)
    return atan(sqrt(x)) ** 2


def norm_sq(xjets):
    """Sum of squares of a sequence of jets (or numbers)."""
    total = xjets[0] * xjets[0]
    for xi in xjets[1:]:
        total = total + xi * xi
    return total
