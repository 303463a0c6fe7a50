"""Truncated univariate power series and radial-expansion fitting.

Two coefficient modes are supported: exact ``fractions.Fraction`` (used by
the leading-coefficient verification, where results must be exact rational
identities) and floats (used to fit radial expansions of numerically
sampled volume densities).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational

import numpy as np


class TruncationError(ValueError):
    """Series truncation orders are incompatible or insufficient."""


class TruncatedSeries:
    """Polynomial in one variable truncated at a fixed order N.

    Coefficients c0..cN live in whatever field they are given in; binary
    operations require matching truncation orders.
    """

    __slots__ = ("coeffs",)

    def __init__(self, coeffs):
        self.coeffs = list(coeffs)
        if not self.coeffs:
            raise ValueError("series needs at least the constant coefficient")

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    # -- constructors ---------------------------------------------------
    @staticmethod
    def constant(value, order: int) -> "TruncatedSeries":
        zero = value * 0
        return TruncatedSeries([value] + [zero] * order)

    @staticmethod
    def variable(order: int, at=0.0) -> "TruncatedSeries":
        """Float-mode seed t0 + (t - t0); ``at`` may be a numpy array."""
        if order < 1:
            raise ValueError("a variable needs order >= 1")
        return TruncatedSeries([at, 1.0] + [0.0] * (order - 1))

    def const_value(self):
        return self.coeffs[0]

    def __eq__(self, other):
        return isinstance(other, TruncatedSeries) and self.coeffs == other.coeffs

    def __getitem__(self, k: int):
        return self.coeffs[k]

    def _zero(self):
        return self.coeffs[0] * 0

    def _check(self, other):
        if other.order != self.order:
            raise TruncationError(
                f"truncation mismatch: {self.order} vs {other.order}")

    # -- ring operations --------------------------------------------------
    def __add__(self, other):
        if isinstance(other, TruncatedSeries):
            self._check(other)
            return TruncatedSeries([a + b for a, b in zip(self.coeffs, other.coeffs)])
        c = list(self.coeffs)
        c[0] = c[0] + other
        return TruncatedSeries(c)

    __radd__ = __add__

    def __neg__(self):
        return TruncatedSeries([-a for a in self.coeffs])

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, TruncatedSeries):
            return TruncatedSeries([a * other for a in self.coeffs])
        self._check(other)
        n = self.order
        out = [self._zero() for _ in range(n + 1)]
        for i, a in enumerate(self.coeffs):
            if not isinstance(a, np.ndarray) and a == 0:
                continue
            for j in range(n + 1 - i):
                out[i + j] = out[i + j] + a * other.coeffs[j]
        return TruncatedSeries(out)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, TruncatedSeries):
            return self * other.reciprocal()
        return TruncatedSeries([a / other for a in self.coeffs])

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def __pow__(self, n: int):
        if not isinstance(n, int):
            raise TypeError("use jets.powf for non-integer exponents")
        if n < 0:
            return self.reciprocal() ** (-n)
        result = TruncatedSeries.constant(self.coeffs[0] * 0 + 1, self.order)
        base = self
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result

    def reciprocal(self) -> "TruncatedSeries":
        c0 = self.coeffs[0]
        if np.any(np.asarray(c0) == 0):
            raise ZeroDivisionError(
                "reciprocal of a series with zero constant term "
                "(factor out the leading power first)")
        inv0 = Fraction(1, 1) / c0 if isinstance(c0, Rational) else 1.0 / c0
        out = [inv0]
        for k in range(1, self.order + 1):
            acc = self._zero()
            for j in range(1, k + 1):
                acc = acc + self.coeffs[j] * out[k - j]
            out.append(-acc * inv0)
        return TruncatedSeries(out)

    def sqrt(self) -> "TruncatedSeries":
        c0 = self.coeffs[0]
        if isinstance(c0, Rational):
            root = _rational_sqrt(c0)
        else:
            if np.any(np.asarray(c0) <= 0):
                raise ValueError("series sqrt requires positive constant term")
            root = np.sqrt(c0)
        out = [root]
        for k in range(1, self.order + 1):
            acc = self._zero()
            for j in range(1, k):
                acc = acc + out[j] * out[k - j]
            out.append((self.coeffs[k] - acc) / (2 * root))
        return TruncatedSeries(out)

    # -- calculus ---------------------------------------------------------
    def derive(self) -> "TruncatedSeries":
        """d/dr; the result is exact to one order lower."""
        if self.order == 0:
            return TruncatedSeries([self._zero()])
        return TruncatedSeries([k * self.coeffs[k] for k in range(1, self.order + 1)])

    def integrate(self) -> "TruncatedSeries":
        """Antiderivative with zero constant term (order grows by one)."""
        out = [self._zero()]
        for k, a in enumerate(self.coeffs):
            out.append(a / (k + 1) if isinstance(a, Rational)
                       else a / float(k + 1))
        return TruncatedSeries(out)

    def compose(self, inner: "TruncatedSeries") -> "TruncatedSeries":
        """self(inner(r)); inner must have zero constant term."""
        if np.any(np.asarray(inner.coeffs[0]) != 0):
            raise ValueError("compose requires inner series with zero constant term")
        self._check(inner)
        result = TruncatedSeries.constant(self.coeffs[-1], self.order)
        for k in range(self.order - 1, -1, -1):
            result = result * inner + self.coeffs[k]
        return result

    # -- shifts (factored handling of series with low-order zeros) ---------
    def shift(self, k: int) -> "TruncatedSeries":
        """Multiply by r^k, keeping the truncation order."""
        return TruncatedSeries(([self._zero()] * k + self.coeffs)[: self.order + 1])

    def unshift(self, k: int) -> "TruncatedSeries":
        """Divide by r^k; the k lowest coefficients must vanish."""
        if any(np.any(np.asarray(c) != 0) for c in self.coeffs[:k]):
            raise ValueError(f"series is not divisible by r^{k}")
        zero = self._zero()
        return TruncatedSeries(self.coeffs[k:] + [zero] * k)

    # -- analytic composition (float mode), mirrors MultiJet ---------------
    def apply_analytic(self, derivs) -> "TruncatedSeries":
        du = TruncatedSeries(self.coeffs)
        du = du - du.coeffs[0]
        ck = [derivs[k] / math.factorial(k)
              for k in range(min(len(derivs), self.order + 1))]
        result = TruncatedSeries.constant(ck[-1] + self._zero(), self.order)
        for k in range(len(ck) - 2, -1, -1):
            result = result * du + ck[k]
        return result

    def __repr__(self):
        return f"TruncatedSeries({self.coeffs})"


def _rational_sqrt(c: Rational) -> Fraction:
    c = Fraction(c)
    if c <= 0:
        raise ValueError("series sqrt requires positive constant term")
    pn, pd = math.isqrt(c.numerator), math.isqrt(c.denominator)
    if pn * pn != c.numerator or pd * pd != c.denominator:
        raise ValueError(f"{c} is not a perfect rational square")
    return Fraction(pn, pd)


def rational_series(coeffs, order: int) -> TruncatedSeries:
    """Exact-rational series padded with zeros to the requested order."""
    cs = [Fraction(c) for c in coeffs]
    if len(cs) > order + 1:
        raise TruncationError("more coefficients than the truncation order allows")
    return TruncatedSeries(cs + [Fraction(0)] * (order + 1 - len(cs)))


# ---------------------------------------------------------------------------
# radial expansion fitting
# ---------------------------------------------------------------------------

class IllConditionedFit(ValueError):
    def __init__(self, cond):
        super().__init__(f"radial fit is ill-conditioned (cond = {cond:.3e})")
        self.cond = cond


@dataclass
class RadialFit:
    """Least-squares radial expansion Theta/r^(m-1) - 1 ~ sum H_k r^k."""

    coefficients: dict  # k -> H_k
    order: int
    residual: float
    cond: float
    truncation_estimate: dict  # k -> |H_k(full) - H_k(half radii)|

    def __getitem__(self, k: int) -> float:
        return self.coefficients[k]


def fit_radial_expansion(samples, m: int, order: int,
                         cond_max: float = 1e12) -> RadialFit:
    """Fit density samples (r, Theta(r)) at fixed direction to Eq-style H_k.

    The model is Theta / r^(m-1) = 1 + sum_{k=2..order} H_k r^k.  Radii
    should sit well inside the injectivity radius so that the truncation
    error of the finite expansion is below the target accuracy; the
    ``truncation_estimate`` field reports a Richardson-style refit on the
    lower half of the radii as a contamination diagnostic.
    """
    pts = sorted((float(r), float(th)) for r, th in samples)
    radii = np.array([p[0] for p in pts])
    theta = np.array([p[1] for p in pts])
    if len(radii) < 2 * (order - 1):
        raise ValueError(
            f"need at least {2 * (order - 1)} radii for order {order}")
    if len(np.unique(radii)) != len(radii):
        raise ValueError("radii must be distinct")

    def solve(rr, yy):
        # scale columns by r_max^k to keep the Vandermonde system tame
        scale = rr.max() ** np.arange(2, order + 1)
        design = rr[:, None] ** np.arange(2, order + 1)[None, :] / scale[None, :]
        cond = np.linalg.cond(design)
        if cond > cond_max:
            raise IllConditionedFit(cond)
        sol, res, *_ = np.linalg.lstsq(design, yy, rcond=None)
        resid = float(np.sqrt(res[0])) if res.size else float(
            np.linalg.norm(design @ sol - yy))
        return sol / scale, resid, cond

    y = theta / radii ** (m - 1) - 1.0
    coeffs, residual, cond = solve(radii, y)
    half = radii <= radii.max() / 2
    trunc = {}
    if np.count_nonzero(half) >= 2 * (order - 1):
        coeffs_half, _, _ = solve(radii[half], y[half])
        trunc = {k + 2: abs(coeffs[k] - coeffs_half[k]) for k in range(len(coeffs))}
    return RadialFit(
        coefficients={k + 2: float(coeffs[k]) for k in range(len(coeffs))},
        order=order, residual=residual, cond=float(cond),
        truncation_estimate=trunc)


def geometric_radii(r_min: float, r_max: float, n: int) -> np.ndarray:
    """Geometrically spaced fit radii in [r_min, r_max]."""
    return np.geomspace(r_min, r_max, n)
