"""Landau gauge A_y(x) = int_{x0}^x B(t) dt and turning points of xi + A_y."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .profiles import Profile

__all__ = ["GaugeFunction", "TurningPoints", "vector_potential", "rebase_gauge", "turning_points"]

MAX_HALF_WIDTH = 2.0 ** 16


@dataclass(frozen=True)
class GaugeFunction:
    """Vector potential of ``source`` vanishing at ``base_point``.

    The antiderivative itself lives on the profile (closed forms for analytic
    kinds, an eager cumulative table for tabulated ones), so a gauge is cheap
    to copy and rebase.
    """

    source: Profile
    base_point: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "_offset", float(self.source.integral(self.base_point)))

    def __call__(self, x):
        val = self.source.integral(x) - self._offset
        return float(val) if np.ndim(x) == 0 else val


def vector_potential(g: GaugeFunction, x):
    return g(x)


def rebase_gauge(g: GaugeFunction, new_base: float) -> GaugeFunction:
    """Same field, integration origin moved; A'(x) = A(x) - A(new_base)."""
    return GaugeFunction(g.source, float(new_base))


@dataclass(frozen=True)
class TurningPoints:
    xi: float
    roots: tuple
    uniqueness: bool
    box: tuple = (np.nan, np.nan)

    @property
    def found(self) -> bool:
        return len(self.roots) > 0


def _bisect(f, lo, hi, flo, tol, max_iter=200):
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if abs(fm) <= tol or mid == lo or mid == hi:
            return mid
        if (fm < 0) == (flo < 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def turning_points(g: GaugeFunction, xi: float, search_box=(-50.0, 50.0), *,
                   n_scan: int = 4001, root_tol: float | None = None) -> TurningPoints:
    """All sign changes of xi + A_y(x), refined by bisection.

    The box is doubled about its centre while no sign change is seen, up to a
    half-width of 2**16. An empty result is a normal outcome: for fields
    without positive tails the turning point need not exist.
    """
    xi = float(xi)
    tol = 1e-12 * (1.0 + abs(xi)) if root_tol is None else root_tol
    lo, hi = map(float, search_box)
    if not lo < hi:
        raise ValueError("search_box must satisfy left < right")
    centre, half = 0.5 * (lo + hi), 0.5 * (hi - lo)

    def f(x):
        return xi + g(x)

    while True:
        xs = np.linspace(centre - half, centre + half, n_scan)
        fs = xi + g(xs)
        zero = np.flatnonzero(fs == 0.0)
        change = np.flatnonzero((fs[:-1] < 0) != (fs[1:] < 0))
        change = change[(fs[change] != 0.0) & (fs[change + 1] != 0.0)]
        if len(zero) or len(change) or half >= MAX_HALF_WIDTH:
            break
        half *= 2.0
    roots = [float(xs[i]) for i in zero]
    roots += [_bisect(f, xs[i], xs[i + 1], fs[i], tol) for i in change]
    roots = tuple(sorted(roots))
    return TurningPoints(xi, roots, len(roots) == 1, (centre - half, centre + half))
