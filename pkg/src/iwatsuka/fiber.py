"""Finite-difference fiber operators -d^2/dx^2 + (xi + A_y(x))^2 + W(x).

The real line is truncated to a box with Dirichlet ends and discretised by
the three-point Laplacian on a uniform grid. Boxes are chosen per
quasi-momentum so that the lowest eigenfunctions have decayed to round-off
before the walls.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import NonConfiningError
from .gauge import GaugeFunction, turning_points
from .profiles import Profile, TailBounds

__all__ = ["GridSpec", "FiberMatrix", "SolverOptions", "effective_potential", "select_box",
           "select_box_for_potential", "assemble_fiber", "assemble_potential",
           "characteristic_length", "default_h_max", "eigenvalue_upper_bound"]

SCAN_CAP = 2.0 ** 16


@dataclass(frozen=True)
class GridSpec:
    left: float
    right: float
    n_interior: int

    def __post_init__(self):
        if not self.left < self.right:
            raise ValueError(f"grid needs left < right, got [{self.left}, {self.right}]")
        if int(self.n_interior) != self.n_interior or self.n_interior < 3:
            raise ValueError(f"grid needs at least 3 interior nodes, got {self.n_interior}")

    @property
    def h(self) -> float:
        return (self.right - self.left) / (self.n_interior + 1)

    def nodes(self) -> np.ndarray:
        return self.left + self.h * np.arange(1, self.n_interior + 1)

    @classmethod
    def from_box(cls, left: float, right: float, h_max: float) -> "GridSpec":
        n = max(3, math.ceil((right - left) / h_max - 1e-9) - 1)
        return cls(float(left), float(right), n)


@dataclass(frozen=True)
class FiberMatrix:
    grid: GridSpec
    diag: np.ndarray
    offdiag: np.ndarray
    xi: float = math.nan

    def dense(self) -> np.ndarray:
        return np.diag(self.diag) + np.diag(self.offdiag, 1) + np.diag(self.offdiag, -1)


@dataclass(frozen=True)
class SolverOptions:
    """Discretisation and solver knobs shared by every fiber solve.

    ``tol`` and ``gap_tol`` are relative to the matrix scale
    max|diag| + 2 max|offdiag|. ``decay_action`` is the WKB action
    int sqrt(V - lambda) dx demanded beyond the classically allowed region on
    each side of the box.
    """

    h_max: float | None = None
    margin: float = 10.0
    box: tuple | None = None
    decay_action: float = 20.0
    tol: float = 1e-14
    gap_tol: float = 1e-9
    workers: int = 1
    search_box: tuple = (-50.0, 50.0)

    def with_(self, **kw) -> "SolverOptions":
        return replace(self, **kw)

    def to_dict(self) -> dict:
        return {"h_max": self.h_max, "margin": self.margin,
                "box": list(self.box) if self.box is not None else None,
                "decay_action": self.decay_action, "tol": self.tol, "gap_tol": self.gap_tol,
                "workers": self.workers, "search_box": list(self.search_box)}


def effective_potential(g: GaugeFunction, w: Profile, xi: float, x):
    return (xi + g(x)) ** 2 + w(x)


def characteristic_length(tails: TailBounds) -> float:
    """Magnetic length 1/sqrt(b) from the weakest non-zero tail field."""
    mags = [abs(v) for v in (tails.b_under_plus, tails.b_over_plus,
                             tails.b_under_minus, tails.b_over_minus) if v != 0.0]
    return 1.0 / math.sqrt(min(mags)) if mags else 1.0


def default_h_max(tails: TailBounds) -> float:
    return max(1e-2 * characteristic_length(tails), 1e-3)


def eigenvalue_upper_bound(V, centre: float, n_bands: int, length_scale: float) -> float:
    """Dirichlet box bound lambda_n <= (n pi / L)^2 + max_{|x - centre| <= L/2} V.

    Restricting the form domain to an interval only raises eigenvalues, so the
    minimum over L is a rigorous upper bound for the n-th eigenvalue.
    """
    lengths = length_scale * np.geomspace(1e-2, 1e3, 160)
    t = np.linspace(-0.5, 0.5, 401)
    best = math.inf
    for L in lengths:
        vmax = float(np.max(V(centre + L * t)))
        best = min(best, (n_bands * math.pi / L) ** 2 + vmax)
    return best


def _walk(V, start: float, direction: float, lam: float, margin: float, action: float,
          step: float) -> float:
    pos, acc = start, 0.0
    v_prev = float(V(np.asarray(start)))
    chunk = 4096
    while abs(pos - start) < SCAN_CAP:
        xs = pos + direction * step * np.arange(1, chunk + 1)
        vs = V(xs)
        dens = np.sqrt(np.clip(np.concatenate([[v_prev], vs]) - lam, 0.0, None))
        cum = acc + np.cumsum(0.5 * (dens[1:] + dens[:-1]) * step)
        ok = np.flatnonzero((cum >= action) & (vs >= lam + margin))
        if len(ok):
            return float(xs[ok[0]])
        pos, acc, v_prev = float(xs[-1]), float(cum[-1]), float(vs[-1])
        step *= 2.0
    raise NonConfiningError(
        f"potential does not exceed {lam + margin:.6g} within {SCAN_CAP:g} of x={start:.6g} "
        f"({'right' if direction > 0 else 'left'}); pass an explicit box")


def _snap(left: float, right: float, h: float) -> GridSpec:
    lo = math.floor(left / h)
    hi = math.ceil(right / h)
    hi = max(hi, lo + 4)
    return GridSpec(lo * h, hi * h, hi - lo - 1)


def select_box_for_potential(V, core: tuple, n_bands: int, margin: float, *, h_max: float,
                             length_scale: float = 1.0, decay_action: float = 20.0) -> GridSpec:
    """Box around ``core`` (the potential wells) wide enough for ``n_bands`` states.

    The walls sit where V exceeds an upper bound on the n-th eigenvalue by
    ``margin`` and the tunnelling action from that level reaches
    ``decay_action``. Endpoints are snapped outward to the lattice h_max * Z so
    that shifted problems share their nodes.
    """
    if n_bands < 1:
        raise ValueError("n_bands must be >= 1")
    a, b = float(min(core)), float(max(core))
    probe = np.linspace(a - length_scale, b + length_scale, 2001)
    centre = float(probe[np.argmin(V(probe))])
    lam = eigenvalue_upper_bound(V, centre, n_bands, length_scale)
    step = 0.02 * length_scale
    right = _walk(V, max(b, centre), +1.0, lam, margin, decay_action, step)
    left = _walk(V, min(a, centre), -1.0, lam, margin, decay_action, step)
    return _snap(left, right, h_max)


def _potential_minimum(V, box) -> float:
    lo, hi = box
    for _ in range(6):
        xs = np.linspace(lo, hi, 4001)
        i = int(np.argmin(V(xs)))
        dx = xs[1] - xs[0]
        lo, hi = xs[max(i - 2, 0)], xs[min(i + 2, len(xs) - 1)]
        if dx < 1e-6:
            break
    return 0.5 * (lo + hi)


def select_box(g: GaugeFunction, w: Profile, xi: float, n_bands: int, margin: float = 10.0, *,
               tails: TailBounds | None = None, h_max: float | None = None,
               decay_action: float = 20.0, search_box=(-50.0, 50.0)) -> GridSpec:
    """Adaptive Dirichlet box for the fiber at ``xi``.

    The wells are located from the turning points of xi + A_y; when there are
    none the potential minimum is searched on the expanded scan box.
    """
    from .profiles import tail_bounds

    if tails is None:
        tails = tail_bounds(g.source, w)
    ell = characteristic_length(tails)
    if h_max is None:
        h_max = default_h_max(tails)

    def V(x):
        return (xi + g(x)) ** 2 + w(x)

    tp = turning_points(g, xi, search_box)
    if tp.roots:
        core = (tp.roots[0], tp.roots[-1])
    else:
        m = _potential_minimum(V, tp.box)
        core = (m, m)
    return select_box_for_potential(V, core, n_bands, margin, h_max=h_max,
                                    length_scale=ell, decay_action=decay_action)


def assemble_potential(V, grid: GridSpec, xi: float = math.nan) -> FiberMatrix:
    h = grid.h
    n = grid.n_interior
    diag = 2.0 / h ** 2 + np.asarray(V(grid.nodes()), dtype=float)
    offdiag = np.full(n - 1, -1.0 / h ** 2)
    diag.setflags(write=False)
    offdiag.setflags(write=False)
    return FiberMatrix(grid, diag, offdiag, float(xi))


def assemble_fiber(g: GaugeFunction, w: Profile, xi: float, grid: GridSpec) -> FiberMatrix:
    return assemble_potential(lambda x: (xi + g(x)) ** 2 + w(x), grid, xi)
