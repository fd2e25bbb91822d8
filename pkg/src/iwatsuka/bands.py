"""Band functions lambda_n(xi) and the checks built on them.

Side convention: xi -> -inf pushes the turning point to x -> +inf, so the
band limits there are bracketed by the ``plus`` tail bounds; xi -> +inf
pairs with the ``minus`` tails.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .comparison import LemmaPotential, lemma_potential_eval
from .eigensolve import lowest_eigenvalues, matrix_scale
from .errors import EigenvalueCollisionError, NonConfiningError
from .fiber import (GridSpec, SolverOptions, assemble_fiber, assemble_potential, default_h_max,
                    select_box)
from .gauge import GaugeFunction, turning_points
from .profiles import ACDecision, Profile, TailBounds, ac_condition, tail_bounds

__all__ = ["BandSweep", "TailEntry", "BandVerdict", "BandDiagnostics", "SandwichReport",
           "solve_fiber", "sweep", "tail_check", "nonconstancy_check", "diagnose",
           "k_eps_witness", "sandwich_check", "export_sweep", "tail_interval", "SIDE_CONVENTION"]

SIDE_CONVENTION = "xi -> -inf uses plus tails (x > 0); xi -> +inf uses minus tails (x < 0)"


@dataclass(frozen=True)
class BandSweep:
    xi_grid: np.ndarray
    bands: np.ndarray  # shape (k, len(xi_grid))
    solver_meta: tuple
    k: int
    b: Profile | None = None
    w: Profile | None = None
    tails: TailBounds | None = None
    opts: SolverOptions | None = None

    def band(self, n: int) -> np.ndarray:
        """1-based band accessor."""
        return self.bands[n - 1]

    def at(self, xi: float) -> np.ndarray:
        i = int(np.argmin(np.abs(self.xi_grid - xi)))
        return self.bands[:, i]


def _confinement(t: TailBounds) -> bool:
    plus = t.b_under_plus > 0 or t.b_over_plus < 0
    minus = t.b_under_minus > 0 or t.b_over_minus < 0
    return plus and minus


def solve_fiber(g: GaugeFunction, w: Profile, xi: float, k: int, opts: SolverOptions,
                tails: TailBounds):
    """Lowest ``k`` eigenvalues of H[xi] on its adaptive box: (values, grid, scale)."""
    h_max = opts.h_max if opts.h_max is not None else default_h_max(tails)
    if opts.box is not None:
        grid = GridSpec.from_box(opts.box[0], opts.box[1], h_max)
    else:
        grid = select_box(g, w, xi, k, opts.margin, tails=tails, h_max=h_max,
                          decay_action=opts.decay_action, search_box=opts.search_box)
    m = assemble_fiber(g, w, xi, grid)
    scale = matrix_scale(m)
    vals = lowest_eigenvalues(m, k, opts.tol * scale).values
    return vals, grid, scale


def _solve_one(args):
    g, w, xi, k, opts, tails = args
    vals, grid, scale = solve_fiber(g, w, xi, k, opts, tails)
    if k > 1:
        gaps = np.diff(vals)
        if np.min(gaps) <= opts.gap_tol * scale:
            n = int(np.argmin(gaps)) + 1
            raise EigenvalueCollisionError(
                f"eigenvalues {n} and {n + 1} collide at xi={xi:.17g} "
                f"(gap {gaps[n - 1]:.3e} <= {opts.gap_tol * scale:.3e})")
    meta = {"xi": float(xi), "left": grid.left, "right": grid.right,
            "n_interior": grid.n_interior, "h": grid.h}
    return vals, meta


def sweep(b: Profile, w: Profile, xi_grid, k: int, opts: SolverOptions | None = None, *,
          gauge: GaugeFunction | None = None, tails: TailBounds | None = None) -> BandSweep:
    """Band functions on ``xi_grid``; bands are connected by sorted order.

    Raises NonConfiningError when the vector potential does not diverge on
    both sides and EigenvalueCollisionError when two levels of one fiber are
    closer than ``gap_tol * scale``. Precomputed ``tails`` (for instance exact
    ones for a tabulated profile) replace the sampled estimate.
    """
    opts = opts or SolverOptions()
    xi_grid = np.asarray(xi_grid, dtype=float)
    if xi_grid.ndim != 1 or len(xi_grid) == 0:
        raise ValueError("xi_grid must be a non-empty 1-d array")
    if np.any(np.diff(xi_grid) <= 0):
        raise ValueError("xi_grid must be strictly increasing")
    if k < 1:
        raise ValueError("k must be >= 1")
    if tails is None:
        tails = tail_bounds(b, w)
    if not _confinement(tails) and opts.box is None:
        raise NonConfiningError(
            "vector potential does not diverge on both sides: need b_under > 0 or b_over < 0 "
            f"on each half-line (tails {tails.to_dict()})")
    g = gauge if gauge is not None else GaugeFunction(b)
    jobs = [(g, w, float(xi), k, opts, tails) for xi in xi_grid]
    if opts.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=opts.workers) as ex:
            results = list(ex.map(_solve_one, jobs))
    else:
        results = [_solve_one(j) for j in jobs]
    bands = np.array([r[0] for r in results]).T
    meta = tuple(r[1] for r in results)
    return BandSweep(xi_grid, bands, meta, k, b, w, tails, opts)


def tail_interval(t: TailBounds, side: str, n: int) -> tuple[float, float]:
    """[b_under (2n-1) + w_under, b_over (2n-1) + w_over] on one half-line."""
    bl, bh, wl, wh = t.side(side)
    return bl * (2 * n - 1) + wl, bh * (2 * n - 1) + wh


@dataclass(frozen=True)
class TailEntry:
    band: int
    end: str  # "xi_min" (xi -> -inf) or "xi_max" (xi -> +inf)
    tail_side: str
    xi: float
    value: float
    interval: tuple | None
    distance: float | None
    ok: bool | None
    note: str = ""

    def to_dict(self) -> dict:
        return {"band": self.band, "end": self.end, "tail_side": self.tail_side, "xi": self.xi,
                "value": self.value, "interval": list(self.interval) if self.interval else None,
                "distance": self.distance, "ok": self.ok, "note": self.note}


def tail_check(s: BandSweep, t: TailBounds, tail_tol: float = 5e-2,
               xi_tail: float | None = None) -> list[TailEntry]:
    """Compare the band values at the sweep ends with the harmonic tail intervals.

    A side is judged only when both field tails are positive (the regime where
    the envelopes exist). Sign-changing configurations are reported without a
    verdict; their divergent side is handled by ``nonconstancy_check``.
    """
    judged = t.b_under_plus > 0 and t.b_under_minus > 0
    out = []
    for n in range(1, s.k + 1):
        for end, side, idx in (("xi_min", "plus", 0), ("xi_max", "minus", -1)):
            xi = float(s.xi_grid[idx])
            val = float(s.bands[n - 1, idx])
            interval = tail_interval(t, side, n)
            # without an explicit threshold an end counts once it lies on its own half-line
            bound = 0.0 if xi_tail is None else xi_tail
            reach = xi < -bound if end == "xi_min" else xi > bound
            if not judged:
                note = ("sign-changing field: limit on this side not asserted"
                        if t.b_under_plus > 0 or t.b_under_minus > 0 else "no positive tail")
                out.append(TailEntry(n, end, side, xi, val, None, None, None, note))
                continue
            lo, hi = interval
            dist = max(lo - val, val - hi, 0.0)
            note = "" if reach else f"sweep does not reach |xi| > {bound:g}"
            out.append(TailEntry(n, end, side, xi, val, interval, dist,
                                 bool(dist <= tail_tol) if reach else None, note))
    return out


@dataclass(frozen=True)
class BandVerdict:
    band: int
    by_tail_intervals: bool | None
    by_divergence: bool
    by_oscillation: bool
    oscillation: float

    @property
    def nonconstant(self) -> bool:
        return bool(self.by_tail_intervals) or self.by_divergence or self.by_oscillation

    def to_dict(self) -> dict:
        return {"band": self.band, "by_tail_intervals": self.by_tail_intervals,
                "by_divergence": self.by_divergence, "by_oscillation": self.by_oscillation,
                "oscillation": self.oscillation, "nonconstant": self.nonconstant}


def nonconstancy_check(s: BandSweep, t: TailBounds, osc_tol: float = 1e-6) -> list[BandVerdict]:
    """Per band: disjoint tail intervals, forced divergence, or observed variation.

    ``by_tail_intervals`` is None when the positive-field regime does not hold.
    ``by_divergence`` needs the sign-split condition and a band that is larger
    at the divergent end of the sweep than at the other one.
    """
    ac = ac_condition(t)
    out = []
    for n in range(1, s.k + 1):
        band = s.bands[n - 1]
        by_tails = None
        if t.b_under_plus > 0 and t.b_under_minus > 0:
            lo_p, hi_p = tail_interval(t, "plus", n)
            lo_m, hi_m = tail_interval(t, "minus", n)
            by_tails = bool(hi_m < lo_p or hi_p < lo_m)
        div = False
        if "cond_1_4" in ac.all_matches:
            div = div or bool(band[-1] > band[0])
        if "cond_1_4_swapped" in ac.all_matches:
            div = div or bool(band[0] > band[-1])
        osc = float(np.max(band) - np.min(band))
        out.append(BandVerdict(n, by_tails, div, osc > osc_tol, osc))
    return out


@dataclass(frozen=True)
class BandDiagnostics:
    min_gap: float
    oscillation: tuple
    tail_report: tuple
    lipschitz_max: float
    sandwich_ok: bool | None
    nonconstancy: tuple = ()
    tails: TailBounds | None = None
    ac: ACDecision | None = None
    tail_tol: float = 5e-2

    def to_dict(self) -> dict:
        return {"min_gap": self.min_gap if math.isfinite(self.min_gap) else None,
                "oscillation": list(self.oscillation),
                "tail_report": [e.to_dict() for e in self.tail_report],
                "lipschitz_max": self.lipschitz_max, "sandwich_ok": self.sandwich_ok,
                "nonconstancy": [v.to_dict() for v in self.nonconstancy],
                "tail_tol": self.tail_tol}


def diagnose(s: BandSweep, t: TailBounds | None = None, *, tail_tol: float = 5e-2,
             osc_tol: float = 1e-6, xi_tail: float | None = None,
             sandwich_ok: bool | None = None) -> BandDiagnostics:
    """All diagnostics computed from the sweep data alone (no new solves)."""
    t = t if t is not None else s.tails
    min_gap = float(np.min(np.diff(s.bands, axis=0))) if s.k > 1 else math.inf
    osc = tuple(float(np.max(b) - np.min(b)) for b in s.bands)
    if len(s.xi_grid) > 1:
        lip = float(np.max(np.abs(np.diff(s.bands, axis=1)) / np.diff(s.xi_grid)))
    else:
        lip = 0.0
    return BandDiagnostics(min_gap, osc, tuple(tail_check(s, t, tail_tol, xi_tail)), lip, sandwich_ok,
                           tuple(nonconstancy_check(s, t, osc_tol)), t, ac_condition(t), tail_tol)


def k_eps_witness(b: Profile, w: Profile, t: TailBounds, eps: float, reach: float = 200.0,
                  n_points: int = 400_001) -> float:
    """Smallest sampled K > 0 such that B and W lie eps-inside their tail bounds beyond +-K.

    Only existence of such a K is guaranteed analytically; this returns a
    witness on the sampling grid of [-reach, reach].
    """
    xs = np.linspace(-reach, reach, n_points)
    dx = xs[1] - xs[0]
    bv, wv = b(xs), w(xs)
    right = xs > 0
    bad_r = right & ~((t.b_under_plus - eps < bv) & (bv < t.b_over_plus + eps)
                      & (t.w_under_plus - eps < wv) & (wv < t.w_over_plus + eps))
    bad_l = ~right & ~((t.b_under_minus - eps < bv) & (bv < t.b_over_minus + eps)
                       & (t.w_under_minus - eps < wv) & (wv < t.w_over_minus + eps))
    k = dx
    if bad_r.any():
        k = max(k, float(xs[bad_r].max()) + dx)
    if bad_l.any():
        k = max(k, float(-xs[bad_l].min()) + dx)
    return k


@dataclass(frozen=True)
class SandwichReport:
    ok: bool
    side: str
    xi: float
    eps: float
    x_xi: float | None = None
    K_eps: float | None = None
    pointwise_ok: bool = False
    violating_node: float | None = None
    ordering_ok: bool = False
    eig_under: np.ndarray | None = None
    eig: np.ndarray | None = None
    eig_over: np.ndarray | None = None
    limit_interval: tuple = ()
    grid: GridSpec | None = None
    reason: str = ""

    def to_dict(self) -> dict:
        def arr(a):
            return None if a is None else [float(v) for v in a]
        return {"ok": self.ok, "side": self.side, "xi": self.xi, "eps": self.eps, "x_xi": self.x_xi,
                "K_eps": self.K_eps, "pointwise_ok": self.pointwise_ok,
                "violating_node": self.violating_node, "ordering_ok": self.ordering_ok,
                "eig_under": arr(self.eig_under), "eig": arr(self.eig), "eig_over": arr(self.eig_over),
                "limit_interval": [list(iv) for iv in self.limit_interval], "reason": self.reason}


def sandwich_check(b: Profile, w: Profile, xi: float, eps: float, k: int,
                   opts: SolverOptions | None = None, *, side: str | None = None,
                   K_eps: float | None = None) -> SandwichReport:
    """Verify the envelope sandwich for H[xi] on its own solver grid.

    Checks (a) under(x) <= (xi + A_y(x))^2 + W(x) <= over(x) at every node and
    (b) the induced ordering of the lowest ``k`` eigenvalues. A false result
    with a violating node means xi is not yet far enough in the tail.
    """
    opts = opts or SolverOptions()
    t = tail_bounds(b, w)
    side = side or ("plus" if xi < 0 else "minus")
    base = dict(side=side, xi=float(xi), eps=float(eps))
    if not (t.b_under_plus > 0 and t.b_under_minus > 0):
        return SandwichReport(False, reason="envelopes need positive field tails on both sides", **base)
    if not 0 < eps < 0.5 * t.b_min:
        raise ValueError(f"eps must lie in (0, {0.5 * t.b_min:.6g}), got {eps}")
    g = GaugeFunction(b)
    tp = turning_points(g, xi, opts.search_box)
    if not tp.roots:
        return SandwichReport(False, reason="no turning point", **base)
    x_xi = tp.roots[-1] if side == "plus" else tp.roots[0]
    K = K_eps if K_eps is not None else k_eps_witness(b, w, t, eps, reach=max(200.0, 4 * abs(x_xi)))
    base.update(x_xi=float(x_xi), K_eps=float(K))
    if (side == "plus" and not x_xi > K) or (side == "minus" and not x_xi < -K):
        return SandwichReport(False, reason=f"turning point {x_xi:.6g} not beyond K_eps={K:.6g}", **base)
    _, bh, _, wh = t.side(side)
    bl, _, wl, _ = t.side(side)
    under_p = LemmaPotential(side, "under", eps, K, x_xi)
    over_p = LemmaPotential(side, "over", eps, K, x_xi)

    def under(x):
        return lemma_potential_eval(under_p, t, x) + wl - eps

    def over(x):
        return lemma_potential_eval(over_p, t, x) + wh + eps

    # envelopes are discretised on the fiber's own grid so the discrete minimax applies
    vals, grid, scale = solve_fiber(g, w, xi, k, opts, t)
    xs = grid.nodes()
    v = (xi + g(xs)) ** 2 + w(xs)
    bad = np.flatnonzero((under(xs) > v) | (v > over(xs)))
    limits = tuple(((bl - 2 * eps) * (2 * n - 1) + wl - eps, (bh + 2 * eps) * (2 * n - 1) + wh + eps)
                   for n in range(1, k + 1))
    if len(bad):
        return SandwichReport(False, pointwise_ok=False, violating_node=float(xs[bad[0]]),
                              eig=vals, limit_interval=limits, grid=grid,
                              reason="pointwise inequality fails", **base)
    m_under = assemble_potential(under, grid, xi)
    m_over = assemble_potential(over, grid, xi)
    tol = opts.tol * max(scale, matrix_scale(m_over))
    e_under = lowest_eigenvalues(m_under, k, tol).values
    e_over = lowest_eigenvalues(m_over, k, tol).values
    ordering = bool(np.all(e_under <= vals + 2 * tol) and np.all(vals <= e_over + 2 * tol))
    return SandwichReport(ordering, pointwise_ok=True, ordering_ok=ordering, eig_under=e_under,
                          eig=vals, eig_over=e_over, limit_interval=limits, grid=grid,
                          reason="" if ordering else "eigenvalue ordering fails", **base)


def _fmt(v: float) -> str:
    return f"{v:.17g}"


def export_sweep(s: BandSweep, d: BandDiagnostics, path, *, extra: dict | None = None) -> tuple:
    """Write ``bands.csv`` and ``meta.json`` into directory ``path``."""
    if len(s.xi_grid) == 0:
        raise ValueError("cannot export an empty sweep")
    os.makedirs(path, exist_ok=True)
    csv_path = os.path.join(path, "bands.csv")
    with open(csv_path, "w", newline="") as fh:
        fh.write(",".join(["xi"] + [f"lambda_{n}" for n in range(1, s.k + 1)]) + "\n")
        for i, xi in enumerate(s.xi_grid):
            fh.write(",".join([_fmt(xi)] + [_fmt(v) for v in s.bands[:, i]]) + "\n")
    tails = d.tails if d.tails is not None else s.tails
    meta = {
        "side_convention": SIDE_CONVENTION,
        "k": s.k,
        "profiles": {"B": s.b.to_dict() if s.b is not None else None,
                     "W": s.w.to_dict() if s.w is not None else None},
        "tail_bounds": tails.to_dict() if tails is not None else None,
        "ac_decision": (d.ac or ac_condition(tails)).to_dict() if tails is not None else None,
        "solver": s.opts.to_dict() if s.opts is not None else None,
        "diagnostics": d.to_dict(),
        "per_xi": list(s.solver_meta),
    }
    if extra:
        meta.update(extra)
    meta_path = os.path.join(path, "meta.json")
    with open(meta_path, "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")
    return csv_path, meta_path


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, tuple):
        return list(o)
    raise TypeError(f"not JSON serialisable: {type(o).__name__}")
