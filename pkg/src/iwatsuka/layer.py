"""Thin curved quantum layer in a homogeneous field B0.

The layer is built over a y-invariant surface whose cross-section is a
unit-speed planar curve s -> (x(s), z(s)). In the thin limit it carries the
fiber data B_eff(s) = B0 x'(s) and W_eff(s) = -kappa(s)^2 / 4, where kappa is
the (unsigned) curvature, so every tool for (B, W) pairs applies.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .bands import BandSweep, sweep
from .errors import ProfileError
from .fiber import SolverOptions
from .profiles import ACDecision, Tabulated, TailBounds, ac_condition

__all__ = ["CurveSpec", "CurvatureTable", "EffectiveProfile", "LayerGeometry", "LayerACResult",
           "JoinWarning", "line", "arc_chain", "circular_bend", "s_bend", "smooth_bend", "curve_from_samples",
           "curvature", "effective_profile", "layer_ac_check", "layer_potential_V", "layer_bands",
           "load_curve_csv", "write_curve_csv", "write_effective_profile_csv", "builtin_curve",
           "CURVE_BUILTINS"]

ARC_TOL = 1e-8
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(10)


class JoinWarning(UserWarning):
    """Evaluation near a point where the curvature is not differentiable."""


@dataclass(frozen=True)
class CurveSpec:
    """Uniformly sampled unit-speed curve.

    Builtins also carry the exact tangent samples, a closed-form curvature
    ``curvature_fn(s) -> (kappa, kappa', kappa'')`` and the directions of their
    straight leads, which make tail bounds exact.
    """

    s: np.ndarray
    x: np.ndarray
    z: np.ndarray
    name: str = "samples"
    params: dict = field(default_factory=dict)
    tangent: tuple | None = None
    curvature_fn: Callable | None = None
    tail_directions: tuple | None = None
    joins: tuple = ()

    def __post_init__(self):
        s = np.asarray(self.s, dtype=float)
        x = np.asarray(self.x, dtype=float)
        z = np.asarray(self.z, dtype=float)
        if not (s.ndim == x.ndim == z.ndim == 1 and len(s) == len(x) == len(z)):
            raise ProfileError("curve samples s, x, z must be 1-d arrays of equal length")
        if len(s) < 5:
            raise ProfileError("curve needs at least 5 samples")
        ds = np.diff(s)
        if np.any(ds <= 0):
            raise ProfileError("curve s samples must be strictly increasing")
        if np.max(np.abs(ds - ds.mean())) > 1e-9 * ds.mean():
            raise ProfileError("curve s samples must be uniformly spaced")
        for name, arr in (("s", s), ("x", x), ("z", z)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def ds(self) -> float:
        return float((self.s[-1] - self.s[0]) / (len(self.s) - 1))


def _d1_fourth_order(f: np.ndarray, h: float) -> np.ndarray:
    n = len(f)
    d = np.empty(n)
    d[2:-2] = (f[:-4] - 8 * f[1:-3] + 8 * f[3:-1] - f[4:]) / (12 * h)
    d[0] = (-25 * f[0] + 48 * f[1] - 36 * f[2] + 16 * f[3] - 3 * f[4]) / (12 * h)
    d[1] = (-3 * f[0] - 10 * f[1] + 18 * f[2] - 6 * f[3] + f[4]) / (12 * h)
    d[-1] = (25 * f[-1] - 48 * f[-2] + 36 * f[-3] - 16 * f[-4] + 3 * f[-5]) / (12 * h)
    d[-2] = (3 * f[-1] + 10 * f[-2] - 18 * f[-3] + 6 * f[-4] - f[-5]) / (12 * h)
    return d


def _d2_second_order(f: np.ndarray, h: float) -> np.ndarray:
    d = np.empty(len(f))
    d[1:-1] = (f[:-2] - 2 * f[1:-1] + f[2:]) / h ** 2
    d[0] = (2 * f[0] - 5 * f[1] + 4 * f[2] - f[3]) / h ** 2
    d[-1] = (2 * f[-1] - 5 * f[-2] + 4 * f[-3] - f[-4]) / h ** 2
    return d


def _tangent(c: CurveSpec) -> tuple[np.ndarray, np.ndarray]:
    if c.tangent is not None:
        return np.asarray(c.tangent[0]), np.asarray(c.tangent[1])
    return _d1_fourth_order(c.x, c.ds), _d1_fourth_order(c.z, c.ds)


def check_unit_speed(c: CurveSpec, arc_tol: float = ARC_TOL) -> float:
    """Largest |x'^2 + z'^2 - 1|; raises ProfileError above ``arc_tol``."""
    xd, zd = _tangent(c)
    dev = np.abs(xd ** 2 + zd ** 2 - 1.0)
    i = int(np.argmax(dev))
    if dev[i] > arc_tol:
        raise ProfileError(f"curve is not unit-speed: |x'^2+z'^2-1| = {dev[i]:.3e} at s={c.s[i]:.6g} "
                           f"(tolerance {arc_tol:g}); reparametrise by arc length")
    return float(dev[i])


def curve_from_samples(s, x, z, name: str = "samples") -> CurveSpec:
    return CurveSpec(np.asarray(s, float), np.asarray(x, float), np.asarray(z, float), name)


def _grid(s_min: float, s_max: float, ds: float) -> np.ndarray:
    n = int(round((s_max - s_min) / ds)) + 1
    return np.linspace(s_min, s_max, max(n, 5))


def arc_chain(segments, angle_in: float = 0.0, lead: float = 20.0, ds: float = 0.01,
              name: str = "arc_chain", params: dict | None = None) -> CurveSpec:
    """Straight lead, circular arcs ``[(length, signed_curvature), ...]``, straight lead.

    The first arc starts at s = 0 from the origin heading at ``angle_in``
    (radians from the x axis).
    """
    segs = [(float(L), float(k)) for L, k in segments]
    if any(L <= 0 for L, _ in segs):
        raise ProfileError("arc lengths must be positive")
    total = sum(L for L, _ in segs)
    starts, theta0, pos0 = [], [], []
    th, px, pz, s0 = angle_in, 0.0, 0.0, 0.0
    for L, k in segs:
        starts.append(s0)
        theta0.append(th)
        pos0.append((px, pz))
        if k == 0.0:
            px += L * math.cos(th)
            pz += L * math.sin(th)
        else:
            px += (math.sin(th + k * L) - math.sin(th)) / k
            pz -= (math.cos(th + k * L) - math.cos(th)) / k
        th += k * L
        s0 += L
    angle_out = th
    s = _grid(-lead, total + lead, ds)
    x = np.empty_like(s)
    z = np.empty_like(s)
    theta = np.empty_like(s)
    kap = np.zeros_like(s)
    before = s < 0
    x[before] = s[before] * math.cos(angle_in)
    z[before] = s[before] * math.sin(angle_in)
    theta[before] = angle_in
    after = s >= total
    x[after] = px + (s[after] - total) * math.cos(angle_out)
    z[after] = pz + (s[after] - total) * math.sin(angle_out)
    theta[after] = angle_out
    for (L, k), st, th0, (ax, az) in zip(segs, starts, theta0, pos0):
        m = (s >= st) & (s < st + L) & ~after
        t = s[m] - st
        theta[m] = th0 + k * t
        kap[m] = abs(k)
        if k == 0.0:
            x[m] = ax + t * math.cos(th0)
            z[m] = az + t * math.sin(th0)
        else:
            x[m] = ax + (np.sin(th0 + k * t) - math.sin(th0)) / k
            z[m] = az - (np.cos(th0 + k * t) - math.cos(th0)) / k
    bounds = np.array(starts + [total])
    kvals = np.array([0.0] + [abs(k) for _, k in segs] + [0.0])

    def curvature_fn(sv):
        sv = np.asarray(sv, dtype=float)
        idx = np.searchsorted(bounds, sv, side="right")
        kk = kvals[idx]
        return kk, np.zeros_like(kk), np.zeros_like(kk)

    joins = tuple(float(b) for b in bounds)
    return CurveSpec(s, x, z, name, dict(params or {}), (np.cos(theta), np.sin(theta)), curvature_fn,
                     (angle_in, angle_out), joins)


def line(angle: float = 0.0, half_length: float = 20.0, ds: float = 0.01) -> CurveSpec:
    s = _grid(-half_length, half_length, ds)
    c, sn = math.cos(angle), math.sin(angle)

    def curvature_fn(sv):
        zero = np.zeros_like(np.asarray(sv, dtype=float))
        return zero, zero, zero

    return CurveSpec(s, s * c, s * sn, "line", {"angle": angle},
                     (np.full_like(s, c), np.full_like(s, sn)), curvature_fn, (angle, angle))


def circular_bend(radius: float, angle_in: float, angle_out: float, lead: float = 20.0,
                  ds: float = 0.01) -> CurveSpec:
    """Straight lead, circular arc of ``radius`` turning from angle_in to angle_out, straight lead."""
    if not radius > 0:
        raise ProfileError("bend radius must be positive")
    turn = angle_out - angle_in
    if turn == 0:
        return line(angle_in, lead, ds)
    return arc_chain([(radius * abs(turn), math.copysign(1.0 / radius, turn))], angle_in, lead, ds,
                     "circular_bend", {"radius": radius, "angle_in": angle_in, "angle_out": angle_out})


def s_bend(radius: float, angle: float, lead: float = 20.0, ds: float = 0.01) -> CurveSpec:
    """Two opposite arcs: the leads are parallel, so the field tails coincide."""
    L = radius * abs(angle)
    k = math.copysign(1.0 / radius, angle)
    return arc_chain([(L, k), (L, -k)], 0.0, lead, ds, "s_bend", {"radius": radius, "angle": angle})


def smooth_bend(angle_in: float, angle_out: float, width: float = 1.0, half_length: float = 30.0,
                ds: float = 0.01) -> CurveSpec:
    """C-infinity bend with heading angle_in + (angle_out - angle_in)(1 + tanh(s/width))/2."""
    if not width > 0:
        raise ProfileError("smooth bend width must be positive")
    turn = angle_out - angle_in
    s = _grid(-half_length, half_length, ds)

    def theta(sv):
        return angle_in + 0.5 * turn * (1.0 + np.tanh(sv / width))

    # positions: 10-point Gauss-Legendre on every cell, anchored at s = 0
    a, b = s[:-1], s[1:]
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    nodes = mid[:, None] + half[:, None] * _GL_NODES[None, :]
    th = theta(nodes)
    dx = half * (np.cos(th) @ _GL_WEIGHTS)
    dz = half * (np.sin(th) @ _GL_WEIGHTS)
    x = np.concatenate([[0.0], np.cumsum(dx)])
    z = np.concatenate([[0.0], np.cumsum(dz)])
    i0 = int(np.argmin(np.abs(s)))
    x -= x[i0]
    z -= z[i0]
    amp = abs(turn) / (2.0 * width)

    def curvature_fn(sv):
        u = np.asarray(sv, dtype=float) / width
        sech2 = 1.0 / np.cosh(u) ** 2
        th_ = np.tanh(u)
        return (amp * sech2, amp * (-2.0 / width) * sech2 * th_,
                amp / width ** 2 * (4.0 * sech2 * th_ ** 2 - 2.0 * sech2 ** 2))

    ts = theta(s)
    return CurveSpec(s, x, z, "smooth_bend",
                     {"angle_in": angle_in, "angle_out": angle_out, "width": width},
                     (np.cos(ts), np.sin(ts)), curvature_fn, (angle_in, angle_out))


CURVE_BUILTINS = {"line": line, "circular_bend": circular_bend, "s_bend": s_bend,
                  "smooth_bend": smooth_bend}


def builtin_curve(name: str, **params) -> CurveSpec:
    if name not in CURVE_BUILTINS:
        raise ProfileError(f"unknown curve builtin {name!r}; available: {', '.join(CURVE_BUILTINS)}")
    try:
        return CURVE_BUILTINS[name](**params)
    except TypeError as exc:
        raise ProfileError(f"bad parameters for curve {name!r}: {exc}") from exc


@dataclass(frozen=True)
class CurvatureTable:
    s: np.ndarray
    kappa: np.ndarray
    kappa_dot: np.ndarray
    kappa_ddot: np.ndarray
    method: str


def curvature(c: CurveSpec, method: str = "auto", arc_tol: float = ARC_TOL) -> CurvatureTable:
    """kappa = sqrt(x''^2 + z''^2) and its first two derivatives on the sample grid.

    ``"fd"`` uses second differences of the positions (one-sided at the ends)
    followed by repeated central differencing; ``"exact"`` uses the builtin's
    closed form; ``"auto"`` prefers the closed form when there is one.
    """
    check_unit_speed(c, arc_tol)
    if method == "auto":
        method = "exact" if c.curvature_fn is not None else "fd"
    if method == "exact":
        if c.curvature_fn is None:
            raise ProfileError(f"curve {c.name!r} has no closed-form curvature")
        k, kd, kdd = (np.asarray(a, dtype=float) for a in c.curvature_fn(c.s))
        return CurvatureTable(c.s, k, kd, kdd, "exact")
    if method != "fd":
        raise ValueError(f"method must be 'auto', 'exact' or 'fd', got {method!r}")
    h = c.ds
    k = np.hypot(_d2_second_order(c.x, h), _d2_second_order(c.z, h))
    kd = np.gradient(k, h, edge_order=2)
    kdd = np.gradient(kd, h, edge_order=2)
    return CurvatureTable(c.s, k, kd, kdd, "fd")


@dataclass(frozen=True)
class EffectiveProfile:
    b_eff: Tabulated
    w_eff: Tabulated
    kappa: Tabulated
    B0: float
    tails: TailBounds
    curve_name: str = "samples"


# resolution of tail values read off sampled curves
SAMPLED_TAIL_QUANTUM = 1e-9


def effective_profile(c: CurveSpec, B0: float, method: str = "auto") -> EffectiveProfile:
    """Tabulated B_eff = B0 x'(s) and W_eff = -kappa(s)^2/4 with their tail bounds.

    Builtins with straight leads get exact tails (x' -> cos of the lead angle,
    kappa -> 0); otherwise the tails are the end values rounded to
    ``SAMPLED_TAIL_QUANTUM * max(B0, 1)`` and flagged as heuristic.
    """
    if not B0 > 0:
        raise ProfileError("B0 must be positive")
    table = curvature(c, method)
    xd, _ = _tangent(c)
    kap = table.kappa
    if c.tail_directions is not None:
        # a vertical lead has x' = 0 exactly, not cos(pi/2) ~ 6e-17
        left_b, right_b = (0.0 if abs(math.cos(a)) < 8 * np.finfo(float).eps else B0 * math.cos(a)
                           for a in c.tail_directions)
        left_k = right_k = 0.0
    else:
        left_b, right_b = B0 * xd[0], B0 * xd[-1]
        left_k, right_k = kap[0], kap[-1]
    b_eff = Tabulated(tuple(c.s), tuple(B0 * xd), left_b, right_b)
    w_eff = Tabulated(tuple(c.s), tuple(-0.25 * kap ** 2), -0.25 * left_k ** 2, -0.25 * right_k ** 2)
    kprof = Tabulated(tuple(c.s), tuple(kap), left_k, right_k)
    if c.tail_directions is not None:
        tails = TailBounds(right_b, right_b, left_b, left_b, 0.0, 0.0, 0.0, 0.0)
    else:
        # the tables continue as constants past their ends; quantise the end
        # values so differentiation noise cannot decide a strict inequality
        q = SAMPLED_TAIL_QUANTUM * max(B0, 1.0)
        rb, lb = (float(np.round(v / q) * q) + 0.0 for v in (right_b, left_b))
        rw, lw = (float(np.round(-0.25 * k ** 2 / q) * q) + 0.0 for k in (right_k, left_k))
        tails = TailBounds(rb, rb, lb, lb, rw, rw, lw, lw, provenance="sampled")
    return EffectiveProfile(b_eff, w_eff, kprof, float(B0), tails, c.name)


@dataclass(frozen=True)
class LayerACResult:
    decision: ACDecision
    clause: str  # "curvature_gap", "sign_split" or "none"
    swapped: bool
    scaled_margin: float
    limit_clause: bool

    def to_dict(self) -> dict:
        return {"decision": self.decision.to_dict(), "clause": self.clause, "swapped": self.swapped,
                "scaled_margin": self.scaled_margin, "limit_clause": self.limit_clause}


def layer_ac_check(e: EffectiveProfile) -> LayerACResult:
    """Absolute-continuity verdict for the effective layer Hamiltonian.

    The layer conditions are the (B, W) conditions after B -> B0 x',
    W -> -kappa^2/4, so the decision is delegated to ``ac_condition``. The
    ``curvature_gap`` clause reads ``sup kappa^2 (+) - inf kappa^2 (-) <
    4 B0 (inf x' (+) - sup x' (-))``; ``scaled_margin`` is the slack of that
    inequality (4x the (B, W) margin), or the sign-split slack divided by B0.
    ``limit_clause`` reports the special case kappa -> 0 with different limits of x'.
    """
    t = e.tails
    d = ac_condition(t)
    clause = {"cond_1_3": "curvature_gap", "cond_1_3_swapped": "curvature_gap",
              "cond_1_4": "sign_split", "cond_1_4_swapped": "sign_split"}.get(d.matched_condition, "none")
    swapped = d.matched_condition.endswith("_swapped")
    if clause == "curvature_gap":
        scaled = 4.0 * d.margin
    elif clause == "sign_split":
        scaled = d.margin / e.B0
    else:
        scaled = 0.0
    w_zero = all(v == 0.0 for v in (t.w_under_plus, t.w_over_plus, t.w_under_minus, t.w_over_minus))
    limits_exist = t.b_under_plus == t.b_over_plus and t.b_under_minus == t.b_over_minus
    limit_clause = bool(w_zero and limits_exist and t.b_under_plus != t.b_under_minus)
    return LayerACResult(d, clause, swapped, float(scaled), limit_clause)


@dataclass(frozen=True)
class LayerGeometry:
    half_width: float
    u: float = 0.0

    def __post_init__(self):
        if not self.half_width > 0:
            raise ProfileError("layer half-width a must be positive")
        if not -1.0 < self.u < 1.0:
            raise ProfileError("normal coordinate u must lie in (-1, 1)")


def layer_potential_V(c: CurveSpec, geom: LayerGeometry, s, u: float | None = None, *,
                      method: str = "fd"):
    """Curvature-induced potential of the straightened layer at (s, u).

    V = -kappa^2/(4 f^2) - a u kappa''/(2 f^3) - 5 a^2 u^2 kappa'^2/(4 f^4) with
    f = 1 - a u kappa. Curvature derivatives come from the sample tables
    (finite differences by default). Warns with ``JoinWarning`` near points
    where a piecewise curve's curvature jumps.
    """
    a = geom.half_width
    u = geom.u if u is None else float(u)
    if not -1.0 < u < 1.0:
        raise ProfileError("normal coordinate u must lie in (-1, 1)")
    table = curvature(c, method)
    kmax = float(np.max(table.kappa))
    if a * kmax >= 1.0:
        raise ProfileError(f"layer too thick: a * max(kappa) = {a * kmax:.4g} >= 1")
    s_arr = np.asarray(s, dtype=float)
    if c.joins:
        near = np.min(np.abs(s_arr.reshape(-1, 1) - np.asarray(c.joins)[None, :]))
        if near < 3 * c.ds:
            warnings.warn(f"V(s, u) evaluated within {near:.3g} of a curvature join; "
                          "kappa'' does not exist there", JoinWarning, stacklevel=2)
    k = np.interp(s_arr, table.s, table.kappa)
    kd = np.interp(s_arr, table.s, table.kappa_dot)
    kdd = np.interp(s_arr, table.s, table.kappa_ddot)
    f = 1.0 - a * u * k
    if np.any(f <= 0):
        raise ProfileError("f_a(s, u) <= 0: layer geometry invariant broken")
    v = -0.25 * k ** 2 / f ** 2 - 0.5 * a * u * kdd / f ** 3 - 1.25 * a ** 2 * u ** 2 * kd ** 2 / f ** 4
    return float(v) if v.ndim == 0 else v


def layer_bands(e: EffectiveProfile, xi_grid, k: int, opts: SolverOptions | None = None) -> BandSweep:
    return sweep(e.b_eff, e.w_eff, xi_grid, k, opts, tails=e.tails)


def load_curve_csv(path) -> CurveSpec:
    """Read columns s, x, z (header row required)."""
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    try:
        s = [float(r["s"]) for r in rows]
        x = [float(r["x"]) for r in rows]
        z = [float(r["z"]) for r in rows]
    except (KeyError, TypeError, ValueError) as exc:
        raise ProfileError(f"{path}: curve CSV needs numeric columns s,x,z ({exc})") from exc
    return curve_from_samples(s, x, z, name=str(path))


def write_curve_csv(c: CurveSpec, path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("s,x,z\n")
        for row in zip(c.s, c.x, c.z):
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")


def write_effective_profile_csv(e: EffectiveProfile, path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("s,b_eff,w_eff,kappa\n")
        for row in zip(e.b_eff.x, e.b_eff.y, e.w_eff.y, e.kappa.y):
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")
