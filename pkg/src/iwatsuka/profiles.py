"""Magnetic-field and electric-potential profiles B(x), W(x).

Every profile is an immutable object that can be evaluated on scalars or
arrays, integrated from the origin in closed form (used by the Landau gauge),
and summarised by its tail bounds: the sup of essential infima and the inf of
essential suprema over half-lines x > a (``plus``) and x < a (``minus``).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import ClassVar, NamedTuple

import numpy as np

from .errors import ProfileError

__all__ = [
    "Profile",
    "Constant",
    "Step",
    "TanhStep",
    "Bump",
    "PiecewiseConstant",
    "Tabulated",
    "TailBounds",
    "ACDecision",
    "CatalogEntry",
    "eval_profile",
    "tail_bounds",
    "ac_condition",
    "builtin_catalog",
    "catalog_entry",
    "profile_from_dict",
    "load_tabulated_csv",
    "PROFILE_KINDS",
    "AC_CONDITIONS",
]


def _as_output(x, values):
    if np.ndim(x) == 0:
        return float(values)
    return values


def _logcosh(y):
    y = np.abs(y)
    return y + np.log1p(np.exp(-2.0 * y)) - math.log(2.0)


class Profile:
    """Base class; subclasses are frozen dataclasses."""

    kind: ClassVar[str] = ""

    def __call__(self, x):
        return _as_output(x, self._eval(np.asarray(x, dtype=float)))

    def integral(self, x):
        """Exact antiderivative normalised to vanish at x = 0."""
        x = np.asarray(x, dtype=float)
        return _as_output(x, self._primitive(x) - self._primitive(np.zeros(())))

    def exact_tails(self):
        """(lo_minus, hi_minus, lo_plus, hi_plus), or None if only sampling is possible."""
        return None

    def sup_abs(self) -> float:
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError

    def _eval(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _primitive(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError


@dataclass(frozen=True)
class Constant(Profile):
    value: float
    kind: ClassVar[str] = "constant"

    def _eval(self, x):
        return np.full(x.shape, float(self.value))

    def _primitive(self, x):
        return self.value * x

    def exact_tails(self):
        c = float(self.value)
        return (c, c, c, c)

    def sup_abs(self):
        return abs(float(self.value))

    def to_dict(self):
        return {"kind": self.kind, "value": self.value}


@dataclass(frozen=True)
class Step(Profile):
    """``left`` for x < x_jump, ``right`` for x >= x_jump."""

    left: float
    right: float
    x_jump: float = 0.0
    kind: ClassVar[str] = "step"

    def _eval(self, x):
        return np.where(x < self.x_jump, float(self.left), float(self.right))

    def _primitive(self, x):
        d = x - self.x_jump
        return np.where(d < 0, self.left * d, self.right * d)

    def exact_tails(self):
        return (self.left, self.left, self.right, self.right)

    def sup_abs(self):
        return max(abs(self.left), abs(self.right))

    def to_dict(self):
        return {"kind": self.kind, "left": self.left, "right": self.right, "x_jump": self.x_jump}


@dataclass(frozen=True)
class TanhStep(Profile):
    """Smooth monotone transition ``left + (right-left)(1+tanh((x-center)/width))/2``."""

    left: float
    right: float
    center: float = 0.0
    width: float = 1.0
    kind: ClassVar[str] = "tanh_step"

    def __post_init__(self):
        if not self.width > 0:
            raise ProfileError(f"tanh_step width must be positive, got {self.width}")

    def _eval(self, x):
        mid = 0.5 * (self.left + self.right)
        half = 0.5 * (self.right - self.left)
        return mid + half * np.tanh((x - self.center) / self.width)

    def _primitive(self, x):
        mid = 0.5 * (self.left + self.right)
        half = 0.5 * (self.right - self.left)
        return mid * x + half * self.width * _logcosh((x - self.center) / self.width)

    def exact_tails(self):
        return (self.left, self.left, self.right, self.right)

    def sup_abs(self):
        return max(abs(self.left), abs(self.right))

    def to_dict(self):
        return {"kind": self.kind, "left": self.left, "right": self.right,
                "center": self.center, "width": self.width}


@dataclass(frozen=True)
class Bump(Profile):
    """``base + amplitude * q(x)**m`` with q(x) = (x-l)(r-x)/((r-l)/2)**2 on [l, r].

    Near the support edges |b(x)| grows like (x - l)**m, the vanishing order
    used in the compactly supported perturbation literature.
    """

    base: float
    amplitude: float
    support_left: float
    support_right: float
    exponent: int = 1
    kind: ClassVar[str] = "bump"
    _poly: np.polynomial.Polynomial = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not self.support_left < self.support_right:
            raise ProfileError("bump support must satisfy support_left < support_right")
        if int(self.exponent) != self.exponent or self.exponent < 1:
            raise ProfileError(f"bump exponent must be an integer >= 1, got {self.exponent}")
        l, r = float(self.support_left), float(self.support_right)
        hw2 = (0.5 * (r - l)) ** 2
        q = np.polynomial.Polynomial([-l * r, l + r, -1.0]) / hw2
        object.__setattr__(self, "_poly", (q ** int(self.exponent)).integ())

    def _shape(self, x):
        l, r = self.support_left, self.support_right
        q = (x - l) * (r - x) / (0.5 * (r - l)) ** 2
        return np.where((x >= l) & (x <= r), np.clip(q, 0.0, None) ** int(self.exponent), 0.0)

    def _eval(self, x):
        return self.base + self.amplitude * self._shape(x)

    def _primitive(self, x):
        xc = np.clip(x, self.support_left, self.support_right)
        return self.base * x + self.amplitude * (self._poly(xc) - self._poly(self.support_left))

    def exact_tails(self):
        return (self.base, self.base, self.base, self.base)

    def sup_abs(self):
        return max(abs(self.base), abs(self.base + self.amplitude))

    def to_dict(self):
        return {"kind": self.kind, "base": self.base, "amplitude": self.amplitude,
                "support_left": self.support_left, "support_right": self.support_right,
                "exponent": self.exponent}


@dataclass(frozen=True)
class PiecewiseConstant(Profile):
    """``values[i]`` on [breakpoints[i-1], breakpoints[i]); one more value than breakpoints."""

    breakpoints: tuple
    values: tuple
    kind: ClassVar[str] = "piecewise_constant"
    _cum: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        bp = np.asarray(self.breakpoints, dtype=float)
        vals = np.asarray(self.values, dtype=float)
        if bp.ndim != 1 or len(bp) < 1:
            raise ProfileError("piecewise_constant needs at least one breakpoint")
        if len(vals) != len(bp) + 1:
            raise ProfileError("piecewise_constant needs len(values) == len(breakpoints) + 1")
        if np.any(np.diff(bp) <= 0):
            raise ProfileError("piecewise_constant breakpoints must be strictly increasing")
        object.__setattr__(self, "breakpoints", tuple(bp.tolist()))
        object.__setattr__(self, "values", tuple(vals.tolist()))
        # primitive at each breakpoint, anchored at breakpoints[0]
        cum = np.concatenate([[0.0], np.cumsum(vals[1:-1] * np.diff(bp))])
        object.__setattr__(self, "_cum", cum)

    def _eval(self, x):
        idx = np.searchsorted(np.asarray(self.breakpoints), x, side="right")
        return np.asarray(self.values)[idx]

    def _primitive(self, x):
        bp = np.asarray(self.breakpoints)
        vals = np.asarray(self.values)
        idx = np.searchsorted(bp, x, side="right")
        anchor = np.where(idx == 0, bp[0], bp[np.maximum(idx - 1, 0)])
        base = np.where(idx == 0, 0.0, self._cum[np.maximum(idx - 1, 0)])
        return base + vals[idx] * (x - anchor)

    def exact_tails(self):
        return (self.values[0], self.values[0], self.values[-1], self.values[-1])

    def sup_abs(self):
        return float(np.max(np.abs(self.values)))

    def to_dict(self):
        return {"kind": self.kind, "breakpoints": list(self.breakpoints), "values": list(self.values)}


@dataclass(frozen=True)
class Tabulated(Profile):
    """Linear interpolation of samples, constant declared tail values outside them.

    Tails are extended by constants rather than by linear extrapolation because
    only the asymptotic essential bounds of a field matter for the spectrum.
    """

    x: tuple
    y: tuple
    left_tail: float
    right_tail: float
    kind: ClassVar[str] = "tabulated"
    _xs: np.ndarray = field(init=False, repr=False, compare=False)
    _ys: np.ndarray = field(init=False, repr=False, compare=False)
    _cum: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        xs = np.asarray(self.x, dtype=float)
        ys = np.asarray(self.y, dtype=float)
        if xs.ndim != 1 or ys.ndim != 1 or len(xs) != len(ys):
            raise ProfileError("tabulated profile needs 1-d x and y samples of equal length")
        if len(xs) < 2:
            raise ProfileError("tabulated profile needs at least two samples")
        if np.any(np.diff(xs) <= 0):
            bad = int(np.argmin(np.diff(xs)))
            raise ProfileError(f"tabulated x samples must be strictly increasing (index {bad + 1})")
        if not (np.all(np.isfinite(xs)) and np.all(np.isfinite(ys))):
            raise ProfileError("tabulated samples must be finite")
        xs.setflags(write=False)
        ys.setflags(write=False)
        object.__setattr__(self, "_xs", xs)
        object.__setattr__(self, "_ys", ys)
        object.__setattr__(self, "x", tuple(xs.tolist()))
        object.__setattr__(self, "y", tuple(ys.tolist()))
        # trapezoid rule is exact for the piecewise-linear interpolant
        cum = np.concatenate([[0.0], np.cumsum(0.5 * (ys[1:] + ys[:-1]) * np.diff(xs))])
        cum.setflags(write=False)
        object.__setattr__(self, "_cum", cum)

    def _eval(self, x):
        xs, ys = self._xs, self._ys
        out = np.interp(x, xs, ys)
        out = np.where(x < xs[0], float(self.left_tail), out)
        return np.where(x > xs[-1], float(self.right_tail), out)

    def _primitive(self, x):
        xs, ys, cum = self._xs, self._ys, self._cum
        i = np.clip(np.searchsorted(xs, x, side="right") - 1, 0, len(xs) - 2)
        dx = xs[i + 1] - xs[i]
        t = np.clip(x, xs[0], xs[-1]) - xs[i]
        inside = cum[i] + ys[i] * t + (ys[i + 1] - ys[i]) * t * t / (2.0 * dx)
        left = self.left_tail * np.minimum(x - xs[0], 0.0)
        right = self.right_tail * np.maximum(x - xs[-1], 0.0)
        return inside + left + right

    def sup_abs(self):
        return float(max(np.max(np.abs(self._ys)), abs(self.left_tail), abs(self.right_tail)))

    def to_dict(self):
        return {"kind": self.kind, "x": list(self.x), "y": list(self.y),
                "left_tail": self.left_tail, "right_tail": self.right_tail}


PROFILE_KINDS = {
    cls.kind: cls for cls in (Constant, Step, TanhStep, Bump, PiecewiseConstant, Tabulated)
}

_PROFILE_KEYS = {
    "constant": ({"value"}, set()),
    "step": ({"left", "right"}, {"x_jump"}),
    "tanh_step": ({"left", "right"}, {"center", "width"}),
    "bump": ({"base", "amplitude", "support_left", "support_right"}, {"exponent"}),
    "piecewise_constant": ({"breakpoints", "values"}, set()),
    "tabulated": ({"left_tail", "right_tail"}, {"x", "y", "csv"}),
}


def load_tabulated_csv(path, left_tail: float, right_tail: float) -> Tabulated:
    """Read a two-column (x, y) CSV; a non-numeric first row is treated as a header."""
    xs, ys = [], []
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh)):
            if not row or row[0].lstrip().startswith("#"):
                continue
            try:
                xv, yv = float(row[0]), float(row[1])
            except (ValueError, IndexError):
                if lineno == 0:
                    continue
                raise ProfileError(f"{path}:{lineno + 1}: expected two numeric columns")
            xs.append(xv)
            ys.append(yv)
    return Tabulated(tuple(xs), tuple(ys), left_tail, right_tail)


def profile_from_dict(d: dict, base_dir=None) -> Profile:
    """Build a profile from its tagged-object form, e.g. ``{"kind": "step", ...}``.

    ``left``/``right`` aliases are accepted for the step kinds; tabulated
    profiles take inline ``x``/``y`` lists or a ``csv`` path resolved against
    ``base_dir``.
    """
    if not isinstance(d, dict) or "kind" not in d:
        raise ProfileError("profile must be an object with a 'kind' key")
    kind = d["kind"]
    if kind not in _PROFILE_KEYS:
        raise ProfileError(f"unknown profile kind {kind!r}; allowed kinds: {', '.join(PROFILE_KINDS)}")
    required, optional = _PROFILE_KEYS[kind]
    keys = set(d) - {"kind"}
    if kind == "bump" and "m" in keys:
        keys = (keys - {"m"}) | {"exponent"}
        d = {**{k: v for k, v in d.items() if k != "m"}, "exponent": d["m"]}
    missing = required - keys
    unknown = keys - required - optional
    if missing:
        raise ProfileError(f"profile kind {kind!r} is missing keys: {sorted(missing)}")
    if unknown:
        raise ProfileError(f"profile kind {kind!r} got unknown keys: {sorted(unknown)}; "
                           f"expected {sorted(required | optional)}")
    args = {k: v for k, v in d.items() if k != "kind"}
    try:
        if kind == "tabulated":
            if "csv" in args:
                if "x" in args or "y" in args:
                    raise ProfileError("tabulated profile takes either 'csv' or inline 'x'/'y', not both")
                import os
                path = args["csv"]
                if base_dir is not None and not os.path.isabs(path):
                    path = os.path.join(base_dir, path)
                return load_tabulated_csv(path, float(args["left_tail"]), float(args["right_tail"]))
            if "x" not in args or "y" not in args:
                raise ProfileError("tabulated profile needs 'x' and 'y' lists (or 'csv')")
            return Tabulated(tuple(args["x"]), tuple(args["y"]),
                             float(args["left_tail"]), float(args["right_tail"]))
        if kind == "piecewise_constant":
            return PiecewiseConstant(tuple(args["breakpoints"]), tuple(args["values"]))
        if kind == "bump" and float(args.get("exponent", 1)).is_integer():
            args["exponent"] = int(args.get("exponent", 1))
        return PROFILE_KINDS[kind](**{k: (v if k == "exponent" else float(v)) for k, v in args.items()})
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ProfileError):
            raise
        raise ProfileError(f"bad value in {kind!r} profile: {exc}") from exc


def eval_profile(p: Profile, x):
    return p(x)


@dataclass(frozen=True)
class TailBounds:
    """Asymptotic essential bounds of B and W on both half-lines.

    ``provenance`` is ``"exact"`` when every bound comes from a closed form and
    ``"sampled"`` when at least one was estimated on a finite window, in which
    case any verdict built on it is heuristic.
    """

    b_under_plus: float
    b_over_plus: float
    b_under_minus: float
    b_over_minus: float
    w_under_plus: float
    w_over_plus: float
    w_under_minus: float
    w_over_minus: float
    provenance: str = "exact"
    window: float | None = None
    n_points: int | None = None

    def __post_init__(self):
        for lo, hi, name in ((self.b_under_plus, self.b_over_plus, "b plus"),
                             (self.b_under_minus, self.b_over_minus, "b minus"),
                             (self.w_under_plus, self.w_over_plus, "w plus"),
                             (self.w_under_minus, self.w_over_minus, "w minus")):
            if lo > hi:
                raise ProfileError(f"tail bounds inconsistent for {name}: {lo} > {hi}")

    def swapped(self) -> "TailBounds":
        """Exchange the roles of the two half-lines."""
        return TailBounds(self.b_under_minus, self.b_over_minus, self.b_under_plus, self.b_over_plus,
                          self.w_under_minus, self.w_over_minus, self.w_under_plus, self.w_over_plus,
                          self.provenance, self.window, self.n_points)

    def shift_w(self, c: float) -> "TailBounds":
        return TailBounds(self.b_under_plus, self.b_over_plus, self.b_under_minus, self.b_over_minus,
                          self.w_under_plus + c, self.w_over_plus + c,
                          self.w_under_minus + c, self.w_over_minus + c,
                          self.provenance, self.window, self.n_points)

    def side(self, which: str):
        """(b_under, b_over, w_under, w_over) for ``which`` in {"plus", "minus"}."""
        if which == "plus":
            return self.b_under_plus, self.b_over_plus, self.w_under_plus, self.w_over_plus
        if which == "minus":
            return self.b_under_minus, self.b_over_minus, self.w_under_minus, self.w_over_minus
        raise ValueError(f"side must be 'plus' or 'minus', got {which!r}")

    @property
    def b_min(self) -> float:
        return min(self.b_under_plus, self.b_under_minus)

    @property
    def b_max(self) -> float:
        return max(self.b_over_plus, self.b_over_minus)

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def _sampled_tails(p: Profile, window: float, n_points: int, plus_anchor, minus_anchor):
    if isinstance(p, Tabulated):
        plus_anchor = p.x[-1] if plus_anchor is None else plus_anchor
        minus_anchor = p.x[0] if minus_anchor is None else minus_anchor
    else:
        plus_anchor = 0.0 if plus_anchor is None else plus_anchor
        minus_anchor = 0.0 if minus_anchor is None else minus_anchor
    # open at the anchor: (a, a + window] and [a - window, a)
    t = np.linspace(0.0, window, n_points + 1)[1:]
    right = p(plus_anchor + t)
    left = p(minus_anchor - t)
    return float(left.min()), float(left.max()), float(right.min()), float(right.max())


def tail_bounds(b: Profile, w: Profile, *, window: float = 100.0, n_points: int = 100_000,
                plus_anchor: float | None = None, minus_anchor: float | None = None) -> TailBounds:
    """Tail bounds of the pair (B, W).

    Analytic kinds give exact values. Tabulated kinds are sampled on
    ``(plus_anchor, plus_anchor + window]`` and ``[minus_anchor - window, minus_anchor)``,
    anchored by default at the last and first sample respectively.
    """
    vals = []
    exact = True
    for p in (b, w):
        t = p.exact_tails()
        if t is None:
            exact = False
            t = _sampled_tails(p, window, n_points, plus_anchor, minus_anchor)
        vals.append(t)
    (blm, bhm, blp, bhp), (wlm, whm, wlp, whp) = vals
    if exact:
        return TailBounds(blp, bhp, blm, bhm, wlp, whp, wlm, whm)
    return TailBounds(blp, bhp, blm, bhm, wlp, whp, wlm, whm,
                      provenance="sampled", window=window, n_points=n_points)


AC_CONDITIONS = ("cond_1_3", "cond_1_4", "cond_1_3_swapped", "cond_1_4_swapped", "none")


@dataclass(frozen=True)
class ACDecision:
    verdict: bool
    matched_condition: str
    margin: float
    all_matches: tuple = ()
    heuristic: bool = False

    def to_dict(self) -> dict:
        return {"verdict": self.verdict, "matched_condition": self.matched_condition,
                "margin": self.margin, "all_matches": list(self.all_matches),
                "heuristic": self.heuristic}


def _gap_condition(t: TailBounds):
    """Slack of the W-gap inequality, or None when the field part fails."""
    if not (t.b_under_plus > 0 and t.b_under_minus > 0 and t.b_under_plus >= t.b_over_minus):
        return None
    slack = (t.b_under_plus - t.b_over_minus) - (t.w_over_minus - t.w_under_plus)
    return slack if slack > 0 else None


def _sign_condition(t: TailBounds):
    if t.b_under_plus > 0 and t.b_over_minus < 0:
        return min(t.b_under_plus, -t.b_over_minus)
    return None


def ac_condition(t: TailBounds) -> ACDecision:
    """Decide the sufficient conditions for absolute continuity from tail bounds.

    Checked in the fixed order cond_1_3, cond_1_4, then both with the half-lines
    exchanged. The gap condition compares the positive-field tails with the
    ``>=`` taken non-strictly and the W-gap inequality strictly. Its margin is
    the slack ``(b_under_plus - b_over_minus) - (w_over_minus - w_under_plus)``;
    for the sign-split condition it is the smaller of ``b_under_plus`` and
    ``-b_over_minus``.
    """
    s = t.swapped()
    checks = (("cond_1_3", _gap_condition(t)), ("cond_1_4", _sign_condition(t)),
              ("cond_1_3_swapped", _gap_condition(s)), ("cond_1_4_swapped", _sign_condition(s)))
    matches = tuple(name for name, slack in checks if slack is not None)
    heuristic = t.provenance != "exact"
    for name, slack in checks:
        if slack is not None:
            return ACDecision(True, name, float(slack), matches, heuristic)
    return ACDecision(False, "none", 0.0, (), heuristic)


class CatalogEntry(NamedTuple):
    name: str
    b: Profile
    w: Profile
    note: str


def builtin_catalog() -> list[CatalogEntry]:
    zero = Constant(0.0)
    return [
        CatalogEntry("landau", Constant(1.0), zero,
                     "constant field; flat Landau levels 2n-1, excluded by strictness"),
        CatalogEntry("iwatsuka-step", Step(1.0, 2.0, 0.0), zero,
                     "magnetic step 1 -> 2: limsup at -inf below liminf at +inf"),
        CatalogEntry("iwatsuka-tanh", TanhStep(1.0, 2.0, 0.0, 1.0), zero,
                     "smooth monotone field 1 -> 2"),
        CatalogEntry("sign-change", TanhStep(-1.0, 1.0, 0.0, 1.0), zero,
                     "field changes sign: negative on the left, positive on the right"),
        CatalogEntry("sign-change-sharp", TanhStep(-1.0, 1.0, 0.0, 0.5), zero,
                     "sharper sign change; vector potential grows on both sides"),
        CatalogEntry("bump-negative", Bump(1.0, -3.0, -1.0, 1.0, 1), zero,
                     "constant field with a compactly supported dip that turns the field negative"),
        CatalogEntry("bump-positive", Bump(1.0, 1.0, -1.0, 1.0, 2), zero,
                     "constant field plus a non-negative compactly supported bump"),
        CatalogEntry("step-electric", Step(1.0, 2.0, 0.0), Step(0.5, 0.0, 0.0),
                     "magnetic step with an electric step of height 0.5 on the left"),
    ]


def catalog_entry(name: str) -> CatalogEntry:
    for entry in builtin_catalog():
        if entry.name == name:
            return entry
    names = ", ".join(e.name for e in builtin_catalog())
    raise ProfileError(f"unknown catalog entry {name!r}; available: {names}")
