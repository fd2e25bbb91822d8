"""Comparison operators with a harmonic right branch and a linear-slope left branch.

H[alpha] = -d^2/dx^2 + omega^2 (x - alpha)^2 for x >= x0 and
-d^2/dx^2 + (omega_tilde (x - x0) + omega (x0 - alpha))^2 for x < x0. As
alpha -> +inf its n-th eigenvalue tends to the oscillator level (2n - 1) omega.
The same module evaluates the piecewise envelopes that sandwich a fiber
potential far out in the tails.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .eigensolve import lowest_eigenvalues, matrix_scale
from .errors import ProfileError
from .fiber import SolverOptions, assemble_potential, select_box_for_potential
from .profiles import TailBounds

__all__ = ["ComparisonSpec", "LemmaPotential", "BoundCheck", "ConvergenceTable",
           "comparison_potential", "shifted_potential", "comparison_eigs", "convergence_study",
           "lemma_potential_eval", "operator_lower_bound_check", "write_convergence_csv"]


@dataclass(frozen=True)
class ComparisonSpec:
    omega: float
    omega_tilde: float
    x0: float = 0.0
    alpha: float = 0.0

    def __post_init__(self):
        if not (self.omega > 0 and self.omega_tilde > 0):
            raise ProfileError("comparison operator needs omega > 0 and omega_tilde > 0")

    def well(self) -> float:
        """Zero of the comparison potential."""
        if self.alpha >= self.x0:
            return float(self.alpha)
        return float(self.x0 - self.omega * (self.x0 - self.alpha) / self.omega_tilde)


def comparison_potential(spec: ComparisonSpec, x):
    x = np.asarray(x, dtype=float)
    w, wt, x0, a = spec.omega, spec.omega_tilde, spec.x0, spec.alpha
    out = np.where(x >= x0, (w * (x - a)) ** 2, (wt * (x - x0) + w * (x0 - a)) ** 2)
    return float(out) if out.ndim == 0 else out


def shifted_potential(spec: ComparisonSpec, x):
    """Potential of the operator conjugated by psi(x) -> psi(x - alpha)."""
    return comparison_potential(spec, np.asarray(x, dtype=float) + spec.alpha)


def comparison_eigs(spec: ComparisonSpec, k: int, opts: SolverOptions | None = None, *,
                    shifted: bool = False) -> np.ndarray:
    """Lowest ``k`` eigenvalues of the discretised comparison operator.

    ``shifted=True`` diagonalises the unitarily equivalent operator whose
    harmonic branch is centred at the origin; the spectra coincide.
    """
    opts = opts or SolverOptions()
    ell = 1.0 / math.sqrt(min(spec.omega, spec.omega_tilde))
    h_max = opts.h_max if opts.h_max is not None else max(1e-2 * ell, 1e-3)
    shift = spec.alpha if shifted else 0.0

    def V(x):
        return comparison_potential(spec, np.asarray(x) + shift)

    centre = spec.well() - shift
    grid = select_box_for_potential(V, (centre, centre), k, opts.margin, h_max=h_max,
                                    length_scale=ell, decay_action=opts.decay_action)
    m = assemble_potential(V, grid)
    return lowest_eigenvalues(m, k, opts.tol * matrix_scale(m)).values


@dataclass(frozen=True)
class ConvergenceTable:
    omega: float
    omega_tilde: float
    x0: float
    alphas: np.ndarray
    sigma: np.ndarray
    errors: np.ndarray

    @property
    def k(self) -> int:
        return self.sigma.shape[1]

    def nonincreasing_from(self) -> list[int]:
        """Per band, the first alpha index after which the error never increases."""
        out = []
        for n in range(self.k):
            e = self.errors[:, n]
            start = len(e) - 1
            while start > 0 and e[start] <= e[start - 1]:
                start -= 1
            out.append(start)
        return out

    def empirical_rates(self) -> np.ndarray:
        """log(err_i / err_{i+1}) / log(alpha_{i+1} / alpha_i); no order is asserted."""
        with np.errstate(divide="ignore", invalid="ignore"):
            return (np.log(self.errors[:-1] / self.errors[1:])
                    / np.log(self.alphas[1:] / self.alphas[:-1])[:, None])


def convergence_study(omega: float, omega_tilde: float, x0: float, alpha_list, k: int,
                      opts: SolverOptions | None = None) -> ConvergenceTable:
    """sigma_n(alpha) and |sigma_n(alpha) - (2n-1) omega| over increasing alpha.

    The shifted form is used, so once the junction x0 - alpha leaves the box
    the discrete problems coincide with the pure oscillator on the same lattice.
    """
    alphas = np.asarray(alpha_list, dtype=float)
    if alphas.ndim != 1 or len(alphas) == 0 or np.any(np.diff(alphas) <= 0):
        raise ValueError("alpha_list must be non-empty and strictly increasing")
    sigma = np.array([comparison_eigs(ComparisonSpec(omega, omega_tilde, x0, a), k, opts, shifted=True)
                      for a in alphas])
    levels = (2 * np.arange(1, k + 1) - 1) * omega
    return ConvergenceTable(omega, omega_tilde, x0, alphas, sigma, np.abs(sigma - levels))


def write_convergence_csv(table: ConvergenceTable, path) -> None:
    k = table.k
    header = (["alpha"] + [f"sigma_{n}" for n in range(1, k + 1)]
              + [f"err_{n}" for n in range(1, k + 1)])
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(header)
        for a, s, e in zip(table.alphas, table.sigma, table.errors):
            wr.writerow([f"{a:.17g}"] + [f"{v:.17g}" for v in s] + [f"{v:.17g}" for v in e])


@dataclass(frozen=True)
class BoundCheck:
    ok: bool
    violating_x: float | None = None
    reason: str = ""


def operator_lower_bound_check(spec: ComparisonSpec, n_points: int = 20001) -> BoundCheck:
    """Pointwise min(1, wt/w)^2 w^2 x^2 <= shifted potential on a dense grid.

    By monotonicity of the discrete spectrum in the diagonal this is enough for
    the corresponding ordering of eigenvalues. Needs alpha > x0.
    """
    if not spec.alpha > spec.x0:
        return BoundCheck(False, None, f"precondition alpha > x0 violated ({spec.alpha} <= {spec.x0})")
    c = min(1.0, spec.omega_tilde / spec.omega) ** 2
    L = 20.0 + 2.0 * (spec.alpha - spec.x0)
    xs = np.linspace(-L, L, n_points)
    lower = c * (spec.omega * xs) ** 2
    upper = shifted_potential(spec, xs)
    bad = np.flatnonzero(lower > upper * (1.0 + 1e-14) + 1e-300)
    if len(bad):
        return BoundCheck(False, float(xs[bad[0]]), "pointwise inequality fails")
    return BoundCheck(True)


@dataclass(frozen=True)
class LemmaPotential:
    """One of the four piecewise envelopes of the fiber potential.

    ``side="plus"`` is used for xi -> -inf (turning point far right), with a
    harmonic part for x >= -K_eps and a linear continuation beyond; ``minus``
    is its mirror image under x -> -x.
    """

    side: str
    envelope: str
    eps: float
    K_eps: float
    x_xi: float

    def __post_init__(self):
        if self.side not in ("plus", "minus"):
            raise ValueError(f"side must be 'plus' or 'minus', got {self.side!r}")
        if self.envelope not in ("under", "over"):
            raise ValueError(f"envelope must be 'under' or 'over', got {self.envelope!r}")
        if not self.K_eps > 0:
            raise ValueError("K_eps must be positive")

    def slopes(self, t: TailBounds) -> tuple[float, float]:
        """(inner, outer) rates of the envelope read off the tail bounds."""
        tt = t if self.side == "plus" else t.swapped()
        if self.envelope == "under":
            return tt.b_under_plus - 2 * self.eps, t.b_min - self.eps
        return tt.b_over_plus + 2 * self.eps, t.b_max + self.eps


def _check_eps(eps: float, t: TailBounds):
    bound = 0.5 * min(t.b_under_plus, t.b_under_minus)
    if not 0 < eps < bound:
        raise ValueError(f"eps must lie in (0, min(b_under_plus, b_under_minus)/2) = (0, {bound:.6g}), "
                         f"got {eps}")


def lemma_potential_eval(p: LemmaPotential, t: TailBounds, x):
    _check_eps(p.eps, t)
    inner, outer = p.slopes(t)
    x = np.asarray(x, dtype=float)
    # minus side is the plus construction in the reflected variable
    y, y_xi = (x, p.x_xi) if p.side == "plus" else (-x, -p.x_xi)
    K = p.K_eps
    out = np.where(y >= -K, (inner * (y - y_xi)) ** 2,
                   (outer * (y + K) + inner * (-K - y_xi)) ** 2)
    return float(out) if out.ndim == 0 else out
