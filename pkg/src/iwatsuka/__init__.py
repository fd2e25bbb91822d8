"""Band functions and absolute-continuity diagnostics for Iwatsuka-type magnetic Hamiltonians."""

from .bands import (BandDiagnostics, BandSweep, SandwichReport, diagnose, export_sweep, k_eps_witness,
                    nonconstancy_check, sandwich_check, sweep, tail_check)
from .comparison import (ComparisonSpec, LemmaPotential, comparison_eigs, comparison_potential,
                         convergence_study, lemma_potential_eval, operator_lower_bound_check,
                         shifted_potential)
from .eigensolve import count_below, dense_oracle, eigenvector, lowest_eigenpairs, lowest_eigenvalues
from .errors import (ConfigError, ConvergenceError, EigenvalueCollisionError, IwatsukaError,
                     NonConfiningError, NumericalError, ProfileError)
from .fiber import GridSpec, SolverOptions, assemble_fiber, select_box
from .gauge import GaugeFunction, rebase_gauge, turning_points, vector_potential
from .layer import (CurveSpec, EffectiveProfile, LayerGeometry, circular_bend, curvature,
                    effective_profile, layer_ac_check, layer_bands, layer_potential_V, line,
                    smooth_bend)
from .profiles import (Bump, Constant, PiecewiseConstant, Step, Tabulated, TailBounds,
                       TanhStep, ac_condition, builtin_catalog, catalog_entry, profile_from_dict,
                       tail_bounds)

__version__ = "0.1.0"
