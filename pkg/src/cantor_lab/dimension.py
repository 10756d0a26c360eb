"""Box-counting estimators and survival statistics."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .errors import InsufficientDataError, ParameterError
from .generators import OffspringLaw, generate
from .moments import survival_lower_bound
from .params import ModelParams
from .realization import Realization
from .streams import derive_seed

DEFAULT_N_MIN = 3  # lattice transients dominate the first few levels


@dataclass(frozen=True)
class BoxDimension:
    estimate: float
    stderr: float
    levels: tuple[int, ...]
    counts: tuple[int, ...]


def box_dimension(r: Realization, n_min: int, n_max: int) -> BoxDimension:
    """Least-squares slope of log_M N_n against n over [n_min, n_max]."""
    if not (1 <= n_min < n_max):
        raise ParameterError(f"need 1 <= n_min < n_max, got ({n_min}, {n_max})")
    if n_max > r.depth:
        raise ParameterError(f"n_max {n_max} exceeds generated depth {r.depth}")
    if r.count(n_max) == 0:
        raise ParameterError("realization is empty at n_max")
    levels = list(range(n_min, n_max + 1))
    counts = [r.count(n) for n in levels]
    ys = [math.log(c) / math.log(r.params.M) for c in counts]
    fit = stats.linregress(levels, ys)
    stderr = float(fit.stderr) if len(levels) > 2 else 0.0
    return BoxDimension(float(fit.slope), stderr, tuple(levels), tuple(counts))


def wilson_interval(successes: int, trials: int, z: float = 1.959964) -> tuple[float, float]:
    """95% Wilson score interval for a binomial proportion."""
    if trials <= 0:
        raise ParameterError("trials must be positive")
    p = successes / trials
    denom = 1.0 + z * z / trials
    center = (p + z * z / (2 * trials)) / denom
    half = z * math.sqrt(p * (1.0 - p) / trials + z * z / (4.0 * trials * trials)) / denom
    return max(0.0, center - half), min(1.0, center + half)


@dataclass(frozen=True)
class SurvivalStats:
    trials: int
    survivors: int
    frequency: float
    wilson_lo: float
    wilson_hi: float
    mean_mass: float
    var_mass: float
    lower_bound: float
    bound_ok: bool


def survival_statistics(
    params: ModelParams, law: OffspringLaw, depth: int, trials: int, seed: int
) -> SurvivalStats:
    """Monte Carlo survival frequency at the given depth, with the
    second-moment lower bound it must dominate (within 4 standard errors)."""
    if trials < 100:
        raise ParameterError(f"need at least 100 trials, got {trials}")
    alive = 0
    masses = np.empty(trials)
    for i in range(trials):
        r = generate(params, law, depth, derive_seed(seed, i))
        masses[i] = r.total_mass(depth)
        alive += int(r.count(depth) > 0)
    freq = alive / trials
    lo, hi = wilson_interval(alive, trials)
    bound = survival_lower_bound(params, depth)
    se = math.sqrt(max(freq * (1.0 - freq), 1.0 / trials) / trials)
    return SurvivalStats(
        trials=trials,
        survivors=alive,
        frequency=freq,
        wilson_lo=lo,
        wilson_hi=hi,
        mean_mass=float(np.mean(masses)),
        var_mass=float(np.var(masses, ddof=1)),
        lower_bound=bound,
        bound_ok=freq >= bound - 4.0 * se,
    )


@dataclass
class DimensionReport:
    levels: tuple[int, int]
    box_dim: float
    box_dim_stderr: float
    mass_dim: float
    mass_dim_stderr: float
    energy_dim_bracket: tuple[float, float]
    survival: SurvivalStats
    trials_used: int
    per_trial_box_dim: list[float] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "levels": list(self.levels),
            "box_dim": self.box_dim,
            "box_dim_stderr": self.box_dim_stderr,
            "mass_dim": self.mass_dim,
            "mass_dim_stderr": self.mass_dim_stderr,
            "energy_dim_bracket": list(self.energy_dim_bracket),
            "survival_frequency": self.survival.frequency,
            "survival_wilson": [self.survival.wilson_lo, self.survival.wilson_hi],
            "survival_lower_bound": self.survival.lower_bound,
            "mean_mass": self.survival.mean_mass,
            "var_mass": self.survival.var_mass,
            "trials_used": self.trials_used,
            "per_trial_box_dim": self.per_trial_box_dim,
        }


def energy_dimension_bracket(
    r: Realization, n: int, t_grid=None, growth_tol: float = 0.05
) -> tuple[float, float]:
    """Bracket for the energy-stable exponent range.

    Sweeps t and compares I_t at levels n and n-2; energies stay bounded
    in n for t below the dimension and blow up geometrically above it.
    Returns (last stable t, first unstable t) on the sweep grid.
    """
    from .energy import energy_direct

    d = r.params.d
    if t_grid is None:
        t_grid = np.linspace(0.05, d - 0.05, 19)
    if n < 3:
        raise InsufficientDataError("need n >= 3 for an energy growth diagnostic")
    lo, hi = 0.0, float(d)
    for t in t_grid:
        e_hi = energy_direct(r, n, float(t))
        e_lo = energy_direct(r, n - 2, float(t))
        if e_lo <= 0 or e_hi <= 0:
            break
        growth = math.log(e_hi / e_lo) / (2.0 * math.log(r.params.M))
        if growth <= growth_tol:
            lo = float(t)
        else:
            hi = float(t)
            break
    return lo, hi


def dimension_report(
    params: ModelParams,
    law: OffspringLaw,
    depth: int,
    trials: int,
    seed: int,
    n_min: int = DEFAULT_N_MIN,
    max_estimate_trials: int = 20,
) -> DimensionReport:
    """Aggregate dimension estimates, conditioned on survival."""
    surv = survival_statistics(params, law, depth, max(trials, 100), seed)
    box_dims: list[float] = []
    box_errs: list[float] = []
    mass_dims: list[float] = []
    bracket = (0.0, float(params.d))
    found = 0
    i = 0
    while found < max_estimate_trials and i < 50 * max_estimate_trials:
        r = generate(params, law, depth, derive_seed(seed ^ 0x5EED, i))
        i += 1
        if r.count(depth) == 0:
            continue
        fit = box_dimension(r, n_min, depth)
        box_dims.append(fit.estimate)
        box_errs.append(fit.stderr)
        if params.d == 1:
            from .spectral import mass_decay_exponent

            radii = [float(params.M) ** (-k) for k in range(2, max(3, depth - 1))]
            mfit = mass_decay_exponent(r, depth, radii)
            if not mfit.degenerate:
                mass_dims.append(mfit.exponent)
        if found == 0 and params.d == 1 and depth >= 3 and r.count(depth) <= 4096:
            bracket = energy_dimension_bracket(r, min(depth, 8))
        found += 1
    if not box_dims:
        raise InsufficientDataError("no surviving trial to estimate dimensions from")
    return DimensionReport(
        levels=(n_min, depth),
        box_dim=float(np.median(box_dims)),
        box_dim_stderr=float(np.median(box_errs)),
        mass_dim=float(np.median(mass_dims)) if mass_dims else math.nan,
        mass_dim_stderr=float(np.std(mass_dims) / math.sqrt(len(mass_dims))) if len(mass_dims) > 1 else math.nan,
        energy_dim_bracket=bracket,
        survival=surv,
        trials_used=found,
        per_trial_box_dim=[float(x) for x in box_dims],
    )
