"""Slice densities of self-convolutions, d = 1.

The density profile of order m at level n is

    Y_n(u) = beta_n^m * H^{m-1}( {x_1 + ... + x_m = u}  intersect  A_n^m ),

a sum of identical cross-section kernels over the product cubes of the
surviving intervals.  The kernel depends on the intervals only through
the sum of their indices, so the whole profile reduces to the integer
autocorrelation counts c_m(s) = #{(i_1..i_m) in A_n^m : sum i = s},
computed exactly via FFT and rounded back to integers.  The profile is
piecewise linear (m = 2) or piecewise quadratic (m = 3) between the
M-adic knots u = k M^-n.

Diagnostics that need actual tuples (dependency graphs, martingale
increments) enumerate the fiber cubes directly.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field

import numpy as np
from scipy import fft as sfft
from scipy import stats

from .cubes import CubeIndex
from .errors import BudgetError, DimensionError, LevelError, ParameterError
from .realization import Realization

SQRT2 = math.sqrt(2.0)
SQRT3 = math.sqrt(3.0)
SQRT5 = math.sqrt(5.0)

GRID_POINT_CAP = 2**20 + 1


# ---------------------------------------------------------------------------
# exact cross-section geometry of a single box


def chord_length(a: float, b: float, h: float, u: float | np.ndarray):
    """Length of {x + y = u} inside the square [a,a+h] x [b,b+h].

    Equals sqrt(2) * max(0, h - |u - (a+b+h)|); Lipschitz in u with
    constant sqrt(2), symmetric in (a, b).
    """
    if h <= 0:
        raise ParameterError(f"square side must be positive, got {h}")
    return SQRT2 * np.maximum(0.0, h - np.abs(np.asarray(u, dtype=float) - (a + b + h)))


def sum3_density(t: float | np.ndarray) -> np.ndarray:
    """Density of the sum of three independent uniforms on [0,1]."""
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    m1 = (t >= 0) & (t < 1)
    m2 = (t >= 1) & (t < 2)
    m3 = (t >= 2) & (t <= 3)
    out[m1] = 0.5 * t[m1] ** 2
    out[m2] = 0.5 * (-2.0 * t[m2] ** 2 + 6.0 * t[m2] - 3.0)
    out[m3] = 0.5 * (3.0 - t[m3]) ** 2
    return out


def plane_section_area(a: float, b: float, c: float, h: float, u: float | np.ndarray):
    """Area of {x + y + z = u} inside the cube with corner (a,b,c), side h.

    sqrt(3) h^2 p3((u - a - b - c)/h) with p3 the sum-of-three-uniforms
    density: continuous, piecewise quadratic, supported on a width-3h window.
    """
    if h <= 0:
        raise ParameterError(f"cube side must be positive, got {h}")
    t = (np.asarray(u, dtype=float) - (a + b + c)) / h
    return SQRT3 * h * h * sum3_density(t)


# ---------------------------------------------------------------------------
# integer sum-counts via FFT (exact after rounding)


def _indicator(r: Realization, n: int) -> np.ndarray:
    if r.params.d != 1:
        raise DimensionError("slice profiles are defined for d = 1 only")
    L = r.params.M**n
    f = np.zeros(L, dtype=np.float64)
    f[r.level(n)] = 1.0
    return f


def _exact_counts(raw: np.ndarray) -> np.ndarray:
    counts = np.rint(raw)
    if np.max(np.abs(raw - counts)) > 1e-5:
        raise ArithmeticError("FFT convolution drifted from integer counts")
    np.maximum(counts, 0.0, out=counts)
    return counts


def pair_sum_counts(r: Realization, n: int, strides: tuple[int, int] = (1, 1)) -> np.ndarray:
    """c(t) = #{(i, j) in A_n^2 : strides[0]*i + strides[1]*j = t}, exact."""
    f = _indicator(r, n)
    L = f.size
    sa, sb = strides
    size = sa * (L - 1) + sb * (L - 1) + 1
    nfft = sfft.next_fast_len(size)
    fa = f if sa == 1 else _upsample(f, sa)
    fb = f if sb == 1 else _upsample(f, sb)
    conv = sfft.irfft(sfft.rfft(fa, nfft) * sfft.rfft(fb, nfft), nfft)[:size]
    return _exact_counts(conv)


def triple_sum_counts(r: Realization, n: int) -> np.ndarray:
    """c3(s) = #{(i, j, k) in A_n^3 : i + j + k = s}, exact."""
    f = _indicator(r, n)
    L = f.size
    size = 3 * (L - 1) + 1
    nfft = sfft.next_fast_len(size)
    F = sfft.rfft(f, nfft)
    conv = sfft.irfft(F * F * F, nfft)[:size]
    return _exact_counts(conv)


def _upsample(f: np.ndarray, stride: int) -> np.ndarray:
    g = np.zeros(stride * (f.size - 1) + 1, dtype=np.float64)
    g[::stride] = f
    return g


# ---------------------------------------------------------------------------
# profiles


@dataclass
class SliceProfile:
    """Sampled slice density Y_n(u) on a u-grid."""

    order: int
    level: int
    grid: np.ndarray
    values: np.ndarray
    beta_n: float
    M: int
    mass: float
    meta: dict = field(default_factory=dict)

    def lipschitz_bound(self) -> float:
        """A-priori bound on |dY/du|: 3 beta^2 M^n (m=2), 3 sqrt(3) beta^3 M^n (m=3)."""
        if self.order == 2:
            return 3.0 * self.beta_n**2 * float(self.M) ** self.level
        return 3.0 * SQRT3 * self.beta_n**3 * float(self.M) ** self.level

    def spacing(self) -> float:
        return float(np.max(np.diff(self.grid))) if self.grid.size > 1 else 0.0

    def sup_with_slack(self) -> tuple[float, float]:
        """Certified interval for sup_u Y: [grid sup, grid sup + L * spacing]."""
        s = float(np.max(self.values))
        return s, s + self.lipschitz_bound() * self.spacing()

    def certified_sup_slack(self) -> float:
        return self.lipschitz_bound() * self.spacing()

    def integral(self) -> float:
        """Grid integral: trapezoid (exact for m=2 on knot grids), Simpson for m=3."""
        if self.order == 3 and self.grid.size % 2 == 1:
            from scipy.integrate import simpson

            return float(simpson(self.values, x=self.grid))
        return float(np.trapezoid(self.values, self.grid))

    def max_affine_residual(self) -> float:
        """Largest deviation of grid values from the chord between enclosing knots.

        Zero (to rounding) for m = 2: the profile is linear on every M-adic cell.
        """
        h = float(self.M) ** (-self.level)
        cells = np.floor(self.grid / h + 1e-12).astype(np.int64)
        worst = 0.0
        for cell in np.unique(cells):
            sel = cells == cell
            if np.count_nonzero(sel) < 3:
                continue
            x, y = self.grid[sel], self.values[sel]
            slope = (y[-1] - y[0]) / (x[-1] - x[0]) if x[-1] > x[0] else 0.0
            worst = max(worst, float(np.max(np.abs(y - (y[0] + slope * (x - x[0]))))))
        return worst


def _lookup(counts: np.ndarray, s: np.ndarray) -> np.ndarray:
    out = np.zeros(s.shape, dtype=np.float64)
    ok = (s >= 0) & (s < counts.size)
    out[ok] = counts[s[ok]]
    return out


def _eval_order2(counts: np.ndarray, grid: np.ndarray, h: float, scale: float) -> np.ndarray:
    v = grid / h
    idx = np.floor(v).astype(np.int64)
    frac = v - idx
    return scale * ((1.0 - frac) * _lookup(counts, idx - 1) + frac * _lookup(counts, idx))


def _eval_kernel3(counts: np.ndarray, grid: np.ndarray, h: float, scale: float, kernel) -> np.ndarray:
    v = grid / h
    idx = np.floor(v).astype(np.int64)
    frac = v - idx
    out = np.zeros_like(grid, dtype=np.float64)
    for k, kfun in enumerate(kernel):
        s = idx - k
        ok = (s >= 0) & (s < counts.size)
        out[ok] += counts[s[ok]] * kfun(frac[ok])
    return scale * out


def slice_profile(
    r: Realization,
    order: int,
    n: int,
    grid: np.ndarray | None = None,
    gamma_tilde: float | None = None,
) -> SliceProfile:
    """Exact slice density of the order-m self-convolution on a u-grid."""
    if order not in (2, 3):
        raise ParameterError(f"convolution order must be 2 or 3, got {order}")
    if r.params.d != 1:
        raise DimensionError("slice profiles are defined for d = 1 only")
    M = r.params.M
    h = float(M) ** (-n)
    beta = r.beta(n)
    meta: dict = {}
    if grid is None:
        grid, meta = default_grid(r, order, n, gamma_tilde=gamma_tilde)
    grid = np.asarray(grid, dtype=np.float64)
    if order == 2:
        c2 = pair_sum_counts(r, n)
        vals = _eval_order2(c2, grid, h, scale=SQRT2 * beta * beta * h)
    else:
        c3 = triple_sum_counts(r, n)
        kernel = (
            lambda f: 0.5 * f * f,
            lambda f: 0.5 * (-2.0 * (f + 1.0) ** 2 + 6.0 * (f + 1.0) - 3.0),
            lambda f: 0.5 * (1.0 - f) ** 2,
        )
        vals = _eval_kernel3(c3, grid, h, scale=SQRT3 * beta**3 * h * h, kernel=kernel)
    return SliceProfile(
        order=order,
        level=n,
        grid=grid,
        values=vals,
        beta_n=beta,
        M=M,
        mass=r.total_mass(n),
        meta=meta,
    )


def default_grid(
    r: Realization,
    order: int,
    n: int,
    gamma_tilde: float | None = None,
    max_points: int = GRID_POINT_CAP,
) -> tuple[np.ndarray, dict]:
    """Uniform grid with the theoretical spacing, capped at 2^20 + 1 points.

    Target spacing M^(-n(gamma+d)) beta_{n+1}^-2 for order 2 and
    M^(-n(gamma+2d)) beta_{n+1}^-3 for order 3; the cap (recorded in the
    metadata) binds long before desk-scale levels run out.
    """
    d = r.params.d
    if gamma_tilde is None:
        gamma_tilde = min(1.0, max(0.05, d / 2.0 - r.params.alpha_hi))
    logM = math.log(r.params.M)
    logb = r.params.beta.log_value(n + 1)
    if order == 2:
        log_delta = -n * (gamma_tilde + d) * logM - 2.0 * logb
    else:
        log_delta = -n * (gamma_tilde + 2 * d) * logM - 3.0 * logb
    span = float(order)
    # points needed for the target spacing, computed in logs to avoid overflow
    log_pts = math.log(span) - log_delta
    capped = log_pts > math.log(max_points - 1)
    npts = max_points if capped else int(math.ceil(math.exp(log_pts))) + 1
    grid = np.linspace(0.0, span, npts)
    meta = {
        "gamma_tilde": gamma_tilde,
        "delta_target": math.exp(log_delta),
        "spacing": span / (npts - 1),
        "capped": capped,
        "points": npts,
    }
    return grid, meta


def knot_grid(M: int, n: int, order: int, refine: int = 2) -> np.ndarray:
    """Uniform grid containing every M-adic knot of the level-n profile."""
    L = M**n
    return np.linspace(0.0, float(order), order * L * refine + 1)


def profile_sup_exact(r: Realization, n: int) -> float:
    """Exact sup_u of the order-2 profile (attained at a knot)."""
    c2 = pair_sum_counts(r, n)
    h = float(r.params.M) ** (-n)
    return float(SQRT2 * r.beta(n) ** 2 * h * np.max(c2)) if c2.size else 0.0


# ---------------------------------------------------------------------------
# marginal line profiles over the three line families


LINE_KINDS = ("x+y", "2x+y", "x+2y")


def marginal_line_profile(r: Realization, kind: str, n: int, u: float) -> float:
    """Integral of the product density over one line of the family.

    For x+y = u this is the order-2 slice value; the tilted families carry
    the sqrt(5) length element of a slope-2 line.
    """
    return float(marginal_line_profile_grid(r, kind, n, np.asarray([u]))[0])


def marginal_line_profile_grid(r: Realization, kind: str, n: int, us: np.ndarray) -> np.ndarray:
    if kind not in LINE_KINDS:
        raise ParameterError(f"line kind must be one of {LINE_KINDS}, got {kind!r}")
    if r.params.d != 1:
        raise DimensionError("line profiles are defined for d = 1 only")
    us = np.asarray(us, dtype=np.float64)
    M = r.params.M
    h = float(M) ** (-n)
    beta = r.beta(n)
    if kind == "x+y":
        c = pair_sum_counts(r, n)
        return _eval_order2(c, us, h, scale=SQRT2 * beta * beta * h)
    strides = (2, 1) if kind == "2x+y" else (1, 2)
    c = pair_sum_counts(r, n, strides=strides)
    kernel = (
        lambda f: 0.5 * f,
        lambda f: np.full_like(f, 0.5),
        lambda f: 0.5 * (1.0 - f),
    )
    return _eval_kernel3(c, us, h, scale=SQRT5 * beta * beta * h, kernel=kernel)


def line_profile_sup(r: Realization, n: int) -> float:
    """1 + sup over all three line families (exact: profiles are piecewise linear)."""
    M = r.params.M
    sup = 0.0
    for kind, span in (("x+y", 2), ("2x+y", 3), ("x+2y", 3)):
        knots = np.arange(span * M**n + 1, dtype=np.float64) * float(M) ** (-n)
        sup = max(sup, float(np.max(marginal_line_profile_grid(r, kind, n, knots))))
    return 1.0 + sup


# ---------------------------------------------------------------------------
# fiber cube enumeration, dependency graphs, increments


def _fiber_pairs(r: Realization, n: int, u: float) -> list[tuple[int, int]]:
    """All (i, j) in A_n^2 whose product square meets {x+y=u} with positive length."""
    A = r.level(n)
    v = u * float(r.params.M) ** n
    out = []
    for i in A.tolist():
        lo = np.searchsorted(A, v - 2.0 - i, side="right")
        hi = np.searchsorted(A, v - i, side="left")
        for j in A[lo:hi].tolist():
            out.append((i, j))
    return out


@dataclass(frozen=True)
class GraphSummary:
    order: int
    level: int
    u: float
    vertex_count: int
    max_degree: int
    semidiagonal_count: int | None = None
    diagonal_present: bool | None = None


def dependency_graph(r: Realization, u: float, n: int, order: int = 2) -> GraphSummary:
    """Summary of the conditional-dependency graph of the fiber product cubes.

    Order 2: vertices are off-diagonal surviving squares meeting the line
    (the diagonal square has a biased increment and is excluded); edges join
    squares sharing a factor interval.  Order 3 reports the semidiagonal
    cube count alongside the maximum degree.
    """
    if order == 2:
        pairs = _fiber_pairs(r, n, u)
        diag = any(i == j for i, j in pairs)
        verts = [(i, j) for i, j in pairs if i != j]
        first: dict[int, list[int]] = {}
        second: dict[int, list[int]] = {}
        for t, (i, j) in enumerate(verts):
            first.setdefault(i, []).append(t)
            second.setdefault(j, []).append(t)
        maxdeg = 0
        for t, (i, j) in enumerate(verts):
            nb = set(first.get(i, [])) | set(second.get(i, [])) | set(first.get(j, [])) | set(second.get(j, []))
            nb.discard(t)
            maxdeg = max(maxdeg, len(nb))
        return GraphSummary(2, n, u, len(verts), maxdeg, None, diag)
    if order != 3:
        raise ParameterError(f"dependency graphs support orders 2 and 3, got {order}")
    A = r.level(n)
    if A.size > 4096:
        raise BudgetError(f"order-3 enumeration limited to N_n <= 4096, got {A.size}")
    v = u * float(r.params.M) ** n
    verts: list[tuple[int, int, int]] = []
    for i in A.tolist():
        for j in A.tolist():
            lo = np.searchsorted(A, v - 3.0 - i - j, side="right")
            hi = np.searchsorted(A, v - i - j, side="left")
            for k in A[lo:hi].tolist():
                verts.append((i, j, k))
                if len(verts) > 2_000_000:
                    raise BudgetError("order-3 fiber exceeds the vertex budget")
    cnt1: Counter = Counter()
    cnt2: Counter = Counter()
    cnt3: Counter = Counter()
    dsets = []
    for q in verts:
        ds = tuple(sorted(set(q)))
        dsets.append(ds)
        for x in ds:
            cnt1[x] += 1
        if len(ds) >= 2:
            for a in range(len(ds)):
                for b in range(a + 1, len(ds)):
                    cnt2[(ds[a], ds[b])] += 1
        if len(ds) == 3:
            cnt3[ds] += 1
    maxdeg = 0
    semi = 0
    for q, ds in zip(verts, dsets):
        if len(ds) < 3:
            semi += 1
        deg = sum(cnt1[x] for x in ds)
        for a in range(len(ds)):
            for b in range(a + 1, len(ds)):
                deg -= cnt2[(ds[a], ds[b])]
        if len(ds) == 3:
            deg += cnt3[ds]
        deg -= 1  # the vertex itself
        maxdeg = max(maxdeg, deg)
    return GraphSummary(3, n, u, len(verts), maxdeg, semi, None)


@dataclass(frozen=True)
class IncrementTerm:
    """One martingale increment X_Q over a fiber product square."""

    cube: CubeIndex
    value: float
    is_diagonal: bool
    parent_chord: float


def increment_decomposition(r: Realization, u: float, n: int) -> list[IncrementTerm]:
    """Per-square decomposition of Y_{n+1}(u) - Y_n(u) (order 2).

    Terms sum to the profile difference exactly; the unique diagonal
    square (biased conditional mean) is flagged.
    """
    if n + 1 > r.depth:
        raise LevelError(f"need levels {n} and {n + 1}; depth is {r.depth}")
    M = r.params.M
    h = float(M) ** (-n)
    hc = h / M
    b_n = r.beta(n)
    b_n1 = r.beta(n + 1)
    B = r.level(n + 1)
    terms = []
    for i, j in _fiber_pairs(r, n, u):
        ci = B[np.searchsorted(B, i * M) : np.searchsorted(B, (i + 1) * M)]
        cj = B[np.searchsorted(B, j * M) : np.searchsorted(B, (j + 1) * M)]
        child_sum = 0.0
        for ii in ci.tolist():
            for jj in cj.tolist():
                child_sum += float(chord_length(ii * hc, jj * hc, hc, u))
        parent = float(chord_length(i * h, j * h, h, u))
        value = b_n1 * b_n1 * child_sum - b_n * b_n * parent
        terms.append(IncrementTerm(CubeIndex(n, (i, j)), value, i == j, parent))
    return terms


# ---------------------------------------------------------------------------
# concentration calculator and Hoelder machinery


def hoeffding_janson_bound(delta: int, count: int, R: float, rho: float) -> float:
    """Tail bound 2 exp(-2 rho^2 / ((delta+1) count R^2)) for bounded sums
    with a dependency graph of degree delta."""
    if delta < 0 or count < 1:
        raise ParameterError("need delta >= 0 and count >= 1")
    if R <= 0 or rho <= 0:
        raise ParameterError("need R > 0 and rho > 0")
    return 2.0 * math.exp(-2.0 * rho * rho / ((delta + 1) * count * R * R))


def holder_bootstrap(gamma_tilde: float, steps: int) -> list[float]:
    """Iterates gamma_0 = 0, gamma_{m+1} = g/(1 + g - gamma_m); increases to g."""
    if not (0.0 < gamma_tilde <= 1.0):
        raise ParameterError(f"gamma_tilde must be in (0, 1], got {gamma_tilde}")
    if steps < 0:
        raise ParameterError("steps must be >= 0")
    out = [0.0]
    for _ in range(steps):
        out.append(gamma_tilde / (1.0 + gamma_tilde - out[-1]))
    return out


def holder_target(order: int, d: int, alpha_hi: float) -> float:
    """Theoretical Hoelder exponent target for the order-m self-convolution density."""
    if order == 2:
        if not (0.0 <= alpha_hi < d / 2.0):
            raise ParameterError(f"order 2 requires alpha < d/2, got {alpha_hi}")
        return d / 2.0 - alpha_hi
    if order == 3:
        if not (0.0 <= alpha_hi < 2.0 * d / 3.0):
            raise ParameterError(f"order 3 requires alpha < 2d/3, got {alpha_hi}")
        if alpha_hi >= d / 2.0:
            return d - 1.5 * alpha_hi
        return 0.5 * (d - alpha_hi)
    raise ParameterError(f"targets are defined for orders 2 and 3, got {order}")


@dataclass(frozen=True)
class HolderEstimate:
    exponent: float
    stderr: float
    intercept: float
    levels_used: tuple[int, ...]
    zero_increment_levels: tuple[int, ...]


def holder_exponent_estimate(profiles: list[SliceProfile]) -> HolderEstimate:
    """Regression estimate of the increment-decay exponent.

    Fits log_M sup_u |Y_{n+1}(u) - Y_n(u)| / (1 + sqrt(Y_n(u))) against n;
    the reported exponent is minus the slope.  Exact-zero increments
    (deterministic refinement steps) are excluded; if every increment is
    zero the profile sequence is already stationary and +inf is returned.
    """
    if len(profiles) < 3:
        raise LevelError("need at least 3 consecutive levels")
    levels = [p.level for p in profiles]
    if levels != list(range(levels[0], levels[0] + len(levels))):
        raise LevelError("profiles must cover consecutive levels")
    g0 = profiles[0].grid
    for p in profiles[1:]:
        if p.grid.shape != g0.shape or not np.array_equal(p.grid, g0):
            raise ParameterError("profiles must share one common grid")
    M = profiles[0].M
    xs, ys, zeros = [], [], []
    for a, b in zip(profiles[:-1], profiles[1:]):
        dev = float(np.max(np.abs(b.values - a.values) / (1.0 + np.sqrt(a.values))))
        if dev == 0.0:
            zeros.append(a.level)
            continue
        xs.append(a.level)
        ys.append(math.log(dev) / math.log(M))
    if len(xs) < 2:
        return HolderEstimate(math.inf, math.nan, math.nan, tuple(xs), tuple(zeros))
    fit = stats.linregress(xs, ys)
    return HolderEstimate(
        exponent=-float(fit.slope),
        stderr=float(fit.stderr),
        intercept=float(fit.intercept),
        levels_used=tuple(xs),
        zero_increment_levels=tuple(zeros),
    )
