"""Fourier coefficients of the level-n measures and decay estimation.

Coefficients are exact: the transform of a single M-adic cube indicator
has a closed form, and the lattice sum over surviving cubes is a DFT of
the occupancy vector.  Frequencies congruent mod M^n share that DFT
value, which yields the exact aliasing ladder
mu_hat(k + M^n l) = k/(k + M^n l) * mu_hat(k).

Half-integer samples (a zero-padded DFT) ride along for d = 1: they cost
one extra FFT and give the Fourier-side energy cross-check a non-vacuous
discretization error estimate even when the integer lattice happens to
align with zeros of the transform.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import fft as sfft
from scipy import stats

from .errors import DimensionError, InsufficientDataError, ParameterError
from .realization import Realization


@dataclass
class SpectrumProfile:
    level: int
    M: int
    d: int
    freqs: np.ndarray
    coeffs: np.ndarray
    norm: float
    moments: tuple[float, ...] = ()
    half_freqs: np.ndarray | None = None
    half_coeffs: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    @property
    def k_max(self) -> int:
        if self.d == 1:
            return int(np.max(np.abs(self.freqs)))
        return int(np.max(np.abs(self.freqs)))

    def coeff(self, k: int) -> complex:
        idx = np.flatnonzero(self.freqs == k)
        if idx.size == 0:
            raise ParameterError(f"frequency {k} not in profile")
        return complex(self.coeffs[idx[0]])

    def abs_by_block(self, j_min: int, j_max: int) -> tuple[np.ndarray, np.ndarray]:
        """Dyadic block sups of |mu_hat| over |k| in [2^j, 2^(j+1))."""
        mag = np.abs(self.coeffs)
        absk = (
            np.abs(self.freqs.astype(float))
            if self.d == 1
            else np.linalg.norm(self.freqs.astype(float), axis=1)
        )
        js, sups = [], []
        for j in range(j_min, j_max + 1):
            sel = (absk >= 2.0**j) & (absk < 2.0 ** (j + 1))
            if np.any(sel):
                js.append(j)
                sups.append(float(np.max(mag[sel])))
        return np.asarray(js), np.asarray(sups)


def _interval_transform(k_mod_over_L: np.ndarray, k: np.ndarray, h: float) -> np.ndarray:
    """Transform of [0, h) at frequencies k, phase taken mod the lattice period.

    Using the reduced phase makes the aliasing identity exact in floating
    point, not just in exact arithmetic.
    """
    out = np.empty(k.shape, dtype=np.complex128)
    zero = k == 0
    out[zero] = h
    kk = k[~zero].astype(np.float64)
    out[~zero] = (1.0 - np.exp(-2j * np.pi * k_mod_over_L[~zero])) / (2j * np.pi * kk)
    return out


def _moments_1d(r: Realization, n: int) -> tuple[float, float, float]:
    """Exact (mass, first moment, second moment) of mu_n for d = 1."""
    M = r.params.M
    h = float(M) ** (-n)
    beta = r.beta(n)
    j = r.level(n).astype(np.float64)
    m0 = beta * h * j.size
    m1 = beta * h * h * float(np.sum(j + 0.5))
    m2 = beta * h**3 * float(np.sum(j * j + j + 1.0 / 3.0))
    return m0, m1, m2


def fourier_coeffs(r: Realization, n: int, k_max: int, half_grid: bool = True) -> SpectrumProfile:
    """Exact Fourier coefficients of mu_n at integer frequencies |k| <= k_max."""
    if k_max < 1:
        raise ParameterError(f"k_max must be >= 1, got {k_max}")
    M, d = r.params.M, r.params.d
    beta = r.beta(n)
    if d == 1:
        L = M**n
        f = np.zeros(L, dtype=np.float64)
        f[r.level(n)] = 1.0
        F = sfft.fft(f)
        ks = np.arange(-k_max, k_max + 1, dtype=np.int64)
        km = np.mod(ks, L)
        h = 1.0 / L
        wh = _interval_transform(km / L, ks, h)
        coeffs = beta * wh * F[km]
        half_freqs = half_coeffs = None
        if half_grid:
            F2 = sfft.fft(f, 2 * L)
            js = np.arange(-2 * k_max + 1, 2 * k_max, 2, dtype=np.int64)  # odd
            jm = np.mod(js, 2 * L)
            xi = js / 2.0
            whh = (1.0 - np.exp(-2j * np.pi * (jm / (2.0 * L)))) / (2j * np.pi * xi)
            half_coeffs = beta * whh * F2[jm]
            half_freqs = xi
        return SpectrumProfile(
            level=n,
            M=M,
            d=1,
            freqs=ks,
            coeffs=coeffs,
            norm=r.total_mass(n),
            moments=_moments_1d(r, n),
            half_freqs=half_freqs,
            half_coeffs=half_coeffs,
        )
    # d == 2: dense occupancy grid and a 2-d DFT
    L = M**n
    if L * L > 2**24:
        raise ParameterError(f"d=2 spectra limited to M^(2n) <= 2^24 cells, got {L * L}")
    from .cubes import unpack

    grid = np.zeros((L, L), dtype=np.float64)
    for p in r.level(n).tolist():
        q = unpack(int(p), n, M, 2)
        grid[q.coords[0], q.coords[1]] = 1.0
    F = sfft.fft2(grid)
    rng = np.arange(-k_max, k_max + 1, dtype=np.int64)
    k1, k2 = np.meshgrid(rng, rng, indexing="ij")
    ks = np.stack([k1.ravel(), k2.ravel()], axis=1)
    km1, km2 = np.mod(ks[:, 0], L), np.mod(ks[:, 1], L)
    h = 1.0 / L
    wh = _interval_transform(km1 / L, ks[:, 0], h) * _interval_transform(km2 / L, ks[:, 1], h)
    coeffs = beta * wh * F[km1, km2]
    # exact moments: mass, centroid components, second radial moment
    xs = np.array([unpack(int(p), n, M, 2).coords for p in r.level(n).tolist()], dtype=float)
    m0 = r.total_mass(n)
    cell = beta * h * h
    m1x = cell * float(np.sum((xs[:, 0] + 0.5) * h)) if xs.size else 0.0
    m1y = cell * float(np.sum((xs[:, 1] + 0.5) * h)) if xs.size else 0.0
    m2 = cell * float(np.sum(((xs[:, 0] + 0.5) ** 2 + (xs[:, 1] + 0.5) ** 2) * h * h + h * h / 6.0)) if xs.size else 0.0
    return SpectrumProfile(
        level=n, M=M, d=2, freqs=ks, coeffs=coeffs, norm=m0, moments=(m0, m1x, m1y, m2)
    )


def fourier_at(r: Realization, n: int, xi) -> np.ndarray:
    """Transform of mu_n at arbitrary real frequencies (d = 1), closed form."""
    if r.params.d != 1:
        raise DimensionError("real-frequency evaluation is provided for d = 1")
    xi = np.atleast_1d(np.asarray(xi, dtype=np.float64))
    M = r.params.M
    h = float(M) ** (-n)
    beta = r.beta(n)
    j = r.level(n).astype(np.float64)
    out = np.empty(xi.shape, dtype=np.complex128)
    for idx, x in enumerate(xi.tolist()):
        if x == 0.0:
            out[idx] = beta * h * j.size
            continue
        w = (1.0 - np.exp(-2j * np.pi * x * h)) / (2j * np.pi * x)
        out[idx] = beta * w * np.sum(np.exp(-2j * np.pi * x * h * j))
    return out


def real_spectrum(r: Realization, n: int, xi) -> SpectrumProfile:
    """SpectrumProfile over real frequencies (no aliasing structure implied)."""
    xi = np.atleast_1d(np.asarray(xi, dtype=np.float64))
    coeffs = fourier_at(r, n, xi)
    return SpectrumProfile(
        level=n,
        M=r.params.M,
        d=1,
        freqs=xi,
        coeffs=coeffs,
        norm=r.total_mass(n),
        moments=_moments_1d(r, n),
        meta={"real_freqs": True},
    )


@dataclass(frozen=True)
class DecayEstimate:
    sigma_hat: float
    stderr: float
    blocks: tuple[int, ...]
    block_sups: tuple[float, ...]
    cap_d: float


def decay_exponent_estimate(
    spec: SpectrumProfile, dyadic_blocks: int, j_min: int = 0
) -> DecayEstimate:
    """Decay exponent from dyadic block sups: sigma_hat = -2 * slope.

    Fits log sup_{|k| in [2^j, 2^(j+1))} |mu_hat(k)| against j log 2.
    Zero blocks are dropped; if fewer than two informative blocks remain
    the spectrum decays faster than any power on the sampled range and
    +inf is returned.  The ambient dimension caps any meaningful value.
    """
    if dyadic_blocks < 2:
        raise InsufficientDataError("need at least 2 dyadic blocks")
    top = 2.0**dyadic_blocks
    absk = (
        np.abs(spec.freqs.astype(float))
        if spec.d == 1
        else np.linalg.norm(spec.freqs.astype(float), axis=1)
    )
    if float(np.max(absk)) < top - 1e-9:
        raise InsufficientDataError(
            f"k_max {np.max(absk)} < 2^{dyadic_blocks}; not enough frequencies"
        )
    js, sups = spec.abs_by_block(j_min, dyadic_blocks - 1)
    keep = sups > 0.0
    js, sups = js[keep], sups[keep]
    if js.size < 2:
        return DecayEstimate(math.inf, math.nan, tuple(js.tolist()), tuple(sups.tolist()), float(spec.d))
    x = (js + 0.5) * math.log(2.0)
    fit = stats.linregress(x, np.log(sups))
    return DecayEstimate(
        sigma_hat=-2.0 * float(fit.slope),
        stderr=2.0 * float(fit.stderr),
        blocks=tuple(int(j) for j in js.tolist()),
        block_sups=tuple(float(s) for s in sups.tolist()),
        cap_d=float(spec.d),
    )


# ---------------------------------------------------------------------------
# ball-mass scaling and sumsets


@dataclass(frozen=True)
class MassDecayFit:
    exponent: float
    constant: float
    stderr: float
    radii: tuple[float, ...]
    sups: tuple[float, ...]
    degenerate: bool = False


def mass_decay_exponent(r: Realization, n: int, radii) -> MassDecayFit:
    """Fit sup_x mu_n(B(x, r)) ~ C r^s over the given radii (d = 1).

    The supremum is exact: the ball mass is piecewise linear in the center,
    so it is maximized with one endpoint of the ball at an interval endpoint.
    """
    if r.params.d != 1:
        raise DimensionError("ball-mass scaling is implemented for d = 1")
    radii = [float(x) for x in radii]
    if not radii:
        raise ParameterError("need at least one radius")
    if any(not (0.0 < x < 1.0) for x in radii):
        raise ParameterError("radii must lie in (0, 1)")
    A = r.level(n)
    if A.size == 0:
        return MassDecayFit(math.nan, 0.0, math.nan, tuple(radii), tuple(0.0 for _ in radii), True)
    h = float(r.params.M) ** (-n)
    ends = np.concatenate([A * h, (A + 1) * h])
    sups = []
    for rad in radii:
        centers = np.concatenate([ends - rad, ends + rad])
        centers = centers[(centers >= 0.0) & (centers <= 1.0)]
        best = max(r.ball_mass(n, float(c), rad) for c in centers.tolist())
        sups.append(best)
    if len(radii) == 1:
        s = math.log(sups[0]) / math.log(radii[0])
        return MassDecayFit(s, sups[0] / radii[0] ** s, math.nan, tuple(radii), tuple(sups), False)
    fit = stats.linregress(np.log(radii), np.log(sups))
    return MassDecayFit(
        exponent=float(fit.slope),
        constant=float(math.exp(fit.intercept)),
        stderr=float(fit.stderr),
        radii=tuple(radii),
        sups=tuple(sups),
    )


@dataclass(frozen=True)
class SumsetFit:
    exponent: float
    stderr: float
    levels: tuple[int, ...]
    counts: tuple[int, ...]


def sumset_cover_count(r1: Realization, r2: Realization, n: int) -> int:
    """Level-n cover size of A_n + A_n': distinct index sums i + j (exact).

    Each surviving pair contributes the window [(i+j)h, (i+j+2)h); windows
    are counted by their left index, so full + full gives 2 M^n - 1.
    """
    if r1.params.M != r2.params.M:
        raise ParameterError("realizations use different bases")
    if r1.params.d != 1 or r2.params.d != 1:
        raise DimensionError("sumset covers are implemented for d = 1")
    L = r1.params.M**n
    f = np.zeros(L)
    g = np.zeros(L)
    f[r1.level(n)] = 1.0
    g[r2.level(n)] = 1.0
    size = 2 * L - 1
    nfft = sfft.next_fast_len(size)
    conv = sfft.irfft(sfft.rfft(f, nfft) * sfft.rfft(g, nfft), nfft)[:size]
    return int(np.count_nonzero(np.rint(conv) > 0))


def sumset_boxdim(r1: Realization, r2: Realization, n: int, n_min: int = 3) -> SumsetFit:
    """Box-count exponent of the sumset: regression of log_M cover counts."""
    if n <= n_min:
        raise InsufficientDataError(f"need n > n_min = {n_min}")
    levels = list(range(n_min, n + 1))
    counts = [sumset_cover_count(r1, r2, m) for m in levels]
    keep = [(m, c) for m, c in zip(levels, counts) if c > 0]
    if len(keep) < 2:
        return SumsetFit(math.nan, math.nan, tuple(levels), tuple(counts))
    xs = [m for m, _ in keep]
    ys = [math.log(c) / math.log(r1.params.M) for _, c in keep]
    fit = stats.linregress(xs, ys)
    return SumsetFit(float(fit.slope), float(fit.stderr), tuple(levels), tuple(counts))


# ---------------------------------------------------------------------------
# restriction exponent calculators


@dataclass(frozen=True)
class RestrictionExponents:
    p_mockenhaupt: float
    p_chen: float
    q_chen: float


def restriction_exponents(s: float, sigma: float, d: int, n_conv: int = 2) -> RestrictionExponents:
    """Endpoint exponents for restriction estimates driven by mass/Fourier decay.

    p_mockenhaupt = 2(2d - 2s + sigma)/sigma for q = 2; the convolution-power
    route gives p >= 2n with q >= p/(p - n), evaluated at p = 2n.
    """
    if not (0.0 < sigma <= s <= d):
        raise ParameterError(f"need 0 < sigma <= s <= d, got sigma={sigma}, s={s}, d={d}")
    if n_conv < 2:
        raise ParameterError(f"convolution power must be >= 2, got {n_conv}")
    p_m = 2.0 * (2.0 * d - 2.0 * s + sigma) / sigma
    p_c = 2.0 * n_conv
    return RestrictionExponents(p_m, p_c, p_c / (p_c - n_conv))
