"""Arithmetic-pattern scanners at M-adic resolution, d = 1.

Two complementary certificates are finitely checkable:

  * digit-set mode verifies, node by node, that the selected child digits
    form a progression-free subset of Z_M (exact, and guaranteed by the
    translated-digit construction);
  * endpoint mode lists exact integer 3-term progressions among the left
    endpoints of surviving intervals and classifies each witness by the
    parity of its endpoints.  Endpoint progressions sit on M-adic
    rationals, which carry zero mass in the limit, so witnesses are
    reported as evidence, never as a refutation certificate.

The homothety scanner samples the normalized-difference fiber
(y_j - y_1)/(y_2 - y_1) around a target pattern at a stated tolerance.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .behrend import is_ap_free_mod, midpoints_mod
from .errors import BudgetError, DimensionError, ParameterError
from .realization import Realization

AP_BUDGET = 10_000
WITNESS_CAP = 2_000


@dataclass
class PatternReport:
    level: int
    mode: str
    ap_witnesses: list[tuple[int, int, int]] = field(default_factory=list)
    witness_count: int = 0
    parity_classes: dict = field(default_factory=dict)
    digitset_violations: int = 0
    nodes_checked: int = 0
    homothety_hits: list[tuple[float, float]] = field(default_factory=list)
    hit_count: int = 0
    meta: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "level": self.level,
            "mode": self.mode,
            "witness_count": self.witness_count,
            "ap_witnesses": [list(w) for w in self.ap_witnesses[:WITNESS_CAP]],
            "parity_classes": dict(self.parity_classes),
            "digitset_violations": self.digitset_violations,
            "nodes_checked": self.nodes_checked,
            "hit_count": self.hit_count,
            "homothety_hits": [list(h) for h in self.homothety_hits[:WITNESS_CAP]],
            "meta": self.meta,
        }


def _parity_class(k1: int, k2: int, k3: int) -> str:
    pars = {k1 % 2, k2 % 2, k3 % 2}
    if pars == {0}:
        return "all-even"
    if pars == {1}:
        return "all-odd"
    return "mixed"


def ap_scan(r: Realization, n: int, mode: str = "interval-left-endpoints") -> PatternReport:
    """Scan level n for 3-term arithmetic progressions.

    'digit-sets': exact per-node progression check of child digits in Z_M
    (uses levels 0..n).  'interval-left-endpoints': exhaustive integer
    search 2 k2 = k1 + k3 over surviving endpoints, N_n <= 10^4.
    """
    if r.params.d != 1:
        raise DimensionError("pattern scans are defined for d = 1")
    M = r.params.M
    if mode == "digit-sets":
        violations = 0
        nodes = 0
        for m in range(min(n, r.depth)):
            parents = r.level(m)
            child = r.level(m + 1)
            if child.size == 0:
                break
            pidx = child // M
            digits = child - pidx * M
            order = np.argsort(pidx, kind="stable")
            pidx, digits = pidx[order], digits[order]
            bounds = np.searchsorted(pidx, parents)
            bounds = np.append(bounds, pidx.size)
            for t in range(parents.size):
                dset = digits[bounds[t] : bounds[t + 1]]
                if dset.size >= 3 and not is_ap_free_mod(dset.tolist(), M):
                    violations += 1
                nodes += 1
        return PatternReport(
            level=n, mode=mode, digitset_violations=violations, nodes_checked=nodes
        )
    if mode != "interval-left-endpoints":
        raise ParameterError(f"unknown scan mode {mode!r}")
    A = r.level(n)
    if A.size > AP_BUDGET:
        raise BudgetError(f"endpoint scan is exhaustive only for N_n <= {AP_BUDGET}")
    witnesses = []
    count = 0
    classes: Counter = Counter()
    ints = A
    aset = A
    for idx in range(A.size):
        k1 = int(A[idx])
        k3s = ints[idx + 1 :]
        mids = k1 + k3s
        even = mids % 2 == 0
        mids2 = mids[even] // 2
        k3e = k3s[even]
        pos = np.searchsorted(aset, mids2)
        ok = pos < aset.size
        hit = np.zeros(mids2.shape, dtype=bool)
        hit[ok] = aset[pos[ok]] == mids2[ok]
        sel = hit & (mids2 > k1)
        for k2, k3 in zip(mids2[sel].tolist(), k3e[sel].tolist()):
            count += 1
            classes[_parity_class(k1, k2, k3)] += 1
            if len(witnesses) < WITNESS_CAP:
                witnesses.append((k1, int(k2), int(k3)))
    return PatternReport(
        level=n,
        mode=mode,
        ap_witnesses=witnesses,
        witness_count=count,
        parity_classes=dict(classes),
    )


def homothety_search(
    r: Realization, n: int, pattern: tuple[float, ...], tol: float | None = None
) -> PatternReport:
    """All level-n endpoint tuples homothetic to `pattern` within `tol`.

    The pattern must be (0, 1, t3, ..., tm) with 1 < t3 < ... < tm; a hit
    records the homothety (translation, scale) mapping the pattern onto
    interval left endpoints, with |(y_j - y_1)/(y_2 - y_1) - t_j| <= tol.
    Default tolerance M^(-n+2) on the normalized coordinates.
    """
    if r.params.d != 1:
        raise DimensionError("pattern scans are defined for d = 1")
    if len(pattern) < 3 or pattern[0] != 0 or pattern[1] != 1:
        raise ParameterError("pattern must start with (0, 1, ...)")
    ts = list(pattern[2:])
    if any(b <= a for a, b in zip([1.0] + ts[:-1], ts)):
        raise ParameterError("pattern offsets must satisfy 1 < t3 < ... < tm")
    if tol is None:
        tol = float(r.params.M) ** (-n + 2)
    if tol < 0:
        raise ParameterError("tolerance must be >= 0")
    M = r.params.M
    h = float(M) ** (-n)
    A = r.level(n)
    if A.size * (A.size - 1) // 2 > 5_000_000:
        raise BudgetError("pair enumeration exceeds the desk-scale budget")
    hits: list[tuple[float, float]] = []
    tuples: list[tuple[int, ...]] = []
    count = 0
    Af = A.astype(np.float64)
    for i in range(A.size):
        k1 = int(A[i])
        k2s = A[i + 1 :]
        if k2s.size == 0:
            break
        span = (k2s - k1).astype(np.float64)
        cand_sets = []
        okmask = np.ones(k2s.size, dtype=bool)
        for t in ts:
            lo = k1 + (t - tol) * span
            hi = k1 + (t + tol) * span
            lo_idx = np.searchsorted(Af, lo - 1e-9)
            hi_idx = np.searchsorted(Af, hi + 1e-9, side="right")
            cnt = hi_idx - lo_idx
            okmask &= cnt > 0
            cand_sets.append((lo_idx, hi_idx))
        for j in np.flatnonzero(okmask):
            k2 = int(k2s[j])
            combo = 1
            members = []
            for lo_idx, hi_idx in cand_sets:
                members.append(A[lo_idx[j] : hi_idx[j]].tolist())
                combo *= len(members[-1])
            count += combo
            if len(hits) < WITNESS_CAP:
                hits.append((k1 * h, (k2 - k1) * h))
            if len(ts) == 1 and len(tuples) < WITNESS_CAP:
                tuples.extend((k1, k2, int(k3)) for k3 in members[0])
    return PatternReport(
        level=n,
        mode="homothety",
        homothety_hits=hits,
        hit_count=count,
        meta={"pattern": list(pattern), "tol": tol, "tuples": tuples[:WITNESS_CAP]},
    )


def parity_certificate(M: int, E) -> tuple[bool, list[str]]:
    """Certificate for a digit set: M even, all elements even, progression-free.

    Takes raw data so that planted counterexamples can be examined; valid
    sets round-trip through BehrendConfig unchanged.
    """
    reasons: list[str] = []
    E = list(E)
    if M % 2 != 0:
        reasons.append(f"M = {M} is odd")
    odd = [e for e in E if e % 2 != 0]
    if odd:
        reasons.append(f"odd elements: {odd}")
    out_of_range = [e for e in E if not (0 <= e < M)]
    if out_of_range:
        reasons.append(f"elements outside Z_M: {out_of_range}")
    if len(set(E)) != len(E):
        reasons.append("repeated elements")
    if not reasons and not is_ap_free_mod(E, M):
        s = set(E)
        found = None
        elems = sorted(s)
        for i, a in enumerate(elems):
            for c in elems[i + 1 :]:
                for b in midpoints_mod(a, c, M):
                    if b in s and b not in (a, c):
                        found = (a, b, c)
                        break
                if found:
                    break
            if found:
                break
        reasons.append(f"progression mod {M}: {found}")
    return (not reasons), reasons
