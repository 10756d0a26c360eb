"""Offspring-law constructions: percolation, exact-capacity, translated digits.

All randomness is drawn from counter-based streams keyed by
(seed, level, packed cube index), so a construction is a pure function of
(params, law, depth, seed) regardless of traversal order or parallelism.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable

import numpy as np

from .behrend import BehrendConfig, behrend_search
from .cubes import children_packed
from .errors import LevelError, ParameterError
from .params import ModelParams, PowerBeta, StepBeta
from .realization import Realization
from .streams import cube_integer, cube_uniform


@dataclass(frozen=True)
class Percolation:
    """Keep each child independently with probability p (p = 1: no deletion)."""

    p: float | Fraction

    def __post_init__(self):
        if not (0.0 < float(self.p) <= 1.0):
            raise ParameterError(f"retention probability must be in (0, 1], got {self.p}")

    @property
    def tag(self) -> str:
        return "perc"


@dataclass(frozen=True)
class CapacityExact:
    """Deterministic mass schedule; single uniformly chosen child on growth levels."""

    s: float

    @property
    def tag(self) -> str:
        return "cap"


@dataclass(frozen=True)
class BehrendTranslate:
    """Children at digits E + a_Q (mod M) with a_Q uniform per node; d = 1."""

    config: BehrendConfig

    @property
    def tag(self) -> str:
        return "behrend"


@dataclass(frozen=True)
class Custom:
    """User-supplied selection rule and matching density schedule.

    select(level, parent_packed, uniform) returns the child slots kept in
    [0, M^d); it must be a pure function of its arguments.
    """

    beta: object
    select: Callable[[int, int, float], Iterable[int]]

    @property
    def tag(self) -> str:
        return "custom"


OffspringLaw = Percolation | CapacityExact | BehrendTranslate | Custom


def law_params(M: int, d: int, law: OffspringLaw) -> ModelParams:
    """Model parameters implied by an offspring law."""
    if isinstance(law, Percolation):
        base = Fraction(1) / law.p if isinstance(law.p, Fraction) else 1.0 / float(law.p)
        if float(law.p) == 1.0:
            base = Fraction(1)
        return ModelParams.from_schedule(M, d, PowerBeta(base))
    if isinstance(law, CapacityExact):
        if not (0.0 < law.s < d):
            raise ParameterError(f"capacity dimension s must be in (0, d), got {law.s}")
        return ModelParams.from_schedule(M, d, StepBeta(M, d, law.s))
    if isinstance(law, BehrendTranslate):
        cfg = law.config
        if d != 1:
            raise ParameterError("the translated-digit construction requires d = 1")
        if cfg.M != M:
            raise ParameterError(f"digit-set base {cfg.M} != model base {M}")
        return ModelParams.from_schedule(M, d, PowerBeta(Fraction(M, cfg.size)))
    if isinstance(law, Custom):
        return ModelParams.from_schedule(M, d, law.beta)
    raise ParameterError(f"unknown law {law!r}")


def _next_level(params: ModelParams, law: OffspringLaw, cur: np.ndarray, n: int, seed: int) -> np.ndarray:
    """One subdivision step: survivors at level n+1 given survivors `cur` at n."""
    M, d = params.M, params.d
    if cur.size == 0:
        return np.empty(0, dtype=np.int64)
    if isinstance(law, Percolation):
        child = children_packed(cur, M, d)
        if float(law.p) == 1.0:
            return child
        u = cube_uniform(seed, n + 1, child)
        return child[u < float(law.p)]
    if isinstance(law, CapacityExact):
        beta: StepBeta = params.beta  # type: ignore[assignment]
        if beta.grows_at(n):
            # beta multiplies by M^d: keep exactly one uniformly chosen child
            t = cube_integer(seed, n, cur, M**d)
            return cur * (M**d) + t
        return children_packed(cur, M, d)
    if isinstance(law, BehrendTranslate):
        E = np.asarray(law.config.E, dtype=np.int64)
        a = cube_integer(seed, n, cur, M)
        digits = np.sort((E[None, :] + a[:, None]) % M, axis=1)
        return (cur[:, None] * M + digits).reshape(-1)
    if isinstance(law, Custom):
        u = cube_uniform(seed, n, cur)
        out = []
        k = M**d
        for parent, uu in zip(cur.tolist(), u.tolist()):
            slots = sorted(set(int(s) for s in law.select(n, parent, uu)))
            if slots and not (0 <= slots[0] and slots[-1] < k):
                raise ParameterError(f"custom selection returned slot outside [0, {k})")
            out.extend(parent * k + s for s in slots)
        return np.asarray(out, dtype=np.int64)
    raise ParameterError(f"unknown law {law!r}")


def generate(params: ModelParams, law: OffspringLaw, depth: int, seed: int) -> Realization:
    """Sample a realization; bit-identical for identical (params, law, depth, seed)."""
    if depth < 0:
        raise ParameterError(f"depth must be >= 0, got {depth}")
    if depth > params.max_packed_level():
        raise LevelError(
            f"depth {depth} exceeds packed-index capacity {params.max_packed_level()}"
        )
    levels = [np.zeros(1, dtype=np.int64)]
    for n in range(depth):
        levels.append(_next_level(params, law, levels[-1], n, seed))
    meta = {"law": law, "genspec": genspec_string(law, params)}
    return Realization(params, levels, seed=seed, generator_tag=law.tag, meta=meta)


def generate_law(M: int, d: int, law: OffspringLaw, depth: int, seed: int) -> Realization:
    return generate(law_params(M, d, law), law, depth, seed)


def behrend_generate(config: BehrendConfig, depth: int, seed: int) -> Realization:
    """Translated-digit realization on [0,1) with beta_n = (M/|E|)^n exact."""
    law = BehrendTranslate(config)
    return generate(law_params(config.M, 1, law), law, depth, seed)


def resampled(r: Realization, n: int, seed: int) -> Realization:
    """Fresh draw of level n+1 conditional on A_0..A_n of `r` (law preserved)."""
    law = r.meta.get("law")
    if law is None:
        raise ParameterError("realization does not carry its offspring law")
    if not (0 <= n < r.depth):
        raise LevelError(f"need 0 <= n < depth to resample level {n + 1}")
    new = _next_level(r.params, law, r.level(n), n, seed)
    levels = [r.level(k).copy() for k in range(n + 1)] + [new]
    return Realization(r.params, levels, seed=seed, generator_tag=r.generator_tag, meta=dict(r.meta))


def node_translation(r: Realization, n: int, parent_packed: int) -> int:
    """The digit-set translation a_Q used at one node (recomputed from the stream)."""
    law = r.meta.get("law")
    if not isinstance(law, BehrendTranslate):
        raise ParameterError("translations are defined for the translated-digit law only")
    return int(cube_integer(r.seed, n, np.asarray([parent_packed]), r.params.M)[0])


# ---------------------------------------------------------------------------
# generator-spec strings (CLI-facing)

_SPEC_DOC = """Generator spec grammar:
    perc:M=<int>,d=<1|2>,p=<float>         fractal percolation
    cap:M=<int>,d=<1|2>,s=<float>          exact-capacity schedule
    behrend:M=<even int>[,eps=<float>][,mode=exhaustive|greedy|sphere][,E=a+b+c]
    full:M=<int>,d=<1|2>                   deterministic full occupation
"""


def parse_genspec(spec: str) -> tuple[ModelParams, OffspringLaw]:
    """Parse a generator spec string such as 'perc:M=2,d=2,p=0.7'."""
    try:
        kind, _, rest = spec.partition(":")
        kv: dict[str, str] = {}
        if rest:
            for item in rest.split(","):
                k, _, v = item.partition("=")
                if not _ or not k:
                    raise ParameterError(f"malformed key=value item {item!r}")
                kv[k.strip()] = v.strip()
        M = int(kv.get("M", "2"))
        d = int(kv.get("d", "1"))
        if kind == "perc":
            law: OffspringLaw = Percolation(float(kv["p"]))
        elif kind == "full":
            law = Percolation(1.0)
        elif kind == "cap":
            law = CapacityExact(float(kv["s"]))
        elif kind == "behrend":
            d = 1
            if "E" in kv:
                E = tuple(int(x) for x in kv["E"].split("+"))
                cfg = BehrendConfig(M=M, E=E, epsilon=1.0)
                cfg = BehrendConfig(M=M, E=E, epsilon=cfg.density_exponent())
            else:
                mode = kv.get("mode", "sphere")
                target = float(kv["eps"]) if "eps" in kv else None
                cfg = behrend_search(M, mode=mode, epsilon=target)
            law = BehrendTranslate(cfg)
        else:
            raise ParameterError(f"unknown generator kind {kind!r}\n{_SPEC_DOC}")
        return law_params(M, d, law), law
    except (KeyError, ValueError) as exc:
        if isinstance(exc, ParameterError):
            raise
        raise ParameterError(f"cannot parse generator spec {spec!r}: {exc}\n{_SPEC_DOC}") from exc


def genspec_string(law: OffspringLaw, params: ModelParams) -> str:
    if isinstance(law, Percolation):
        return f"perc:M={params.M},d={params.d},p={float(law.p)}"
    if isinstance(law, CapacityExact):
        return f"cap:M={params.M},d={params.d},s={law.s}"
    if isinstance(law, BehrendTranslate):
        return f"behrend:M={params.M},E=" + "+".join(str(e) for e in law.config.E)
    return f"custom:M={params.M},d={params.d}"
