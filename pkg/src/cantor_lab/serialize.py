"""Binary-independent realization files.

Layout (little endian):
    magic 'MADR', version u16,
    M u32, d u32, depth u32, seed u64 (two's complement), tag (u16 len + utf8),
    then per level: run count u64 followed by (start i64, length u64) runs
    of consecutive packed indices.

A JSON sidecar (same stem, '.json') carries the generator spec string,
per-level counts and bookkeeping, so a loaded file reconstructs the same
model parameters without re-deriving anything from the binary body.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .errors import ParameterError
from .generators import genspec_string, parse_genspec
from .realization import Realization

MAGIC = b"MADR"
VERSION = 1


def _runs(arr: np.ndarray) -> list[tuple[int, int]]:
    if arr.size == 0:
        return []
    breaks = np.flatnonzero(np.diff(arr) != 1)
    starts = np.concatenate([[0], breaks + 1])
    ends = np.concatenate([breaks, [arr.size - 1]])
    return [(int(arr[s]), int(e - s + 1)) for s, e in zip(starts, ends)]


def save_realization(r: Realization, path: str | Path) -> Path:
    path = Path(path)
    law = r.meta.get("law")
    genspec = r.meta.get("genspec") or (genspec_string(law, r.params) if law is not None else None)
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<H", VERSION))
        tag = r.generator_tag.encode("utf-8")
        fh.write(struct.pack("<IIIq", r.params.M, r.params.d, r.depth, r.seed))
        fh.write(struct.pack("<H", len(tag)))
        fh.write(tag)
        for arr in r.levels:
            runs = _runs(arr)
            fh.write(struct.pack("<Q", len(runs)))
            for start, length in runs:
                fh.write(struct.pack("<qQ", start, length))
    sidecar = {
        "format": "madic-realization",
        "format_version": VERSION,
        "M": r.params.M,
        "d": r.params.d,
        "depth": r.depth,
        "seed": r.seed,
        "generator_tag": r.generator_tag,
        "genspec": genspec,
        "counts": r.counts(),
    }
    path.with_suffix(path.suffix + ".json").write_text(json.dumps(sidecar, indent=2, sort_keys=True))
    return path


def load_realization(path: str | Path) -> Realization:
    path = Path(path)
    with open(path, "rb") as fh:
        if fh.read(4) != MAGIC:
            raise ParameterError(f"{path} is not a realization file")
        (version,) = struct.unpack("<H", fh.read(2))
        if version != VERSION:
            raise ParameterError(f"unsupported format version {version}")
        M, d, depth, seed = struct.unpack("<IIIq", fh.read(20))
        (taglen,) = struct.unpack("<H", fh.read(2))
        tag = fh.read(taglen).decode("utf-8")
        levels = []
        for _ in range(depth + 1):
            (nruns,) = struct.unpack("<Q", fh.read(8))
            chunks = []
            for _ in range(nruns):
                start, length = struct.unpack("<qQ", fh.read(16))
                chunks.append(np.arange(start, start + length, dtype=np.int64))
            levels.append(
                np.concatenate(chunks) if chunks else np.empty(0, dtype=np.int64)
            )
    sidecar_path = path.with_suffix(path.suffix + ".json")
    meta: dict = {}
    params = None
    law = None
    if sidecar_path.exists():
        sidecar = json.loads(sidecar_path.read_text())
        genspec = sidecar.get("genspec")
        if genspec:
            params, law = parse_genspec(genspec)
            meta["genspec"] = genspec
    if params is None:
        if tag in ("full", "perc"):
            params, law = parse_genspec(f"full:M={M},d={d}")
        else:
            raise ParameterError(
                f"cannot reconstruct model parameters for {path}; sidecar missing"
            )
    if params.M != M or params.d != d:
        raise ParameterError("sidecar model parameters disagree with the binary header")
    meta["law"] = law
    return Realization(params, levels, seed=seed, generator_tag=tag, meta=meta)
