"""Batch experiment runner.

Subcommands: run (generate + analyze), calc (closed-form calculators),
gen (serialize a realization), scan, spectrum, convolve.  Configuration
comes from a flat key=value file and/or flags (flags win); every output
embeds the resolved configuration, its hash and the tool version, so a
fixed config reproduces outputs byte for byte apart from the timestamp
(which is excluded from the hash).

Exit codes: 0 success, 2 configuration/usage errors, 3 analysis
precondition failures.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import os
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .convolution import (
    default_grid,
    hoeffding_janson_bound,
    holder_bootstrap,
    holder_exponent_estimate,
    holder_target,
    slice_profile,
)
from .dimension import dimension_report, survival_statistics
from .energy import energy_direct, energy_fourier
from .errors import CantorLabError, ParameterError
from .generators import generate, parse_genspec
from .patterns import ap_scan, homothety_search
from .realization import Realization
from .serialize import load_realization, save_realization
from .spectral import decay_exponent_estimate, fourier_coeffs
from .streams import derive_seed

ENV_OUT = "CANTOR_LAB_OUT"
ANALYSES = ("dim", "survival", "spectrum", "convolve", "scan", "energy")


# ---------------------------------------------------------------------------
# config plumbing


def load_config_file(path: str | Path) -> dict[str, str]:
    out: dict[str, str] = {}
    for line_no, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ParameterError(f"{path}:{line_no}: expected key=value, got {raw!r}")
        out[key.strip()] = value.strip()
    return out


def config_hash(config: dict) -> str:
    canon = "\n".join(f"{k}={config[k]}" for k in sorted(config))
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()[:16]


def resolve_config(args: argparse.Namespace, keys: list[str]) -> dict:
    file_cfg = load_config_file(args.config) if getattr(args, "config", None) else {}
    cfg: dict = {}
    for key in keys:
        flag = getattr(args, key.replace("-", "_"), None)
        if flag is not None:
            cfg[key] = flag
        elif key in file_cfg:
            cfg[key] = file_cfg[key]
    return cfg


def out_dir(cfg: dict) -> Path:
    d = Path(cfg.get("out") or os.environ.get(ENV_OUT) or ".")
    d.mkdir(parents=True, exist_ok=True)
    return d


def write_json(payload: dict, path: Path, cfg: dict) -> None:
    body = dict(payload)
    body["config"] = {k: str(v) for k, v in cfg.items()}
    body["config_hash"] = config_hash(body["config"])
    body["version"] = __version__
    body["timestamp"] = datetime.now(timezone.utc).isoformat()
    path.write_text(json.dumps(body, indent=2, sort_keys=True, default=_json_default))


def _json_default(obj):
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"cannot serialize {type(obj)}")


def write_csv(rows: list[dict], path: Path, cfg: dict) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(f"# config_hash={config_hash({k: str(v) for k, v in cfg.items()})} version={__version__}\n")
        if not rows:
            return
        writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
        writer.writeheader()
        writer.writerows(rows)


def _load_or_generate(cfg: dict) -> Realization:
    if cfg.get("in"):
        return load_realization(cfg["in"])
    params, law = parse_genspec(str(cfg["gen"]))
    return generate(params, law, int(cfg["depth"]), int(cfg.get("seed", 0)))


def _surviving_seeds(genspec: str, depth: int, seed: int, want: int, cap: int = 2000):
    """Deterministic sub-seeds of trials that survive to `depth`."""
    params, law = parse_genspec(genspec)
    out = []
    i = 0
    while len(out) < want and i < cap:
        s = derive_seed(seed, i)
        r = generate(params, law, depth, s)
        if r.count(depth) > 0:
            out.append((s, r))
        i += 1
    return out


def _map_ordered(fn, items, workers):
    """Order-preserving map; results are identical for any worker count."""
    if workers and int(workers) > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=int(workers)) as ex:
            return list(ex.map(fn, items))
    return [fn(x) for x in items]


def _spectrum_task(task: tuple) -> dict:
    genspec, depth, level, k_max, j_min, s = task
    params, law = parse_genspec(genspec)
    r = generate(params, law, depth, s)
    spec = fourier_coeffs(r, level, k_max)
    est = decay_exponent_estimate(spec, int(math.floor(math.log2(k_max))), j_min=j_min)
    return {"seed": s, "sigma_hat": est.sigma_hat, "stderr": est.stderr}


def _convolve_task(task: tuple) -> dict:
    genspec, depth, order, n0, n1, points, s = task
    params, law = parse_genspec(genspec)
    r = generate(params, law, depth, s)
    grid = np.linspace(0.0, float(order), points)
    profiles = [slice_profile(r, order, n, grid) for n in range(n0, n1 + 1)]
    est = holder_exponent_estimate(profiles)
    return {"seed": s, "exponent": est.exponent, "stderr": est.stderr}


# ---------------------------------------------------------------------------
# analyses


def run_dim(cfg: dict) -> None:
    params, law = parse_genspec(str(cfg["gen"]))
    depth, trials, seed = int(cfg["depth"]), int(cfg.get("trials", 200)), int(cfg.get("seed", 0))
    report = dimension_report(params, law, depth, trials, seed)
    base = out_dir(cfg)
    write_json(report.as_dict(), base / "dimension.json", cfg)
    rows = []
    for t, (s, r) in enumerate(_surviving_seeds(str(cfg["gen"]), depth, seed, min(report.trials_used, 20))):
        for n in range(depth + 1):
            rows.append({"trial": t, "seed": s, "n": n, "N_n": r.count(n)})
    write_csv(rows, base / "levels.csv", cfg)


def run_survival(cfg: dict) -> None:
    params, law = parse_genspec(str(cfg["gen"]))
    stats = survival_statistics(
        params, law, int(cfg["depth"]), int(cfg.get("trials", 200)), int(cfg.get("seed", 0))
    )
    write_json(stats.__dict__, out_dir(cfg) / "survival.json", cfg)


def run_spectrum(cfg: dict) -> None:
    depth, seed = int(cfg["depth"]), int(cfg.get("seed", 0))
    level = int(cfg.get("level", depth))
    k_max = int(cfg.get("kmax", 4096))
    trials = int(cfg.get("trials", 1))
    base = out_dir(cfg)
    j_min = int(cfg.get("jmin", 0))
    if cfg.get("in"):
        picks = [(seed, _load_or_generate(cfg))]
        sigmas = []
        blocks = int(math.floor(math.log2(k_max)))
        for s, r in picks:
            spec = fourier_coeffs(r, level, k_max)
            est = decay_exponent_estimate(spec, blocks, j_min=j_min)
            sigmas.append({"seed": s, "sigma_hat": est.sigma_hat, "stderr": est.stderr})
    else:
        picks = _surviving_seeds(str(cfg["gen"]), depth, seed, trials)
        tasks = [(str(cfg["gen"]), depth, level, k_max, j_min, s) for s, _ in picks]
        sigmas = _map_ordered(_spectrum_task, tasks, cfg.get("workers"))
    s0, r0 = picks[0]
    spec = fourier_coeffs(r0, level, k_max)
    rows = [
        {"k": int(k), "re": float(c.real), "im": float(c.imag), "abs": float(abs(c))}
        for k, c in zip(spec.freqs.tolist(), spec.coeffs.tolist())
    ]
    write_csv(rows, base / "spectrum.csv", cfg)
    finite = [x["sigma_hat"] for x in sigmas if math.isfinite(x["sigma_hat"])]
    write_json(
        {
            "level": level,
            "k_max": k_max,
            "per_trial": sigmas,
            "sigma_hat_median": float(np.median(finite)) if finite else math.inf,
            "norm": spec.norm,
        },
        base / "spectrum.json",
        cfg,
    )


def run_convolve(cfg: dict) -> None:
    depth, seed = int(cfg["depth"]), int(cfg.get("seed", 0))
    order = int(cfg.get("order", 2))
    lv = str(cfg.get("levels", f"{max(1, depth - 4)}:{depth}"))
    n0, _, n1 = lv.partition(":")
    n0, n1 = int(n0), int(n1 or n0)
    points = int(cfg.get("grid-points", 4097))
    trials = int(cfg.get("trials", 1))
    base = out_dir(cfg)
    if cfg.get("in"):
        picks = [(seed, _load_or_generate(cfg))]
    else:
        picks = _surviving_seeds(str(cfg["gen"]), depth, seed, trials)
    grid = np.linspace(0.0, float(order), points)
    if cfg.get("in"):
        estimates = []
        for s, r in picks:
            profiles = [slice_profile(r, order, n, grid) for n in range(n0, n1 + 1)]
            est = holder_exponent_estimate(profiles)
            estimates.append({"seed": s, "exponent": est.exponent, "stderr": est.stderr})
    else:
        tasks = [(str(cfg["gen"]), depth, order, n0, n1, points, s) for s, _ in picks]
        estimates = _map_ordered(_convolve_task, tasks, cfg.get("workers"))
    rows = []
    s0, r0 = picks[0]
    profiles0 = [slice_profile(r0, order, n, grid) for n in range(n0, n1 + 1)]
    for p in profiles0:
        slack = p.certified_sup_slack()
        for u, y in zip(p.grid.tolist(), p.values.tolist()):
            rows.append({"m": order, "n": p.level, "u": u, "Y": y, "certified_sup_slack": slack})
    write_csv(rows, base / "profiles.csv", cfg)
    finite = [e["exponent"] for e in estimates if math.isfinite(e["exponent"])]
    write_json(
        {
            "order": order,
            "levels": [n0, n1],
            "per_trial": estimates,
            "exponent_median": float(np.median(finite)) if finite else math.inf,
        },
        base / "convolve.json",
        cfg,
    )


def run_scan(cfg: dict) -> None:
    r = _load_or_generate(cfg)
    level = int(cfg.get("level", r.depth))
    base = out_dir(cfg)
    endpoint = ap_scan(r, level, "interval-left-endpoints")
    digits = ap_scan(r, level, "digit-sets")
    payload = {"endpoint": endpoint.as_dict(), "digit_sets": digits.as_dict()}
    if cfg.get("pattern"):
        pat = tuple(float(x) for x in str(cfg["pattern"]).split(","))
        tol = float(cfg["tol"]) if cfg.get("tol") is not None else None
        payload["homothety"] = homothety_search(r, level, pat, tol).as_dict()
    write_json(payload, base / "patterns.json", cfg)
    rows = [
        {"k1": w[0], "k2": w[1], "k3": w[2], "parity": _parity(w)}
        for w in endpoint.ap_witnesses
    ]
    write_csv(rows, base / "witnesses.csv", cfg)


def _parity(w) -> str:
    pars = {k % 2 for k in w}
    return "all-even" if pars == {0} else "all-odd" if pars == {1} else "mixed"


def run_energy(cfg: dict) -> None:
    r = _load_or_generate(cfg)
    level = int(cfg.get("level", min(r.depth, 8)))
    d = r.params.d
    ts = [float(x) for x in str(cfg.get("t", "")).split(",") if x] or [
        round(0.1 * k * d, 3) for k in range(1, 10)
    ]
    rows = []
    for t in ts:
        direct = energy_direct(r, level, t)
        spec = fourier_coeffs(r, level, int(cfg.get("kmax", max(64, 4 * r.params.M**level))))
        four = energy_fourier(spec, t, str(cfg.get("tail", "report-truncated")))
        rows.append(
            {
                "t": t,
                "direct": direct,
                "fourier": four.value,
                "band": four.band,
                "within_band": abs(four.value - direct) <= four.band,
            }
        )
    write_json({"level": level, "energies": rows}, out_dir(cfg) / "energy.json", cfg)


RUNNERS = {
    "dim": run_dim,
    "survival": run_survival,
    "spectrum": run_spectrum,
    "convolve": run_convolve,
    "scan": run_scan,
    "energy": run_energy,
}


# ---------------------------------------------------------------------------
# subcommand entry points


def cmd_run(args) -> int:
    keys = [
        "gen", "depth", "trials", "seed", "analyze", "out", "level", "kmax", "jmin",
        "order", "levels", "grid-points", "pattern", "tol", "t", "tail", "in", "workers",
    ]
    cfg = resolve_config(args, keys)
    if "gen" not in cfg and "in" not in cfg:
        print("error: --gen or --in is required", file=sys.stderr)
        return 2
    if "depth" not in cfg and "in" not in cfg:
        print("error: --depth is required", file=sys.stderr)
        return 2
    wanted = [a.strip() for a in str(cfg.get("analyze", "dim")).split(",") if a.strip()]
    for a in wanted:
        if a not in RUNNERS:
            print(f"error: unknown analysis {a!r}; choose from {ANALYSES}", file=sys.stderr)
            return 2
    if "gen" in cfg:
        parse_genspec(str(cfg["gen"]))  # config validation: errors exit 2
    if cfg.get("in") and "depth" not in cfg:
        cfg["depth"] = load_realization(cfg["in"]).depth
    try:
        for a in wanted:
            RUNNERS[a](cfg)
    except CantorLabError as exc:
        print(f"analysis precondition failed: {exc}", file=sys.stderr)
        return 3
    return 0


def cmd_calc(args) -> int:
    if args.calc == "restriction":
        from .spectral import restriction_exponents

        res = restriction_exponents(args.s, args.sigma, args.d, args.nconv)
        print(f"p_mockenhaupt = 2(2d - 2s + sigma)/sigma = {res.p_mockenhaupt:.10g}")
        print(f"p_chen = 2n = {res.p_chen:.10g}")
        print(f"q_chen = p/(p - n) = {res.q_chen:.10g}")
    elif args.calc == "hoeffding":
        v = hoeffding_janson_bound(args.delta, args.count, args.r, args.rho)
        print(f"bound = 2 exp(-2 rho^2 / ((delta+1) count R^2)) = {v:.10g}")
    elif args.calc == "bootstrap":
        seq = holder_bootstrap(args.gamma, args.steps)
        print("gamma_m (gamma_{m+1} = g/(1 + g - gamma_m)):")
        print(", ".join(f"{x:.10g}" for x in seq))
    elif args.calc == "holder-target":
        v = holder_target(args.m, args.d, args.alpha)
        if args.m == 2:
            print(f"target = d/2 - alpha = {v:.10g}")
        elif args.alpha >= args.d / 2:
            print(f"target = d - 3 alpha / 2 = {v:.10g}")
        else:
            print(f"target = (d - alpha)/2 = {v:.10g}")
    return 0


def cmd_gen(args) -> int:
    cfg = resolve_config(args, ["gen", "depth", "seed", "out"])
    params, law = parse_genspec(str(cfg["gen"]))
    r = generate(params, law, int(cfg["depth"]), int(cfg.get("seed", 0)))
    r.meta["genspec"] = str(cfg["gen"])
    target = Path(cfg.get("out") or "realization.madr")
    if target.is_dir():
        target = target / "realization.madr"
    save_realization(r, target)
    print(f"wrote {target} (+ sidecar), counts={r.counts()}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="cantor-lab",
        description="Generate M-adic random martingale measures and analyze their "
        "self-convolutions, spectra, energies, dimensions and arithmetic patterns.",
    )
    ap.add_argument("--version", action="version", version=f"cantor-lab {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    def add_common(p, with_analyze=False):
        p.add_argument("--gen", help="generator spec, e.g. perc:M=2,d=2,p=0.7")
        p.add_argument("--in", dest="in_", help="load a serialized realization instead")
        p.add_argument("--depth", type=int)
        p.add_argument("--trials", type=int)
        p.add_argument("--seed", type=int)
        p.add_argument("--out", help=f"output directory (default ${ENV_OUT} or cwd)")
        p.add_argument("--config", help="flat key=value config file (flags override)")
        p.add_argument("--workers", type=int, help="trial-level parallelism (default 1)")
        if with_analyze:
            p.add_argument("--analyze", help=f"comma list from {','.join(ANALYSES)}")

    run_p = sub.add_parser("run", help="generate and run analyses")
    add_common(run_p, with_analyze=True)
    for flag, typ in (
        ("--level", int), ("--kmax", int), ("--jmin", int), ("--order", int),
        ("--levels", str), ("--grid-points", int), ("--pattern", str),
        ("--tol", float), ("--t", str), ("--tail", str),
    ):
        run_p.add_argument(flag, type=typ)

    calc_p = sub.add_parser("calc", help="closed-form calculators")
    calc_sub = calc_p.add_subparsers(dest="calc", required=True)
    pr = calc_sub.add_parser("restriction")
    pr.add_argument("--s", type=float, required=True)
    pr.add_argument("--sigma", type=float, required=True)
    pr.add_argument("--d", type=int, required=True)
    pr.add_argument("--nconv", type=int, default=2)
    ph = calc_sub.add_parser("hoeffding")
    ph.add_argument("--delta", type=int, required=True)
    ph.add_argument("--count", type=int, required=True)
    ph.add_argument("--r", type=float, required=True)
    ph.add_argument("--rho", type=float, required=True)
    pb = calc_sub.add_parser("bootstrap")
    pb.add_argument("--gamma", type=float, required=True)
    pb.add_argument("--steps", type=int, required=True)
    pt = calc_sub.add_parser("holder-target")
    pt.add_argument("--m", type=int, required=True)
    pt.add_argument("--d", type=int, required=True)
    pt.add_argument("--alpha", type=float, required=True)

    gen_p = sub.add_parser("gen", help="serialize a realization")
    add_common(gen_p)

    for name in ("scan", "spectrum", "convolve"):
        p = sub.add_parser(name, help=f"run the {name} analysis")
        add_common(p)
        p.add_argument("--level", type=int)
        if name == "scan":
            p.add_argument("--pattern", type=str)
            p.add_argument("--tol", type=float)
        if name == "spectrum":
            p.add_argument("--kmax", type=int)
            p.add_argument("--jmin", type=int)
        if name == "convolve":
            p.add_argument("--order", type=int)
            p.add_argument("--levels", type=str)
            p.add_argument("--grid-points", type=int)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    # '--in' lands on args.in_; normalize for resolve_config
    if hasattr(args, "in_"):
        setattr(args, "in", args.in_)
    try:
        if args.command == "run":
            return cmd_run(args)
        if args.command == "calc":
            return cmd_calc(args)
        if args.command == "gen":
            return cmd_gen(args)
        if args.command in ("scan", "spectrum", "convolve"):
            keys = [
                "gen", "in", "depth", "trials", "seed", "out", "level", "kmax", "jmin",
                "order", "levels", "grid-points", "pattern", "tol",
            ]
            cfg = resolve_config(args, keys)
            if "in" not in cfg and ("gen" not in cfg or "depth" not in cfg):
                print("error: need --in or (--gen and --depth)", file=sys.stderr)
                return 2
            if "gen" in cfg:
                parse_genspec(str(cfg["gen"]))  # config validation: errors exit 2
            if cfg.get("in") and "depth" not in cfg:
                cfg["depth"] = load_realization(cfg["in"]).depth
            try:
                RUNNERS[args.command](cfg)
            except CantorLabError as exc:
                print(f"analysis precondition failed: {exc}", file=sys.stderr)
                return 3
            return 0
        return 2
    except ParameterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
