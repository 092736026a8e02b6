"""Command-line entry point: subcommand dispatch, config files, CSV/JSON emission.

Exit codes: 0 success, 2 validation error (bad flags or config), 3 numerical
failure (e.g. a requested speed below the critical speed).  Every --out
directory receives exactly one manifest.json echoing the resolved
configuration, the seed, and sha256 digests of the emitted files, so any run
can be reproduced byte-for-byte from its manifest.
"""
from __future__ import annotations

import argparse
import datetime
import hashlib
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .dispersion import (
    brownian_dispersion,
    critical_point_bs,
    gamma_from_speed_bs,
    regime_classify,
    solve_gamma_power2,
    speed_from_gamma_bs,
)
from .distributions import (
    Brownian,
    CompoundPoisson,
    Deterministic,
    Exponential,
    GammaLaw,
    NoLevy,
    RngStream,
    Tabulated,
)
from .errors import NumericalFailure, ValidationError
from .particles import ParticleSystemConfig, centered_profile, compare_profiles, estimate_speed, simulate
from .presets import get_preset
from .smoothing import iterate_pool, laplace_functional_residual
from .waves import (
    default_grid,
    profile_eval,
    sample_wave,
    tail_asymptotics,
    verify_equivalence_power2,
    verify_fixed_point_power2,
    verify_fixed_point_sync,
)

CSV_FLOAT = "%.17g"


# ---------------------------------------------------------------------------
# config parsing


def load_config(path) -> dict:
    """Read a TOML or JSON config file into a dict (by suffix, JSON fallback)."""
    path = Path(path)
    if not path.exists():
        raise ValidationError(f"config file not found: {path}")
    data = path.read_bytes()
    if path.suffix.lower() == ".toml":
        try:
            import tomllib  # py311+
        except ModuleNotFoundError:
            import tomli as tomllib
        try:
            return tomllib.loads(data.decode())
        except Exception as exc:
            raise ValidationError(f"config field error in {path.name}: {exc}") from None
    try:
        return json.loads(data)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"config field error in {path.name}: {exc}") from None


def parse_jumps(spec):
    """Jump law from 'exp:RATE', 'det:VALUE', 'gamma:SHAPE:RATE', or a config dict."""
    if spec is None:
        return None
    if isinstance(spec, dict):
        kind = spec.get("kind")
        if kind in ("exp", "exponential"):
            return Exponential(float(spec["rate"]))
        if kind in ("det", "deterministic"):
            return Deterministic(float(spec["value"]))
        if kind == "gamma":
            return GammaLaw(float(spec["shape"]), float(spec["rate"]))
        if kind == "tabulated":
            return Tabulated(np.asarray(spec["x"], dtype=float), np.asarray(spec["cdf"], dtype=float))
        raise ValidationError(f"config field 'jumps.kind': unknown kind {kind!r}")
    parts = str(spec).split(":")
    kind = parts[0]
    try:
        if kind == "exp" and len(parts) == 2:
            return Exponential(float(parts[1]))
        if kind == "det" and len(parts) == 2:
            return Deterministic(float(parts[1]))
        if kind == "gamma" and len(parts) == 3:
            return GammaLaw(float(parts[1]), float(parts[2]))
    except ValueError:
        pass
    raise ValidationError(
        f"flag 'jumps': cannot parse {spec!r} (expected exp:RATE, det:VALUE, or gamma:SHAPE:RATE)"
    )


def parse_grid(spec: str) -> np.ndarray:
    """Grid from 'lo:hi:n'."""
    try:
        lo, hi, n = spec.split(":")
        lo, hi, n = float(lo), float(hi), int(n)
    except ValueError:
        raise ValidationError(f"flag 'grid': cannot parse {spec!r} (expected lo:hi:n)") from None
    if not (hi > lo and n >= 2):
        raise ValidationError("flag 'grid': need hi > lo and n >= 2")
    return np.linspace(lo, hi, n)


def _jumps_echo(law) -> dict | None:
    if law is None:
        return None
    if isinstance(law, Exponential):
        return {"kind": "exp", "rate": law.rate}
    if isinstance(law, Deterministic):
        return {"kind": "det", "value": law.value}
    if isinstance(law, GammaLaw):
        return {"kind": "gamma", "shape": law.shape, "rate": law.rate}
    return {"kind": "tabulated", "x": list(law.x), "cdf": list(law.cdf)}


# ---------------------------------------------------------------------------
# output helpers


class Emitter:
    """Collects output files under --out and writes the run manifest."""

    def __init__(self, out_dir, command: str, config_echo: dict, seed: int):
        self.out_dir = Path(out_dir) if out_dir else None
        self.command = command
        self.config_echo = config_echo
        self.seed = seed
        self.started = datetime.datetime.now(datetime.timezone.utc).isoformat()
        self.outputs: dict[str, str] = {}
        if self.out_dir:
            self.out_dir.mkdir(parents=True, exist_ok=True)

    def _register(self, path: Path):
        digest = hashlib.sha256(path.read_bytes()).hexdigest()
        self.outputs[path.name] = digest

    def write_csv(self, name: str, header: str, columns) -> Path | None:
        if not self.out_dir:
            return None
        path = self.out_dir / name
        data = np.column_stack(columns) if isinstance(columns, (list, tuple)) else columns
        np.savetxt(path, data, fmt=CSV_FLOAT, delimiter=",", header=header, comments="")
        self._register(path)
        return path

    def write_json(self, name: str, payload: dict) -> Path | None:
        if not self.out_dir:
            return None
        path = self.out_dir / name
        path.write_text(json.dumps(_finite(payload), indent=2, sort_keys=True) + "\n")
        self._register(path)
        return path

    def finish(self):
        if not self.out_dir:
            return
        manifest = {
            "command": self.command,
            "config": self.config_echo,
            "seed": self.seed,
            "version": __version__,
            "started": self.started,
            "finished": datetime.datetime.now(datetime.timezone.utc).isoformat(),
            "outputs": self.outputs,
        }
        (self.out_dir / "manifest.json").write_text(
            json.dumps(manifest, indent=2, sort_keys=True) + "\n"
        )


def _finite(obj):
    """Replace non-finite floats with None so emitted JSON stays standard."""
    if isinstance(obj, dict):
        return {k: _finite(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_finite(v) for v in obj]
    if isinstance(obj, (float, np.floating)):
        return float(obj) if math.isfinite(obj) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    return obj


def _print_json(payload: dict):
    print(json.dumps(_finite(payload), indent=2, sort_keys=True))


# ---------------------------------------------------------------------------
# subcommands


def _cmd_solve_gamma(args) -> int:
    jumps = parse_jumps(args.jumps)
    if args.model == "power2":
        result = solve_gamma_power2(jumps, args.sigma2, k=args.k)
    elif args.model == "bs":
        if args.c is None:
            raise ValidationError("flag 'c': solve-gamma --model bs needs a requested speed")
        result = gamma_from_speed_bs(args.c, getattr(args, "lam"), jumps, k=args.k)
    elif args.model == "brownian":
        if args.c is None:
            raise ValidationError("flag 'c': solve-gamma --model brownian needs a requested speed")
        result = brownian_dispersion(args.sigma2, "from_speed", c=args.c, k=args.k)
    else:
        raise ValidationError(f"flag 'model': unknown model {args.model!r}")
    payload = result.to_json_dict()
    _print_json(payload)
    config = {"model": args.model, "jumps": _jumps_echo(jumps), "sigma2": args.sigma2,
              "lambda": getattr(args, "lam"), "c": args.c, "k": args.k}
    em = Emitter(args.out, "solve-gamma", config, args.seed)
    em.write_json("result.json", payload)
    em.finish()
    return 0


def _cmd_critical_speed(args) -> int:
    jumps = parse_jumps(args.jumps)
    if args.model == "bs":
        result = critical_point_bs(getattr(args, "lam"), jumps, k=args.k)
    elif args.model == "brownian":
        result = brownian_dispersion(args.sigma2, "minimal", k=args.k)
    else:
        raise ValidationError(f"flag 'model': critical-speed supports bs and brownian, got {args.model!r}")
    payload = result.to_json_dict()
    payload["gamma_star"] = payload["gamma"]
    payload["c_star"] = payload["c"]
    _print_json(payload)
    config = {"model": args.model, "jumps": _jumps_echo(jumps), "sigma2": args.sigma2,
              "lambda": getattr(args, "lam"), "k": args.k}
    em = Emitter(args.out, "critical-speed", config, args.seed)
    em.write_json("result.json", payload)
    em.finish()
    return 0


def _cmd_dispersion(args) -> int:
    jumps = parse_jumps(args.jumps)
    if args.model == "brownian":
        if args.gamma is not None:
            result = brownian_dispersion(args.sigma2, "from_gamma", gamma=args.gamma, k=args.k)
        elif args.c is not None:
            result = brownian_dispersion(args.sigma2, "from_speed", c=args.c, k=args.k)
        else:
            result = brownian_dispersion(args.sigma2, "minimal", k=args.k)
    elif args.model == "bs":
        if args.gamma is not None:
            c = speed_from_gamma_bs(args.gamma, getattr(args, "lam"), jumps, k=args.k)
            result = regime_classify_from_bs(args.gamma, c, getattr(args, "lam"), jumps, args.k)
        elif args.c is not None:
            result = gamma_from_speed_bs(args.c, getattr(args, "lam"), jumps, k=args.k)
        else:
            result = critical_point_bs(getattr(args, "lam"), jumps, k=args.k)
    elif args.model == "power2":
        result = solve_gamma_power2(jumps, args.sigma2, k=args.k)
    else:
        raise ValidationError(f"flag 'model': unknown model {args.model!r}")
    payload = result.to_json_dict()
    _print_json(payload)
    config = {"model": args.model, "jumps": _jumps_echo(jumps), "sigma2": args.sigma2,
              "lambda": getattr(args, "lam"), "gamma": args.gamma, "c": args.c, "k": args.k}
    em = Emitter(args.out, "dispersion", config, args.seed)
    em.write_json("result.json", payload)
    em.finish()
    return 0


def regime_classify_from_bs(gamma, c, lam, jumps, k):
    from .distributions import SyncIncrement

    levy = CompoundPoisson(lam, jumps) if lam > 0 else NoLevy()
    return regime_classify(SyncIncrement(levy, c), gamma, k=k)


def _resolve_increment(args, jumps):
    """Increment law from --increment {sync | power2} plus the shared flags."""
    from .distributions import Power2Increment, SyncIncrement

    if args.increment == "power2":
        return Power2Increment(jumps, args.sigma2)
    if args.increment == "sync":
        if args.c is None:
            raise ValidationError("flag 'c': sync increment needs a speed")
        if getattr(args, "lam") > 0:
            levy = CompoundPoisson(getattr(args, "lam"), jumps)
        elif args.sigma2 > 0:
            levy = Brownian(args.sigma2)
        else:
            levy = NoLevy()
        return SyncIncrement(levy, args.c)
    raise ValidationError(f"flag 'increment': unknown kind {args.increment!r}")


def _cmd_sample_pool(args) -> int:
    jumps = parse_jumps(args.jumps)
    inc = _resolve_increment(args, jumps)
    pool = iterate_pool(
        inc, args.gamma, args.pool_size, args.iterations, k=args.k,
        rng=RngStream(args.seed), workers=args.workers,
    )
    config = {"increment": args.increment, "jumps": _jumps_echo(jumps), "sigma2": args.sigma2,
              "lambda": getattr(args, "lam"), "c": args.c, "gamma": args.gamma,
              "pool_size": args.pool_size, "iterations": args.iterations, "k": args.k}
    em = Emitter(args.out, "sample-pool", config, args.seed)
    em.write_csv("pool.csv", "v", pool.samples[:, None])
    sidecar = pool.summary()
    sidecar["seed"] = args.seed
    em.write_json("pool.json", sidecar)
    em.finish()
    _print_json({"mean": pool.mean(), "stddev": pool.std(), "iterations": pool.iterations,
                 "ks_last": float(pool.ks_trace[-1]), "warnings": list(pool.warnings)})
    return 0


def _load_pool_csv(path) -> np.ndarray:
    path = Path(path)
    if not path.exists():
        raise ValidationError(f"pool file not found: {path}")
    return np.loadtxt(path, skiprows=1)


def _cmd_wave_profile(args) -> int:
    samples = _load_pool_csv(args.pool)
    grid = parse_grid(args.grid) if args.grid else default_grid(args.gamma)
    prof = profile_eval(samples, args.gamma, args.orientation, grid)
    config = {"pool": str(args.pool), "gamma": args.gamma, "orientation": args.orientation,
              "grid": args.grid}
    em = Emitter(args.out, "wave-profile", config, args.seed)
    em.write_csv("profile.csv", "x,h,stderr", [prof.grid, prof.values, prof.stderr])
    em.finish()
    _print_json({"points": len(grid), "h_first": float(prof.values[0]),
                 "h_last": float(prof.values[-1]), "pool_mean": prof.pool_mean})
    return 0


def _cmd_sample_wave(args) -> int:
    samples = _load_pool_csv(args.pool)
    xi = sample_wave(samples, args.gamma, args.orientation, args.samples, rng=RngStream(args.seed))
    config = {"pool": str(args.pool), "gamma": args.gamma, "orientation": args.orientation,
              "samples": args.samples}
    em = Emitter(args.out, "sample-wave", config, args.seed)
    em.write_csv("samples.csv", "xi", xi[:, None])
    em.finish()
    _print_json({"n": len(xi), "mean": float(xi.mean()), "stddev": float(xi.std(ddof=1))})
    return 0


def _cmd_verify(args) -> int:
    jumps = parse_jumps(args.jumps)
    rng = RngStream(args.seed)
    if args.samples_file:
        xi = np.loadtxt(args.samples_file, skiprows=1)
    else:
        samples = _load_pool_csv(args.pool)
        orientation = "power2" if args.test != "fixed-point-sync" else "sync-right"
        xi = sample_wave(samples, args.gamma, orientation, args.samples, rng=rng.substream(1))
    if args.test == "fixed-point-sync":
        inc = _resolve_increment(argparse.Namespace(increment="sync", c=args.c, lam=args.lam,
                                                    sigma2=args.sigma2), jumps)
        res = verify_fixed_point_sync(xi, inc, rng=rng.substream(2))
    elif args.test == "fixed-point-power2":
        res = verify_fixed_point_power2(xi, jumps, args.sigma2, rng=rng.substream(2))
    elif args.test == "equivalence-power2":
        res = verify_equivalence_power2(xi, jumps, args.sigma2, rng=rng.substream(2))
    else:
        raise ValidationError(f"flag 'test': unknown test {args.test!r}")
    payload = {"test": args.test, "statistic": res.statistic, "critical_value": res.critical_value,
               "pvalue": res.pvalue, "pass": bool(res.passed)}
    _print_json(payload)
    config = {"test": args.test, "jumps": _jumps_echo(jumps), "sigma2": args.sigma2,
              "lambda": args.lam, "c": args.c, "gamma": args.gamma, "samples": args.samples}
    em = Emitter(args.out, "verify", config, args.seed)
    em.write_json("verify.json", payload)
    em.finish()
    return 0


def _particle_config_from_dict(cfg: dict, seed: int) -> ParticleSystemConfig:
    known = {"mechanism", "n_particles", "horizon", "burn_in", "jumps", "sigma2",
             "jump_rate", "copy_rate", "n_snapshots", "median_points", "seed",
             "initial_csv"}
    unknown = set(cfg) - known
    if unknown:
        raise ValidationError(f"config field(s) not recognized: {', '.join(sorted(unknown))}")
    for field_name in ("mechanism", "n_particles", "horizon"):
        if field_name not in cfg:
            raise ValidationError(f"config field '{field_name}' is required")
    sigma2 = float(cfg.get("sigma2", 0.0))
    levy = Brownian(sigma2) if sigma2 > 0 else NoLevy()
    initial = None
    if cfg.get("initial_csv"):
        path = Path(cfg["initial_csv"])
        if not path.exists():
            raise ValidationError(f"config field 'initial_csv': file not found: {path}")
        initial = np.loadtxt(path, skiprows=1)
    return ParticleSystemConfig(
        n_particles=int(cfg["n_particles"]),
        mechanism=cfg["mechanism"],
        horizon=float(cfg["horizon"]),
        jumps=parse_jumps(cfg.get("jumps")),
        levy=levy,
        jump_rate=float(cfg.get("jump_rate", 0.0)),
        copy_rate=float(cfg.get("copy_rate", 1.0)),
        burn_in=cfg.get("burn_in"),
        n_snapshots=int(cfg.get("n_snapshots", 20)),
        median_points=int(cfg.get("median_points", 200)),
        seed=RngStream(int(cfg.get("seed", seed))),
        initial=initial,
    )


def _cmd_simulate(args) -> int:
    cfg_dict = load_config(args.config)
    config = _particle_config_from_dict(cfg_dict, args.seed)
    result = simulate(config)
    speed = estimate_speed(result.median_path, config.burn_in, rng=RngStream(args.seed).substream(7))
    em = Emitter(args.out, "simulate", cfg_dict, args.seed)
    snap_t = np.concatenate([np.full(len(p), t) for t, p in result.snapshots])
    snap_x = np.concatenate([p for _, p in result.snapshots])
    em.write_csv("snapshots.csv", "t,position", [snap_t, snap_x])
    em.write_csv("median.csv", "t,median", [result.median_path[:, 0], result.median_path[:, 1]])
    payload = {"c_hat": speed.c_hat, "ci_low": speed.ci_low, "ci_high": speed.ci_high,
               "n_events": result.n_events, "truncated": result.truncated}
    em.write_json("speed.json", payload)
    em.finish()
    _print_json(payload)
    return 0


def _load_snapshots_csv(path):
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    if data.ndim != 2 or data.shape[1] != 2:
        raise ValidationError(f"snapshots file {path}: expected columns t,position")
    snapshots = []
    for t in np.unique(data[:, 0]):
        snapshots.append((float(t), data[data[:, 0] == t, 1]))
    return snapshots


def _cmd_compare(args) -> int:
    snapshots = _load_snapshots_csv(args.empirical)
    prof_data = np.loadtxt(args.profile, delimiter=",", skiprows=1)
    from .waves import Orientation, WaveProfile

    prof = WaveProfile(args.gamma, Orientation(args.orientation), np.array([1.0]),
                       prof_data[:, 0], prof_data[:, 1], prof_data[:, 2])
    t_lo = args.burn_in if args.burn_in is not None else -math.inf
    emp = centered_profile(snapshots, (t_lo, math.inf))
    cmpres = compare_profiles(emp, prof)
    payload = {"w1_after_shift": cmpres.w1_after_shift, "ks_after_shift": cmpres.ks_after_shift,
               "shift": cmpres.shift}
    _print_json(payload)
    config = {"empirical": str(args.empirical), "profile": str(args.profile),
              "gamma": args.gamma, "orientation": args.orientation, "burn_in": args.burn_in}
    em = Emitter(args.out, "compare", config, args.seed)
    em.write_json("compare.json", payload)
    em.finish()
    return 0


def _cmd_pipeline(args) -> int:
    preset = get_preset(args.preset)
    seed = RngStream(args.seed)
    out = Path(args.out) if args.out else Path(f"pipeline-{args.preset}")
    config = {"preset": args.preset, "pool_size": args.pool_size, "iterations": args.iterations,
              "samples": args.samples, "n_particles": args.n_particles, "horizon": args.horizon}
    em = Emitter(out, "pipeline", config, args.seed)

    # 1. dispersion
    disp = preset.dispersion()
    em.write_json("dispersion.json", disp.to_json_dict())
    gamma = disp.gamma
    inc = preset.increment()

    # 2. martingale-limit pool
    pool = iterate_pool(inc, gamma, args.pool_size, args.iterations, rng=seed.substream(1))
    em.write_csv("pool.csv", "v", pool.samples[:, None])
    sidecar = pool.summary()
    sidecar["seed"] = args.seed
    em.write_json("pool.json", sidecar)

    # 3. wave profile
    grid = default_grid(gamma)
    prof = profile_eval(pool, gamma, preset.orientation, grid)
    em.write_csv("profile.csv", "x,h,stderr", [prof.grid, prof.values, prof.stderr])

    # 4. verification battery
    xi = sample_wave(pool, gamma, preset.orientation, args.samples, rng=seed.substream(2))
    checks = []
    if preset.mechanism == "power2":
        res = verify_fixed_point_power2(xi, preset.jumps, preset.sigma2, rng=seed.substream(3))
        checks.append(("fixed-point-power2", res))
        res = verify_equivalence_power2(xi, preset.jumps, preset.sigma2, rng=seed.substream(4))
        checks.append(("equivalence-power2", res))
    else:
        res = verify_fixed_point_sync(xi, inc, rng=seed.substream(3))
        checks.append(("fixed-point-sync", res))
    residual = laplace_functional_residual(pool, inc, gamma, [0.25, 0.5, 1.0, 2.0, 4.0],
                                           rng=seed.substream(5))
    verify_payload = {
        "tests": [
            {"test": name, "statistic": r.statistic, "critical_value": r.critical_value,
             "pvalue": r.pvalue, "pass": bool(r.passed)}
            for name, r in checks
        ],
        "laplace_residual": {"max_residual": residual.max_residual, "bound": 0.01,
                             "pass": bool(residual.max_residual < 0.01)},
    }
    em.write_json("verify.json", verify_payload)

    # 5. tail asymptotics
    tails = tail_asymptotics(pool, gamma, preset.orientation)
    em.write_json("tail.json", {
        "gamma": gamma,
        "right_slope": tails.right_slope, "right_prefactor": tails.right_prefactor,
        "left_slope": tails.left_slope, "left_prefactor": tails.left_prefactor,
        "pool_mean": tails.pool_mean, "density_at_zero": tails.density_at_zero,
    })

    # 6. microscopic simulation and profile comparison
    pcfg = preset.particle_config(args.n_particles, args.horizon, seed.substream(6))
    sim = simulate(pcfg)
    speed = estimate_speed(sim.median_path, pcfg.burn_in, rng=seed.substream(7))
    snap_t = np.concatenate([np.full(len(p), t) for t, p in sim.snapshots])
    snap_x = np.concatenate([p for _, p in sim.snapshots])
    em.write_csv("snapshots.csv", "t,position", [snap_t, snap_x])
    em.write_csv("median.csv", "t,median", [sim.median_path[:, 0], sim.median_path[:, 1]])
    emp = centered_profile(sim.snapshots, (pcfg.burn_in, math.inf))
    em.write_csv("empirical.csv", "x,survival", [prof.grid, emp.survival(prof.grid)])
    cmpres = compare_profiles(emp, prof)
    em.write_json("compare.json", {
        "w1_after_shift": cmpres.w1_after_shift, "ks_after_shift": cmpres.ks_after_shift,
        "shift": cmpres.shift,
        "c_hat": speed.c_hat, "ci_low": speed.ci_low, "ci_high": speed.ci_high,
        "c_predicted": disp.c,
    })

    # 7. speed against population size (small ladder below the main run)
    rows = []
    for idx, n in enumerate(sorted({max(args.n_particles // 4, 50),
                                    max(args.n_particles // 2, 50), args.n_particles})):
        lcfg = preset.particle_config(n, args.horizon, seed.substream(8 + idx))
        lest = estimate_speed(simulate(lcfg).median_path, lcfg.burn_in,
                              rng=seed.substream(80 + idx))
        rows.append((n, lest.c_hat, lest.ci_low, lest.ci_high))
    arr = np.asarray(rows, dtype=float)
    em.write_csv("speed_vs_n.csv", "n,c_hat,ci_low,ci_high",
                 [arr[:, 0], arr[:, 1], arr[:, 2], arr[:, 3]])
    em.finish()
    all_pass = all(t["pass"] for t in verify_payload["tests"]) and verify_payload["laplace_residual"]["pass"]
    _print_json({"preset": args.preset, "gamma": gamma, "c": disp.c,
                 "verify_pass": bool(all_pass), "c_hat": speed.c_hat,
                 "w1_after_shift": cmpres.w1_after_shift, "out": str(out)})
    return 0


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mfwaves", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, seed=True):
        p.add_argument("--out", default=None, help="output directory (with manifest.json)")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--workers", type=int, default=1,
                       help="worker count; 1 keeps the deterministic acceptance mode")

    def model_flags(p):
        p.add_argument("--model", required=True, choices=["brownian", "bs", "power2"])
        p.add_argument("--jumps", default=None, help="exp:RATE | det:VALUE | gamma:SHAPE:RATE")
        p.add_argument("--lambda", dest="lam", type=float, default=0.0, help="independent-jump rate")
        p.add_argument("--sigma2", type=float, default=0.0)
        p.add_argument("--gamma", type=float, default=None)
        p.add_argument("--c", type=float, default=None)
        p.add_argument("--k", type=int, default=2, help="interacting particles per event")

    p = sub.add_parser("solve-gamma", help="decay rate for a model (power2: speed pinned to 1)")
    model_flags(p)
    common(p)
    p.set_defaults(func=_cmd_solve_gamma)

    p = sub.add_parser("critical-speed", help="critical pair (gamma*, c*)")
    model_flags(p)
    common(p)
    p.set_defaults(func=_cmd_critical_speed)

    p = sub.add_parser("dispersion", help="generic speed-decay solve")
    model_flags(p)
    common(p)
    p.set_defaults(func=_cmd_dispersion)

    p = sub.add_parser("sample-pool", help="iterate the martingale-limit pool")
    p.add_argument("--increment", required=True, choices=["sync", "power2"])
    p.add_argument("--jumps", default=None)
    p.add_argument("--lambda", dest="lam", type=float, default=0.0)
    p.add_argument("--sigma2", type=float, default=0.0)
    p.add_argument("--c", type=float, default=None)
    p.add_argument("--gamma", type=float, required=True)
    p.add_argument("--pool-size", type=int, default=100_000)
    p.add_argument("--iterations", type=int, default=50)
    p.add_argument("--k", type=int, default=2)
    common(p)
    p.set_defaults(func=_cmd_sample_pool)

    p = sub.add_parser("wave-profile", help="evaluate h on a grid from a pool CSV")
    p.add_argument("--pool", required=True)
    p.add_argument("--gamma", type=float, required=True)
    p.add_argument("--orientation", required=True, choices=["sync-right", "power2"])
    p.add_argument("--grid", default=None, help="lo:hi:n")
    common(p)
    p.set_defaults(func=_cmd_wave_profile)

    p = sub.add_parser("sample-wave", help="exact wave-variable draws from a pool CSV")
    p.add_argument("--pool", required=True)
    p.add_argument("--gamma", type=float, required=True)
    p.add_argument("--orientation", required=True, choices=["sync-right", "power2"])
    p.add_argument("--samples", type=int, default=10**6)
    common(p)
    p.set_defaults(func=_cmd_sample_wave)

    p = sub.add_parser("verify", help="fixed-point and equivalence KS tests")
    p.add_argument("--test", required=True,
                   choices=["fixed-point-sync", "fixed-point-power2", "equivalence-power2"])
    p.add_argument("--pool", default=None)
    p.add_argument("--samples-file", default=None, help="xi samples CSV (header xi)")
    p.add_argument("--jumps", default=None)
    p.add_argument("--lambda", dest="lam", type=float, default=0.0)
    p.add_argument("--sigma2", type=float, default=0.0)
    p.add_argument("--c", type=float, default=None)
    p.add_argument("--gamma", type=float, default=None)
    p.add_argument("--samples", type=int, default=10**6)
    common(p)
    p.set_defaults(func=_cmd_verify)

    p = sub.add_parser("simulate", help="event-driven N-particle run from a config file")
    p.add_argument("--config", required=True)
    common(p)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("compare", help="shift-aligned distance between empirical and predicted profiles")
    p.add_argument("--empirical", required=True, help="snapshots CSV (t,position)")
    p.add_argument("--profile", required=True, help="profile CSV (x,h,stderr)")
    p.add_argument("--gamma", type=float, required=True)
    p.add_argument("--orientation", default="power2", choices=["sync-right", "power2"])
    p.add_argument("--burn-in", type=float, default=None)
    common(p)
    p.set_defaults(func=_cmd_compare)

    p = sub.add_parser("pipeline", help="dispersion -> pool -> profile -> verify -> simulate")
    p.add_argument("--preset", required=True)
    p.add_argument("--pool-size", type=int, default=200_000)
    p.add_argument("--iterations", type=int, default=50)
    p.add_argument("--samples", type=int, default=400_000)
    p.add_argument("--n-particles", type=int, default=2000)
    p.add_argument("--horizon", type=float, default=60.0)
    common(p)
    p.set_defaults(func=_cmd_pipeline)

    return parser


def run(argv=None) -> int:
    """Parse argv and dispatch; returns the process exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
