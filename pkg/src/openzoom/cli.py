"""Command-line front end: ``openzoom CONFIG [--seed S] [--out PATH] [--threads N]``.

A config is a flat TOML file.  ``command`` selects the experiment; every
other key is typed and checked against the command's schema, and unknown
keys are rejected.  Exit status is 0 on success, 1 on a computational
error and 2 on an invalid config.
"""

from __future__ import annotations

import argparse
import sys
import warnings

import numpy as np

from . import __version__
from . import dynamics as dyn
from .errors import ConfigError, OpenZoomError
from .holes import EMPTY_HOLE, interval_hole
from .measures import atomic_measure, dirac, lebesgue_measure, periodic_orbit_measure
from .open_system import ESCAPE_COLUMNS, escape_rate_exact, escape_rate_mc, escape_rate_spectral
from .reports import canonical_json, config_digest, emit_report, render_csv
from .stability import (
    StabilityReport,
    SystemSequence,
    ledrappier_walters_check,
    reduce_skew_potential,
    run_stability_experiment,
    skew_pressure_gap,
    uniqueness_family,
)
from .thermo import (
    PRESSURE_COLUMNS,
    equilibrium_measure,
    open_pressure,
    periodic_orbit_pressure,
    pressure,
)
from .transfer import assemble_transfer_matrix
from .zooming import CERTIFICATE_COLUMNS, detect_hyperbolic_times

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

NUM = (int, float)

MAP_KEYS = {
    "map": (str, "doubling"),
    "breaks": (list, [1 / 3]),
    "a0": (NUM, None),
    "d": (int, 16),
    "alpha": (NUM, 0.01),
    "k": (int, 2),
    "ratio": (NUM, 0.5),
    "shift_depth": (int, 64),
}
POTENTIAL_KEYS = {
    "potential": (str, "zero"),
    "c": (NUM, 0.0),
    "t": (NUM, 1.0),
    "amplitude": (NUM, 1.0),
    "frequency": (int, 1),
    "values": (list, None),
}

SCHEMAS = {
    "detect": {
        **MAP_KEYS,
        "x": ((float, int, list), 0.3),
        "N": (int, 100),
        "sigma": (NUM, 0.5),
        "eps": (NUM, 0.1),
        "b": (NUM, None),
        "beta": (NUM, 1.0),
        "seed": (int, None),
    },
    "escape": {
        **MAP_KEYS,
        "hole": (list, None),
        "method": (str, "mc"),
        "n_max": (int, 20),
        "samples": (int, 1_000_000),
        "depth": (int, None),
        "seed": (int, None),
    },
    "pressure": {
        **MAP_KEYS,
        **POTENTIAL_KEYS,
        "method": (str, "spectral"),
        "depth": (int, 8),
        "period": (int, 12),
        "hole": (list, None),
    },
    "equilibrium": {**MAP_KEYS, **POTENTIAL_KEYS, "depth": (int, 6)},
    "stability": {
        "sequence": (str, "sine"),
        "count": (int, 32),
        "depth": (int, 10),
        "amplitude": (NUM, 1.0),
        "t": (NUM, 0.5),
        "break_point": (NUM, 1 / 3),
    },
    "skew": {
        "fiber": (str, "linear"),
        "lam": (NUM, 0.25),
        "J": (int, 40),
        "potential": (str, "zero"),
        "t": (NUM, 1.0),
        "amplitude": (NUM, 1.0),
        "depth": (int, 10),
        "period": (int, 12),
        "samples": (int, 1_000_000),
        "n_max": (int, 12),
        "n_settle": (int, 30),
        "seed": (int, None),
    },
    "uniqueness": {
        "psi": (str, "distance0"),
        "count": (int, 32),
        "candidates": (str, "atomic"),
    },
}
STOCHASTIC = {"escape": lambda cfg: cfg["method"] == "mc", "skew": lambda cfg: True}
CHOICES = {
    "map": sorted(dyn.MAP_BUILDERS),
    "potential": ["zero", "constant", "geometric", "sine", "cylinder"],
    "method": {"escape": ["mc", "spectral", "exact"], "pressure": ["spectral", "periodic"]},
    "sequence": ["sine", "temperature", "breaks"],
    "fiber": ["linear", "sine"],
    "psi": ["distance0", "x"],
    "candidates": ["atomic"],
}


# ---------------------------------------------------------------------------
# config parsing


def _check_type(key, value, typ):
    if typ is NUM or typ == NUM:
        ok = isinstance(value, (int, float)) and not isinstance(value, bool)
    elif isinstance(typ, tuple):
        ok = isinstance(value, typ) and not isinstance(value, bool)
    elif typ is int:
        ok = isinstance(value, int) and not isinstance(value, bool)
    else:
        ok = isinstance(value, typ)
    if not ok:
        raise ConfigError(f"field '{key}' has the wrong type ({type(value).__name__})", key)


def _check_hole(value):
    if value is None:
        return None
    if not isinstance(value, list) or not all(
        isinstance(p, list)
        and len(p) == 2
        and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in p)
        and p[1] > p[0]
        for p in value
    ):
        raise ConfigError("field 'hole' must be a list of [a, b] pairs with a < b", "hole")
    return [[float(a), float(b)] for a, b in value]


def parse_config(text: str, seed: int | None = None) -> dict:
    """Validate a TOML document and return the fully resolved config."""
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"cannot parse config: {exc}") from None
    if "command" not in raw:
        raise ConfigError("field 'command' is required", "command")
    command = raw.pop("command")
    if command not in SCHEMAS:
        raise ConfigError(f"field 'command': unknown command {command!r}; expected one of {sorted(SCHEMAS)}", "command")
    schema = SCHEMAS[command]
    for key in raw:
        if key not in schema:
            raise ConfigError(f"unknown field '{key}' for command {command!r}", key)
    cfg = {"command": command}
    for key, (typ, default) in schema.items():
        if key in raw:
            _check_type(key, raw[key], typ)
            cfg[key] = raw[key]
        else:
            cfg[key] = default
    if seed is not None and "seed" in schema:
        cfg["seed"] = seed
    for key in ("map", "potential", "sequence", "fiber", "psi", "candidates"):
        if key in cfg and cfg[key] not in CHOICES[key]:
            raise ConfigError(f"field '{key}': {cfg[key]!r} is not one of {CHOICES[key]}", key)
    if "method" in cfg and cfg["method"] not in CHOICES["method"][command]:
        raise ConfigError(f"field 'method': {cfg['method']!r} is not one of {CHOICES['method'][command]}", "method")
    if "hole" in cfg:
        cfg["hole"] = _check_hole(cfg["hole"])
    if command == "escape" and cfg["hole"] is None:
        raise ConfigError("field 'hole' is required for escape (use [] for the closed system)", "hole")
    if command in STOCHASTIC and STOCHASTIC[command](cfg) and cfg.get("seed") is None:
        raise ConfigError(f"command {command!r} is stochastic and needs a seed", "seed")
    for key in ("N", "count", "samples", "depth", "period", "n_max", "J", "n_settle"):
        if cfg.get(key) is not None and cfg[key] < 1:
            raise ConfigError(f"field '{key}' must be positive", key)
    return cfg


# ---------------------------------------------------------------------------
# builders


def _build_map(cfg):
    name = cfg["map"]
    params = {
        "doubling": {},
        "piecewise_linear": {"breaks": cfg["breaks"]},
        "quadratic": {"a0": 2.0 if cfg["a0"] is None else cfg["a0"]},
        "viana": {"d": cfg["d"], "a0": 1.8 if cfg["a0"] is None else cfg["a0"], "alpha": cfg["alpha"]},
        "shift": {"k": cfg["k"], "depth": cfg["shift_depth"]},
        "weighted_shift": {"ratio": cfg["ratio"], "depth": cfg["shift_depth"]},
    }[name]
    return dyn.make_map(name, **params)


def _build_potential(cfg, m):
    kind = cfg["potential"]
    if kind == "zero":
        return dyn.constant_potential(0.0)
    if kind == "constant":
        return dyn.constant_potential(cfg["c"])
    if kind == "geometric":
        return dyn.geometric_potential(m, cfg["t"])
    if kind == "sine":
        return dyn.sine_potential(cfg["amplitude"], cfg["frequency"])
    if cfg["values"] is None:
        raise ConfigError("field 'values' is required for a cylinder potential", "values")
    return dyn.cylinder_potential(m, cfg["values"])


def _hole(cfg):
    if not cfg.get("hole"):
        return EMPTY_HOLE
    return interval_hole(cfg["hole"])


# ---------------------------------------------------------------------------
# commands


def _cmd_detect(cfg, threads):
    m = _build_map(cfg)
    x = np.asarray(cfg["x"], dtype=float)
    rng = np.random.default_rng(cfg["seed"]) if cfg["seed"] is not None else None
    certs = detect_hyperbolic_times(m, x, cfg["N"], cfg["sigma"], cfg["eps"], cfg["b"], cfg["beta"], rng=rng)
    return [c.row() for c in certs], CERTIFICATE_COLUMNS


def _cmd_escape(cfg, threads):
    m = _build_map(cfg)
    hole = _hole(cfg)
    if cfg["method"] == "mc":
        est = escape_rate_mc(m, hole, n_max=cfg["n_max"], samples=cfg["samples"], seed=cfg["seed"], threads=threads)
    elif cfg["method"] == "spectral":
        est = escape_rate_spectral(m, hole, cfg["depth"])
    else:
        est = escape_rate_exact(m, hole, cfg["depth"] or 20)
    return [est.row()], ESCAPE_COLUMNS


def _cmd_pressure(cfg, threads):
    m = _build_map(cfg)
    phi = _build_potential(cfg, m)
    if cfg["method"] == "periodic":
        est = periodic_orbit_pressure(m, phi, cfg["period"])
    elif cfg["hole"]:
        est = open_pressure(m, phi, _hole(cfg), cfg["depth"])
    else:
        est = pressure(assemble_transfer_matrix(m, phi, cfg["depth"]))
    return [est.row()], PRESSURE_COLUMNS


def _cmd_equilibrium(cfg, threads):
    m = _build_map(cfg)
    phi = _build_potential(cfg, m)
    mu = equilibrium_measure(assemble_transfer_matrix(m, phi, cfg["depth"]))
    lo, hi = m.cylinders(cfg["depth"])
    rows = [
        {"cell": i, "lo": f"{a:.17g}", "hi": f"{b:.17g}", "weight": f"{w:.15g}"}
        for i, (a, b, w) in enumerate(zip(lo, hi, mu.weights))
    ]
    return rows, ("cell", "lo", "hi", "weight")


def _stability_sequence(cfg) -> SystemSequence:
    n = range(1, cfg["count"] + 1)
    D = dyn.doubling_map()
    if cfg["sequence"] == "sine":
        return SystemSequence(
            [(D, dyn.sine_potential(cfg["amplitude"] / k)) for k in n], (D, dyn.constant_potential(0.0))
        )
    if cfg["sequence"] == "temperature":
        t = cfg["t"]
        return SystemSequence(
            [(D, dyn.constant_potential(-(t + 1 / k) * np.log(2))) for k in n],
            (D, dyn.constant_potential(-t * np.log(2))),
        )
    c = cfg["break_point"]
    maps = [dyn.piecewise_linear_map([c + (1 - c) / (k + 3)]) for k in n]
    limit = dyn.piecewise_linear_map([c])
    return SystemSequence([(f, dyn.geometric_potential(f)) for f in maps], (limit, dyn.geometric_potential(limit)))


def _cmd_stability(cfg, threads):
    rep: StabilityReport = run_stability_experiment(_stability_sequence(cfg), cfg["depth"], threads=threads)
    return rep.csv_rows(), StabilityReport.columns


def _skew(cfg):
    D = dyn.doubling_map()
    lam = cfg["lam"]
    if cfg["fiber"] == "linear":
        return dyn.build_skew_product(D, lambda x, y: lam * y, lam, y0=0.0)
    return dyn.build_skew_product(D, lambda x, y: lam * (y + np.sin(2 * np.pi * x)), lam)


def _cmd_skew(cfg, threads):
    F = _skew(cfg)
    rows = []
    if F.fixed_fiber_point is not None:
        red = reduce_skew_potential(F, lambda x, y: y, cfg["J"])
        grid = np.linspace(0, 1, 257)[:-1]
        ys = np.linspace(*F.fiber_bounds, 33)
        sup = float(np.abs(red.phi_tilde(grid[:, None], ys[None, :])).max())
        rows.append({"quantity": "reduced_sup", "value": f"{sup:.6g}", "reference": f"{red.tail_bound:.6g}",
                     "pass": int(sup <= red.tail_bound)})
    kind = cfg["potential"]
    if kind == "zero":
        phi = lambda x, y: np.zeros_like(np.asarray(x, dtype=float))  # noqa: E731
    elif kind == "geometric":
        phi = lambda x, y: np.full(np.shape(x), -cfg["t"] * np.log(2))  # noqa: E731
    elif kind == "sine":
        phi = lambda x, y: cfg["amplitude"] * np.sin(2 * np.pi * np.asarray(x, dtype=float))  # noqa: E731
    else:
        raise ConfigError("field 'potential' for skew must be zero, geometric or sine", "potential")
    gap = skew_pressure_gap(F, phi, cfg["depth"], cfg["period"])
    rows.append({"quantity": "pressure_gap", "value": f"{gap.gap:.6g}", "reference": "0.01", "pass": int(gap.gap <= 1e-2)})
    mu = lebesgue_measure(F.base, 8)
    pair = ledrappier_walters_check(
        F, mu, base_sampler=lambda rng, size: rng.random(size), samples=cfg["samples"], seed=cfg["seed"],
        n_max=cfg["n_max"], n_settle=cfg["n_settle"], threads=threads,
    )
    rows.append({"quantity": "entropy_skew", "value": f"{pair.skew.value:.6g}", "reference": f"{pair.base.value:.6g}",
                 "pass": int(pair.agree)})
    return rows, ("quantity", "value", "reference", "pass")


def _cmd_uniqueness(cfg, threads):
    D = dyn.doubling_map()
    if cfg["psi"] == "distance0":
        psi = dyn.explicit_potential(lambda x: dyn.circle_distance(x, 0.0), "dist0")
    else:
        psi = dyn.explicit_potential(lambda x: np.asarray(x, dtype=float), "x")
    cands = [dirac(D, 0.0), periodic_orbit_measure(D, 1 / 3, 2)]
    res = uniqueness_family(D, dyn.constant_potential(0.0), psi, cands[0], count=cfg["count"], candidates=cands)
    rows = [
        {"n": r["n"], "a_n": f"{r['a_n']:.12g}", "value_delta0": f"{r['values'][0]:.12g}",
         "value_period2": f"{r['values'][1]:.12g}", "winner": r["winner"]}
        for r in res.selection
    ]
    return rows, ("n", "a_n", "value_delta0", "value_period2", "winner")


COMMANDS = {
    "detect": _cmd_detect,
    "escape": _cmd_escape,
    "pressure": _cmd_pressure,
    "equilibrium": _cmd_equilibrium,
    "stability": _cmd_stability,
    "skew": _cmd_skew,
    "uniqueness": _cmd_uniqueness,
}


def run_config(cfg: dict, out=None, threads: int = 1, seed: int | None = None) -> str:
    """Run a resolved config and write its report; returns the report text."""
    rows, columns = COMMANDS[cfg["command"]](cfg, threads)
    meta = {
        "openzoom": __version__,
        "command": cfg["command"],
        "config": canonical_json(cfg),
        "digest": config_digest(cfg),
        "seed": cfg.get("seed", seed),
        "threads": threads,
    }
    if out is None:
        text = render_csv(rows, columns, meta)
        sys.stdout.write(text)
        return text
    return emit_report(rows, columns, out, meta)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="openzoom", description=__doc__.splitlines()[0])
    parser.add_argument("config", help="path to a flat TOML experiment config")
    parser.add_argument("--seed", type=int, default=None, help="override the config seed")
    parser.add_argument("--out", default=None, help="report path (default: stdout)")
    parser.add_argument("--threads", type=int, default=1, help="worker threads (results do not depend on it)")
    args = parser.parse_args(argv)
    try:
        with open(args.config, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        cfg = parse_config(text, args.seed)
        if args.threads < 1:
            raise ConfigError("--threads must be at least 1", "threads")
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            run_config(cfg, args.out, args.threads, args.seed)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except OpenZoomError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
