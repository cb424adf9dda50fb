"""``qbattery`` command line interface.

    qbattery qubit    --beta 1 --omega 1 --omega-eg 1 --Omega-L 1 --g 1 --delta 8 --N0 6 --tau 1 --steps 500
    qbattery cavity   ... --steps 10000 --n-max 400 --initial uniform:0..50 --stride 1000
    qbattery validate --delta 100 --g 1 --Omega-L 1 --n 0 --tau 3
    qbattery preset   fig2
    qbattery sweep    --grid Omega_L=0.1:2:10 --grid g=0.1:2:10 --what fom ...

Settings come from an optional ``--config`` file of ``key = value`` lines,
overridden by flags. Exit status: 0 success, 2 configuration error,
3 numerical-diagnostic abort. Diagnostics go to stderr; stdout carries a
single summary line (or the resolved config with ``--dry-run``).
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import math
import os
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import cavity as cav
from . import qubit as qb
from .errors import LeakageError, NormalizationError, QBatteryError
from .io import matrix_rows, read_config, write_csv
from .model import ModelParams, build_effective_unitary, default_n_max
from .presets import PRESET_NAMES, run_preset
from .three_level import SURFACE_COLUMNS, adiabaticity_report, surface_rows

log = logging.getLogger("qbattery")

MODES = ("qubit", "cavity", "validate", "preset", "sweep")
OUT_ENV = "QBATTERY_OUT"
PARAM_KEYS = ("omega_g", "omega_eg", "omega", "Omega_L", "g", "delta", "N0", "epsilon", "beta", "tau")
SWEEP_KEYS = ("omega_eg", "omega", "Omega_L", "g", "delta", "N0", "beta", "tau")

VALIDATE_DEFAULTS = {"omega_eg": 1.0, "beta": 1.0, "N0": 0.0}

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


class ConfigError(Exception):
    pass


@dataclass
class RunConfig:
    mode: str = ""
    omega_g: float = 0.0
    omega_eg: float | None = None
    omega: float | None = None
    Omega_L: float | None = None
    g: float | None = None
    delta: float | None = None
    N0: float | None = None
    epsilon: float | None = None
    beta: float | None = None
    tau: float | None = None
    n_max: int | None = None
    steps: int | None = None
    stride: int | None = None
    initial: str | None = None
    ledger: bool = False
    out: str | None = None
    n: int = 0
    dt: float | None = None
    grid: list[str] = field(default_factory=list)
    what: str = "fom"
    workers: int = 1
    preset: str | None = None
    literal_epsilon: bool = False
    dump_unitary: bool = False

    def to_text(self) -> str:
        lines = []
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if v is None:
                continue
            if f.name == "grid":
                v = ";".join(v)
                if not v:
                    continue
            elif isinstance(v, bool):
                v = "true" if v else "false"
            elif isinstance(v, float):
                v = repr(v)
            lines.append(f"{f.name} = {v}")
        return "\n".join(lines) + "\n"

    def model_params(self) -> ModelParams:
        missing = [k for k in ("omega_eg", "Omega_L", "g", "delta", "beta", "tau") if getattr(self, k) is None]
        if self.N0 is None and self.epsilon is None:
            missing.append("N0 (or epsilon)")
        if missing:
            raise ConfigError(f"mode {self.mode!r} needs: {', '.join(missing)}")
        kw = dict(
            omega_g=self.omega_g,
            omega_e=self.omega_g + self.omega_eg,
            omega=self.omega,
            Omega_L=self.Omega_L,
            g=self.g,
            delta=self.delta,
            beta=self.beta,
            tau=self.tau,
        )
        try:
            if self.epsilon is not None:
                return ModelParams.from_epsilon(epsilon=self.epsilon, **kw)
            return ModelParams(N0=self.N0, **kw)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc


_FIELD_TYPES = {f.name: f.type for f in dataclasses.fields(RunConfig)}


def _coerce(key: str, value):
    if not isinstance(value, str):
        return value
    kind = _FIELD_TYPES[key]
    try:
        if key == "grid":
            return [s for s in value.split(";") if s.strip()]
        if kind == "bool":
            low = value.strip().lower()
            if low not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(value)
            return low in ("true", "1", "yes")
        if kind.startswith("float"):
            return float(value)
        if kind.startswith("int"):
            return int(value)
    except ValueError:
        raise ConfigError(f"bad value for {key}: {value!r}") from None
    return value.strip()


def config_from_mapping(mapping: dict) -> RunConfig:
    cfg = RunConfig()
    for raw_key, value in mapping.items():
        key = raw_key.replace("-", "_")
        if key not in _FIELD_TYPES:
            raise ConfigError(f"unknown config key: {raw_key}")
        setattr(cfg, key, _coerce(key, value))
    return cfg


def parse_config_text_to_run(text: str) -> RunConfig:
    from .io import parse_config_text

    return config_from_mapping(parse_config_text(text))


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="qbattery",
        description="Repeated-interaction quantum batteries: qubit and cavity charging, validation, presets.",
        allow_abbrev=False,
        argument_default=argparse.SUPPRESS,
    )
    p.add_argument("mode", choices=MODES)
    p.add_argument("preset", nargs="?", help="preset name (preset mode)")
    p.add_argument("--config", help="key = value config file; flags override it")
    for flag, dest in (
        ("--omega-g", "omega_g"),
        ("--omega-eg", "omega_eg"),
        ("--omega", "omega"),
        ("--Omega-L", "Omega_L"),
        ("--g", "g"),
        ("--delta", "delta"),
        ("--N0", "N0"),
        ("--epsilon", "epsilon"),
        ("--beta", "beta"),
        ("--tau", "tau"),
        ("--dt", "dt"),
    ):
        p.add_argument(flag, dest=dest, type=float)
    p.add_argument("--n-max", dest="n_max", type=int)
    p.add_argument("--steps", type=int, help="number of collisions")
    p.add_argument("--stride", type=int, help="snapshot stride (cavity)")
    p.add_argument("--n", type=int, help="photon sector (validate)")
    p.add_argument("--initial", help="qubit: thermal|passive|diag:pg,pe|file:PATH; "
                   "cavity: thermal|thermal:nbar=X|uniform:a..b|sector:pN0,pN0p1|file:PATH")
    p.add_argument("--ledger", action=argparse.BooleanOptionalAction)
    p.add_argument("--out", help=f"output root (default ${OUT_ENV} or ./qbattery_out)")
    p.add_argument("--grid", action="append", help="sweep axis key=start:stop:count (at most two)")
    p.add_argument("--what", choices=("fom", "adiabatic"))
    p.add_argument("--workers", type=int)
    p.add_argument("--literal-epsilon", dest="literal_epsilon", action="store_true")
    p.add_argument("--dump-unitary", dest="dump_unitary", action="store_true")
    p.add_argument("--dry-run", dest="dry_run", action="store_true")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def resolve_config(ns: argparse.Namespace) -> RunConfig:
    values = vars(ns).copy()
    merged: dict = {}
    cfg_path = values.pop("config", None)
    if cfg_path:
        try:
            merged.update(read_config(cfg_path))
        except (OSError, UnicodeDecodeError, ValueError) as exc:
            raise ConfigError(f"cannot read config {cfg_path}: {exc}") from exc
    for key in ("dry_run", "verbose"):
        values.pop(key, None)
    merged.update(values)
    cfg = config_from_mapping(merged)
    if cfg.mode == "validate":
        # the sector ODE ignores omega_eg and beta; N0 = 0 keeps epsilon at its resonant default
        for key, default in VALIDATE_DEFAULTS.items():
            if getattr(cfg, key) is None and not (key == "N0" and cfg.epsilon is not None):
                setattr(cfg, key, default)
    validate_config(cfg)
    return cfg


def validate_config(cfg: RunConfig) -> None:
    if cfg.mode not in MODES:
        raise ConfigError(f"unknown mode {cfg.mode!r}")
    if cfg.N0 is not None and cfg.epsilon is not None:
        raise ConfigError("give either N0 or epsilon, not both")
    if cfg.ledger and cfg.mode not in ("qubit", "cavity"):
        raise ConfigError("--ledger only applies to qubit and cavity runs")
    if cfg.mode == "preset":
        if cfg.preset not in PRESET_NAMES:
            raise ConfigError(f"unknown preset {cfg.preset!r}; choose from {', '.join(PRESET_NAMES)}")
    elif cfg.preset is not None:
        raise ConfigError("a positional preset name is only valid in preset mode")
    if cfg.mode in ("qubit", "cavity"):
        if cfg.steps is None or cfg.steps < 0:
            raise ConfigError(f"{cfg.mode} mode needs --steps >= 0")
    if cfg.mode == "qubit" and cfg.omega is None:
        raise ConfigError("qubit mode needs the cavity frequency --omega")
    if cfg.mode == "cavity" and cfg.ledger and cfg.omega is None:
        raise ConfigError("the cavity ledger needs --omega")
    if cfg.mode == "sweep":
        if not 1 <= len(cfg.grid) <= 2:
            raise ConfigError("sweep needs one or two --grid key=start:stop:count axes")
        for spec in cfg.grid:
            parse_grid(spec)
    if cfg.n_max is not None and cfg.n_max < 1:
        raise ConfigError("n_max must be at least 1")
    if cfg.workers < 1:
        raise ConfigError("workers must be at least 1")
    if cfg.mode in ("qubit", "cavity", "validate", "sweep"):
        cfg.model_params()


def parse_grid(spec: str) -> tuple[str, np.ndarray]:
    try:
        key, rng = spec.split("=", 1)
        start, stop, count = rng.split(":")
        values = np.linspace(float(start), float(stop), int(count))
    except ValueError:
        raise ConfigError(f"bad grid spec {spec!r}; expected key=start:stop:count") from None
    key = key.strip().replace("-", "_")
    if key not in SWEEP_KEYS:
        raise ConfigError(f"cannot sweep {key!r}; choose from {', '.join(SWEEP_KEYS)}")
    if len(values) < 1:
        raise ConfigError(f"grid {spec!r} has no points")
    return key, values


def out_root(cfg: RunConfig) -> Path:
    return Path(cfg.out or os.environ.get(OUT_ENV) or "qbattery_out")


def qubit_initial(spec: str | None):
    spec = spec or "thermal"
    if spec in ("thermal", "passive"):
        return spec
    kind, _, arg = spec.partition(":")
    if kind == "diag":
        try:
            return tuple(float(x) for x in arg.split(","))
        except ValueError:
            raise ConfigError(f"bad qubit initial {spec!r}") from None
    if kind == "file":
        vals = np.loadtxt(arg, delimiter=",", ndmin=1).ravel()
        return tuple(float(v) for v in vals)
    raise ConfigError(f"unknown qubit initial state {spec!r}")


def cavity_initial(spec: str | None, params: ModelParams, n_max: int | None) -> cav.CavityState:
    spec = spec or "thermal"
    kind, _, arg = spec.partition(":")
    try:
        if kind == "thermal":
            if arg:
                nbar = float(arg.split("=", 1)[-1])
            else:
                nbar = params.mean_photons()
            n = n_max or max(default_n_max(params), math.ceil(28.0 / math.log1p(1.0 / nbar)) if nbar > 0 else 1)
            return cav.thermal_state(nbar, n)
        if kind == "uniform":
            lo, hi = (int(x) for x in arg.split(".."))
            return cav.uniform_state(lo, hi, n_max or max(default_n_max(params), 8 * hi))
        if kind == "sector":
            p0, p1 = (float(x) for x in arg.split(","))
            if not params.n0_is_integer:
                raise ConfigError("a sector initial state needs integer N0")
            return cav.sector_state(p0, p1, int(params.N0), n_max or default_n_max(params))
        if kind == "file":
            probs = np.loadtxt(arg, delimiter=",", ndmin=1).ravel()
            if n_max is not None and n_max + 1 > len(probs):
                probs = np.concatenate([probs, np.zeros(n_max + 1 - len(probs))])
            return cav.CavityState(probs)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"bad cavity initial {spec!r}: {exc}") from None
    raise ConfigError(f"unknown cavity initial state {spec!r}")


def _dump_unitary(params: ModelParams, n_max: int, directory: Path) -> None:
    u = build_effective_unitary(params, n_max)
    write_csv(directory / "unitary.csv", ("row", "col", "re", "im"), matrix_rows(u.matrix))


FOM_COLUMNS = ("A_tau", "rate", "p_g_inf", "p_e_inf", "ergotropy", "W_tot_thermal",
               "W_tot_passive", "eta_thermal", "eta_passive")


def _fom_values(params: ModelParams, n_max: int | None) -> tuple:
    f = qb.qubit_figures_of_merit(params, n_max)
    pg, pe = qb.fixed_point(params.beta * params.omega)
    return (f.A_tau, f.rate, pg, pe, f.ergotropy, f.W_tot_thermal, f.W_tot_passive, f.eta_thermal, f.eta_passive)


def run_qubit(cfg: RunConfig) -> str:
    params = cfg.model_params()
    n_max = cfg.n_max or default_n_max(params)
    init = qubit_initial(cfg.initial)
    rep = qb.run_qubit_charging(params, init, cfg.steps, n_max=n_max, ledger=cfg.ledger)
    d = out_root(cfg) / "qubit"
    erg = rep.ergotropy_running(params.omega_eg)
    write_csv(
        d / "trajectory.csv",
        ("step", "p_g", "p_e", "ergotropy_running"),
        ((i, row[0], row[1], erg[i]) for i, row in enumerate(rep.trajectory)),
    )
    write_csv(d / "fom.csv", PARAM_KEYS + ("n_max",) + FOM_COLUMNS,
              [_param_values(params) + (n_max,) + _fom_values(params, n_max)])
    if rep.ledger is not None:
        write_csv(d / "ledger.csv", rep.ledger.columns, rep.ledger.rows())
    if cfg.dump_unitary:
        _dump_unitary(params, n_max, d)
    pg, pe = rep.final
    return (f"qubit steps={cfg.steps} p_g={pg:.12g} p_e={pe:.12g} p_e_inf={rep.fixed_point[1]:.12g} "
            f"A_tau={rep.figures.A_tau:.6g} rate={rep.figures.rate:.6g} out={d}")


def _param_values(params: ModelParams) -> tuple:
    return (params.omega_g, params.omega_eg, params.omega if params.omega is not None else math.nan,
            params.Omega_L, params.g, params.delta, params.N0, params.epsilon, params.beta, params.tau)


def run_cavity(cfg: RunConfig) -> str:
    params = cfg.model_params()
    init = cavity_initial(cfg.initial, params, cfg.n_max)
    run = cav.run_cavity_charging(
        params, init, cfg.steps, stride=cfg.stride, ledger=cfg.ledger, abort_on_leakage=True
    )
    d = out_root(cfg) / "cavity"
    write_csv(d / "snapshots.csv", ("collision_index", "n", "p_n"), run.snapshot_rows())
    if run.diagnostics is not None:
        write_csv(d / "diagnostics.csv", run.diagnostics.columns, run.diagnostics.rows())
    if run.ledger is not None:
        write_csv(d / "ledger.csv", run.ledger.columns, run.ledger.rows())
    if cfg.dump_unitary:
        _dump_unitary(params, init.n_max, d)
    return (f"cavity steps={cfg.steps} n_max={init.n_max} mean_n={run.final.mean_n:.12g} "
            f"leakage={run.max_leakage:.3g} out={d}")


def run_validate(cfg: RunConfig) -> str:
    params = cfg.model_params()
    rep = adiabaticity_report(params, cfg.n, params.tau, cfg.dt)
    d = out_root(cfg) / "validate"
    surface = [(params.Omega_L / params.delta, params.g / params.delta, rep)]
    write_csv(d / "adiabaticity.csv", SURFACE_COLUMNS, surface_rows(params, surface))
    return (f"validate n={cfg.n} tau={params.tau:g} max_pop_error={rep.max_pop_error:.6g} "
            f"max_h_population={rep.max_h_population:.6g} valid={rep.validity_flag} out={d}")


def run_preset_mode(cfg: RunConfig) -> str:
    paths = run_preset(cfg.preset, out_root(cfg), literal_epsilon=cfg.literal_epsilon)
    return f"preset {cfg.preset} wrote {len(paths)} files to {paths[0].parent}"


def _sweep_point(job):
    index, base, assignment, what, n_max, n, dt, directory = job
    params = base.replace(**assignment)
    values = tuple(assignment[k] for k in assignment)
    if what == "fom":
        cols, row = FOM_COLUMNS, _fom_values(params, n_max)
    else:
        rep = adiabaticity_report(params, n, params.tau, dt)
        cols = SURFACE_COLUMNS
        row = next(surface_rows(params, [(params.Omega_L / params.delta, params.g / params.delta, rep)]))
    write_csv(Path(directory) / f"point_{index:05d}.csv", tuple(assignment) + cols, [values + tuple(row)])
    return index, values + tuple(row), tuple(assignment) + cols


def _sweep_assignment(base: ModelParams, key: str, value: float) -> dict:
    if key == "omega_eg":
        return {"omega_e": base.omega_g + value}
    return {key: value}


def run_sweep(cfg: RunConfig) -> str:
    base = cfg.model_params()
    axes = [parse_grid(s) for s in cfg.grid]
    if cfg.what == "fom" and base.omega is None and all(k != "omega" for k, _ in axes):
        raise ConfigError("a figures-of-merit sweep needs --omega")
    d = out_root(cfg) / "sweep"
    (d / "points").mkdir(parents=True, exist_ok=True)
    jobs = []
    grids = np.meshgrid(*[v for _, v in axes], indexing="ij")
    keys = [k for k, _ in axes]
    for idx, combo in enumerate(zip(*[g.ravel() for g in grids])):
        assignment: dict = {}
        for k, v in zip(keys, combo):
            assignment.update(_sweep_assignment(base, k, float(v)))
        jobs.append((idx, base, assignment, cfg.what, cfg.n_max, cfg.n, cfg.dt, str(d / "points")))
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(_sweep_point, jobs))
    else:
        results = [_sweep_point(j) for j in jobs]
    results.sort(key=lambda r: r[0])
    cols = ("point",) + results[0][2]
    write_csv(d / "sweep.csv", cols, ((i,) + row for i, row, _ in results))
    return f"sweep points={len(results)} what={cfg.what} out={d}"


RUNNERS = {
    "qubit": run_qubit,
    "cavity": run_cavity,
    "validate": run_validate,
    "preset": run_preset_mode,
    "sweep": run_sweep,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_CONFIG
    logging.basicConfig(
        level=logging.DEBUG if getattr(ns, "verbose", False) else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    logging.captureWarnings(True)
    try:
        cfg = resolve_config(ns)
        if getattr(ns, "dry_run", False):
            sys.stdout.write(cfg.to_text())
            return EXIT_OK
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            summary = RUNNERS[cfg.mode](cfg)
    except (ConfigError, KeyError) as exc:
        print(f"qbattery: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NormalizationError, LeakageError) as exc:
        print(f"qbattery: numerical abort: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (QBatteryError, ValueError) as exc:
        print(f"qbattery: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(summary)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
