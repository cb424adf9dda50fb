"""Named, deterministic experiment presets behind each figure.

``run_preset(name, out_root)`` writes ``<out_root>/<name>/data.csv`` together
with ``meta.txt`` (every parameter, verbatim) and ``plot.py``, a standalone
matplotlib script that reads the CSV. Nothing here is random, so reruns are
byte-identical.
"""

from __future__ import annotations

import dataclasses
import math
import textwrap
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .cavity import (
    Diagnostics,
    run_cavity_charging,
    sector_state,
    thermal_state,
    uniform_state,
)
from .io import fmt, write_csv
from .model import ModelParams
from .qubit import a_tau, fixed_point


@dataclass(frozen=True)
class Preset:
    name: str
    description: str
    runs: tuple[ModelParams, ...]
    initial: str
    n_collisions: int = 0
    snapshots: tuple[int, ...] = ()
    n_max: int = 0
    schema: str = ""
    notes: tuple[str, ...] = field(default_factory=tuple)


FIG34_BASE = dict(omega_e=1.3, Omega_L=0.1, delta=94.0, N0=5.0, beta=1.0, tau=1.0)
FIG34_SECTOR = 5
FIG34_COLLISIONS = 2000
FIG34_STRIDE = 10
FIG1_GRID = np.linspace(0.0, 2.0, 21)
FIG1_DELTA = 100.0


def _fig34_params(g: float, literal_epsilon: bool) -> ModelParams:
    if literal_epsilon:
        base = {k: v for k, v in FIG34_BASE.items() if k != "N0"}
        return ModelParams.from_epsilon(epsilon=1.3, g=g, **base)
    return ModelParams(g=g, **FIG34_BASE)


def _presets(literal_epsilon: bool = False) -> dict[str, Preset]:
    fig34_note = (
        "epsilon=1.3 read as the qubit gap omega_e-omega_g; the Stark shift follows from N0=5"
        if not literal_epsilon
        else "literal reading: Stark shift epsilon=1.3, N0 derived from it; diagnostics still on sector 5"
    )
    fig2 = ModelParams(omega_e=1.3, Omega_L=1.0, delta=8.0, N0=10.5, beta=10.0, g=1.8, tau=1.0)
    pairs = (18.0, 58.0)
    return {
        "fig1": Preset(
            "fig1",
            "qubit rate A_tau over (Omega_L/sqrt(delta), g/sqrt(delta)) with the reference plane 1/(1+exp(-beta omega))",
            (ModelParams(omega_e=1.0, omega=1.0, Omega_L=0.0, g=0.0, delta=FIG1_DELTA, N0=6.5, beta=1.0, tau=1.0),),
            "n/a (rate only)",
            schema="fig1/v1: Omega_L_over_sqrt_delta,g_over_sqrt_delta,A_tau,qubit_reference",
            notes=("A_tau depends on the couplings only through Omega_L g/delta and g^2/delta",),
        ),
        "fig2": Preset(
            "fig2",
            "photon distribution of the cavity battery away from selectivity",
            (fig2,),
            "uniform:0..50",
            n_collisions=10_000,
            snapshots=(0, 2000, 4000, 6000, 8000, 10000),
            n_max=400,
            schema="snapshots/v1: collision_index,n,p_n",
        ),
        "fig3-left": Preset(
            "fig3-left",
            "metastability of the selective steady state for g=18 and g=58",
            tuple(_fig34_params(g, literal_epsilon) for g in pairs),
            "sector:p_e_th,p_g_th (selective fixed point)",
            n_collisions=FIG34_COLLISIONS,
            n_max=200,
            schema="diagnostics+g/v1: g,collision_index,p_N0,p_N0p1,p_up,p_down,ratio,mean_n",
            notes=(fig34_note,),
        ),
        "fig3-right": Preset(
            "fig3-right",
            "inversion of the resonant sector from the uninverted sector state for g=18 and g=58",
            tuple(_fig34_params(g, literal_epsilon) for g in pairs),
            "sector:p_g_th,p_e_th (uninverted)",
            n_collisions=FIG34_COLLISIONS,
            n_max=200,
            schema="diagnostics+g/v1: g,collision_index,p_N0,p_N0p1,p_up,p_down,ratio,mean_n",
            notes=(fig34_note,),
        ),
        "fig4-selective": Preset(
            "fig4-selective",
            "thermal cavity (nbar=5) charged in the selective regime g=58",
            (_fig34_params(58.0, literal_epsilon),),
            "thermal:nbar=5",
            n_collisions=FIG34_COLLISIONS,
            n_max=200,
            schema="diagnostics/v1: collision_index,p_N0,p_N0p1,p_up,p_down,ratio,mean_n",
            notes=(fig34_note,),
        ),
        "fig4-generic": Preset(
            "fig4-generic",
            "thermal cavity (nbar=5) charged away from selectivity g=18",
            (_fig34_params(18.0, literal_epsilon),),
            "thermal:nbar=5",
            n_collisions=FIG34_COLLISIONS,
            n_max=200,
            schema="diagnostics/v1: collision_index,p_N0,p_N0p1,p_up,p_down,ratio,mean_n",
            notes=(fig34_note,),
        ),
        "rydberg": Preset(
            "rydberg",
            "order-of-magnitude estimates for Rydberg atoms in a microwave cavity (SI, rad/s)",
            (),
            "n/a",
            schema="scalars/v1: quantity,value,unit",
            notes=(
                "the maser-vs-switching ratio convention is ambiguous; both candidates are reported",
                "neither candidate equals 1e6 with these inputs; the numbers are reported, not asserted",
            ),
        ),
    }


PRESET_NAMES = tuple(_presets())


def get_preset(name: str, literal_epsilon: bool = False) -> Preset:
    table = _presets(literal_epsilon)
    if name not in table:
        raise KeyError(f"unknown preset {name!r}; choose from {', '.join(table)}")
    return table[name]


def fig1_rows(preset: Preset):
    base = preset.runs[0]
    root = math.sqrt(base.delta)
    ref = fixed_point(base.beta * base.omega)[1]
    for x in FIG1_GRID:
        for y in FIG1_GRID:
            p = base.replace(Omega_L=float(x) * root, g=float(y) * root)
            yield float(x), float(y), a_tau(p), ref


def rydberg_rows():
    two_pi = 2.0 * math.pi
    g = two_pi * 50e3
    delta = two_pi * 1e6
    omega_l = g / 30.0
    n0 = 10
    g_n0 = omega_l * g / delta * math.sqrt(n0 + 1)
    tau_swap = math.pi / (2.0 * g_n0)
    tau = 1e-3
    laser = two_pi * 50e9
    rows = [
        ("g", g, "rad/s"),
        ("delta", delta, "rad/s"),
        ("Omega_L", omega_l, "rad/s"),
        ("N0", n0, "photons"),
        ("G_N0", g_n0, "rad/s"),
        ("tau_full_swap", tau_swap, "s"),
        ("tau_nominal", tau, "s"),
        ("omega_L", laser, "rad/s"),
        ("omega_L_tau", laser * tau, "rad"),
        ("Omega_L_tau", omega_l * tau, "rad"),
        ("g_tau", g * tau, "rad"),
        ("ratio_laser_vs_Omega_L_switching", laser * tau, "1"),
        ("ratio_laser_vs_g_switching", omega_l * laser * tau / g, "1"),
        ("decoherence_time_over_tau", 1.0 / tau, "1"),
    ]
    return rows


def _diagnostic_rows(diag: Diagnostics, prefix=()):
    for row in diag.rows():
        yield tuple(prefix) + row


def _cavity_initial(preset: Preset, p: ModelParams):
    n_max = preset.n_max
    if preset.name == "fig2":
        return uniform_state(0, 50, n_max)
    p_g, p_e = p.qubit_thermal()
    if preset.name == "fig3-left":
        return sector_state(p_e, p_g, FIG34_SECTOR, n_max)
    if preset.name == "fig3-right":
        return sector_state(p_g, p_e, FIG34_SECTOR, n_max)
    return thermal_state(5.0, n_max)


def compute_preset(preset: Preset):
    """Return (columns, rows) for a preset without touching the filesystem."""
    if preset.name == "fig1":
        return ("Omega_L_over_sqrt_delta", "g_over_sqrt_delta", "A_tau", "qubit_reference"), list(fig1_rows(preset))
    if preset.name == "rydberg":
        return ("quantity", "value", "unit"), rydberg_rows()
    if preset.name == "fig2":
        p = preset.runs[0]
        run = run_cavity_charging(p, _cavity_initial(preset, p), preset.n_collisions, snapshot_at=preset.snapshots)
        return ("collision_index", "n", "p_n"), list(run.snapshot_rows())
    rows = []
    for p in preset.runs:
        run = run_cavity_charging(
            p, _cavity_initial(preset, p), preset.n_collisions, stride=FIG34_STRIDE, sector=FIG34_SECTOR
        )
        prefix = (p.g,) if preset.name.startswith("fig3") else ()
        rows.extend(_diagnostic_rows(run.diagnostics, prefix))
    cols = Diagnostics.columns
    if preset.name.startswith("fig3"):
        cols = ("g",) + cols
    return cols, rows


def _schedule_text(preset: Preset) -> str:
    if preset.snapshots:
        return ",".join(str(i) for i in preset.snapshots)
    return f"every {FIG34_STRIDE} collisions" if preset.n_collisions else "n/a"


def _meta_text(preset: Preset) -> str:
    lines = [
        f"preset = {preset.name}",
        f"description = {preset.description}",
        f"schema = {preset.schema}",
        f"initial = {preset.initial}",
        f"n_collisions = {preset.n_collisions}",
        f"snapshots = {_schedule_text(preset)}",
        f"n_max = {preset.n_max or 'auto'}",
    ]
    for i, p in enumerate(preset.runs):
        for f in dataclasses.fields(p):
            lines.append(f"run{i}.{f.name} = {fmt(getattr(p, f.name))}")
        lines.append(f"run{i}.epsilon = {fmt(p.epsilon)}")
    if preset.name == "fig1":
        lines.append("grid = " + ",".join(fmt(x) for x in FIG1_GRID))
    for note in preset.notes:
        lines.append(f"note = {note}")
    return "\n".join(lines) + "\n"


_PLOTS = {
    "fig1": """
        import csv, sys
        import numpy as np
        import matplotlib.pyplot as plt
        rows = list(csv.DictReader(open(sys.argv[1] if len(sys.argv) > 1 else "data.csv")))
        x = np.array([float(r["Omega_L_over_sqrt_delta"]) for r in rows])
        y = np.array([float(r["g_over_sqrt_delta"]) for r in rows])
        a = np.array([float(r["A_tau"]) for r in rows])
        n = int(round(len(x) ** 0.5))
        ax = plt.figure().add_subplot(projection="3d")
        ax.plot_surface(x.reshape(n, n), y.reshape(n, n), a.reshape(n, n), alpha=0.8)
        ax.plot_surface(x.reshape(n, n), y.reshape(n, n), np.full((n, n), float(rows[0]["qubit_reference"])), alpha=0.3)
        ax.set_xlabel("Omega_L/sqrt(delta)"); ax.set_ylabel("g/sqrt(delta)"); ax.set_zlabel("A_tau")
        plt.savefig("fig1.pdf")
    """,
    "fig2": """
        import csv, sys
        from collections import defaultdict
        import matplotlib.pyplot as plt
        series = defaultdict(list)
        for r in csv.DictReader(open(sys.argv[1] if len(sys.argv) > 1 else "data.csv")):
            series[int(r["collision_index"])].append((int(r["n"]), float(r["p_n"])))
        for i, pts in sorted(series.items()):
            plt.semilogy([n for n, _ in pts], [max(p, 1e-300) for _, p in pts], label=f"i={i}")
        plt.xlabel("n"); plt.ylabel("p_n"); plt.ylim(1e-12, 1); plt.legend()
        plt.savefig("fig2.pdf")
    """,
    "diagnostics": """
        import csv, sys
        from collections import defaultdict
        import matplotlib.pyplot as plt
        rows = list(csv.DictReader(open(sys.argv[1] if len(sys.argv) > 1 else "data.csv")))
        runs = defaultdict(list)
        for r in rows:
            runs[r.get("g", "")].append(r)
        fig, axes = plt.subplots(1, len(runs), squeeze=False)
        for ax, (label, rs) in zip(axes[0], sorted(runs.items())):
            i = [int(r["collision_index"]) for r in rs]
            for key in ("p_N0", "p_N0p1", "p_up", "p_down"):
                ax.plot(i, [float(r[key]) for r in rs], label=key)
            ax.set_title(f"g={label}" if label else "")
            ax.set_xlabel("collision")
            ax.legend()
        plt.savefig("diagnostics.pdf")
    """,
    "rydberg": """
        import csv, sys
        for r in csv.DictReader(open(sys.argv[1] if len(sys.argv) > 1 else "data.csv")):
            print(f"{r['quantity']:>36s}  {float(r['value']):.4g} {r['unit']}")
    """,
}


def _plot_script(preset: Preset) -> str:
    key = preset.name if preset.name in _PLOTS else "diagnostics"
    return "# generated plot script; run from the preset directory\n" + textwrap.dedent(_PLOTS[key]).lstrip()


def run_preset(name: str, out_root, *, literal_epsilon: bool = False) -> list[Path]:
    """Compute a preset and write data.csv, meta.txt and plot.py under out_root/name."""
    preset = get_preset(name, literal_epsilon)
    cols, rows = compute_preset(preset)
    out = Path(out_root) / preset.name
    out.mkdir(parents=True, exist_ok=True)
    paths = [write_csv(out / "data.csv", cols, rows)]
    meta = out / "meta.txt"
    meta.write_text(_meta_text(preset), encoding="utf-8")
    plot = out / "plot.py"
    plot.write_text(_plot_script(preset), encoding="utf-8")
    return paths + [meta, plot]
