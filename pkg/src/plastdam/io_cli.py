"""Run configuration, serialization (CSV, VTK, manifest), and the CLI.

Configuration text is a flat ``key = value`` format with ``#`` comments.
Values accept unit suffixes (GPa, MPa, kPa, Pa, mm, m). The emitter and
parser round-trip exactly: ``parse_config(emit_config(c)) == c``.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, fields as dataclass_fields, replace
from pathlib import Path

import numpy as np

from plastdam.fields import LoadProgram, State
from plastdam.material import MaterialParams, lame_from_young_poisson, stress
from plastdam.mesh import Mesh, build_crossed_mesh, tag_boundaries

__all__ = [
    "RunConfig",
    "parse_config",
    "emit_config",
    "write_timeseries_csv",
    "write_vtk_snapshot",
    "write_manifest",
    "main",
]

CSV_HEADER = "t,avg_von_mises,energy,diss_plast_cum,diss_dam_cum,amdp_step,amdp_cum"

_UNIT_FACTORS = {
    "GPa": 1e9,
    "MPa": 1e6,
    "kPa": 1e3,
    "Pa": 1.0,
    "mm": 1e-3,
    "m": 1.0,
}


@dataclass(frozen=True)
class RunConfig:
    """Complete description of one evolution run.

    Defaults reproduce the reference tension experiment: concrete-like
    elastic data (E = 27 GPa, nu = 0.2), damaged moduli 1e7 times smaller,
    yield stress 2 MPa, hardening E/20, damage activation 1.2 kPa, healing
    threshold 1e6 times the activation, kappa2 = 1e-3 J/m, a 1 mm/unit-time
    horizontal ramp over t in [0, 80] on a 24x24 crossed mesh.
    """

    young: float = 27e9
    poisson: float = 0.2
    damage_scale: float = 1e7
    sigma_y: float = 2e6
    hardening: float = 1.35e9
    a: float = 1.2e3
    b: float = 1.2e9
    kappa2: float = 1e-3
    t_end: float = 80.0
    tau: float = 1.0
    ramp_rate: float = 1e-3
    variant: str = "asymmetric"
    n_sub: int = 24
    body_force_x: float = 0.0
    body_force_y: float = 0.0
    plastic_tol: float = 1e-10
    qp_tol: float = 1e-9
    snapshot_every: int = 0
    out: str = "out"

    def material_params(self) -> MaterialParams:
        lam1, mu1 = lame_from_young_poisson(self.young, self.poisson)
        lam0, mu0 = lame_from_young_poisson(self.young / self.damage_scale,
                                            self.poisson)
        return MaterialParams(lambda1=lam1, mu1=mu1, lambda0=lam0, mu0=mu0,
                              hardening_h=self.hardening,
                              sigma_y=self.sigma_y, a=self.a, b=self.b,
                              kappa2=self.kappa2)

    def load_program(self) -> LoadProgram:
        return LoadProgram(t_end=self.t_end, tau=self.tau,
                           ramp_rate=self.ramp_rate, variant=self.variant,
                           body_force=(self.body_force_x, self.body_force_y))

    def validate(self) -> "RunConfig":
        """Construct the derived objects, raising on inconsistent values."""
        self.material_params()
        self.load_program()
        if self.n_sub < 1:
            raise ValueError(f"n_sub must be positive, got {self.n_sub}")
        if self.snapshot_every < 0:
            raise ValueError("snapshot_every must be >= 0")
        return self


_INT_KEYS = {"n_sub", "snapshot_every"}
_STR_KEYS = {"variant", "out"}
_FLOAT_KEYS = {f.name for f in dataclass_fields(RunConfig)} - _INT_KEYS - _STR_KEYS
# Keys whose defaults are derived from other keys when not given explicitly.
_DERIVED = ("hardening", "b")


def _parse_scalar(key: str, raw: str):
    """Parse one configuration value, honoring unit suffixes."""
    text = raw.strip()
    if key in _STR_KEYS:
        return text
    parts = text.split()
    factor = 1.0
    if len(parts) == 2 and parts[1] in _UNIT_FACTORS:
        factor = _UNIT_FACTORS[parts[1]]
        text = parts[0]
    elif len(parts) != 1:
        raise ValueError(f"cannot parse value {raw!r} for key {key!r}")
    try:
        value = float(text) * factor
    except ValueError as exc:
        raise ValueError(f"cannot parse value {raw!r} for key {key!r}") from exc
    if key in _INT_KEYS:
        if value != int(value):
            raise ValueError(f"key {key!r} expects an integer, got {raw!r}")
        return int(value)
    return value


def parse_config(source: str | dict | None = None) -> RunConfig:
    """Build a validated RunConfig from text or a mapping.

    Text format: one ``key = value`` per line, ``#`` comments, blank lines
    ignored. Unknown keys are rejected. The defaults ``hardening =
    young/20`` and ``b = 1e6 * a`` track explicitly set values of their
    base keys; all other defaults are the reference experiment.
    """
    entries: dict[str, object] = {}
    if source is None:
        pass
    elif isinstance(source, dict):
        for key, value in source.items():
            entries[key] = _parse_scalar(key, value) \
                if isinstance(value, str) else value
    elif isinstance(source, str):
        for lineno, line in enumerate(source.splitlines(), start=1):
            stripped = line.split("#", 1)[0].strip()
            if not stripped:
                continue
            if "=" not in stripped:
                raise ValueError(f"line {lineno}: expected 'key = value', "
                                 f"got {line!r}")
            key, raw = stripped.split("=", 1)
            key = key.strip()
            entries[key] = _parse_scalar(key, raw)
    else:
        raise TypeError(f"unsupported config source type {type(source)!r}")

    valid = {f.name for f in dataclass_fields(RunConfig)}
    unknown = sorted(set(entries) - valid)
    if unknown:
        raise ValueError(f"unknown configuration keys: {', '.join(unknown)}")

    # Derived defaults follow their base keys unless explicitly set.
    if "hardening" not in entries and "young" in entries:
        entries["hardening"] = float(entries["young"]) / 20.0
    if "b" not in entries and "a" in entries:
        entries["b"] = 1e6 * float(entries["a"])

    for key in _INT_KEYS:
        if key in entries:
            entries[key] = int(entries[key])
    for key in _FLOAT_KEYS:
        if key in entries:
            entries[key] = float(entries[key])

    return RunConfig(**entries).validate()


def emit_config(config: RunConfig) -> str:
    """Serialize a RunConfig as parseable text (exact float round-trip)."""
    lines = ["# plastdam run configuration"]
    for f in dataclass_fields(RunConfig):
        value = getattr(config, f.name)
        if f.name in _STR_KEYS:
            lines.append(f"{f.name} = {value}")
        elif f.name in _INT_KEYS:
            lines.append(f"{f.name} = {int(value)}")
        else:
            lines.append(f"{f.name} = {float(value)!r}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Writers
# ---------------------------------------------------------------------------

def write_timeseries_csv(series, path) -> None:
    """Write the recorded series as CSV (header + one row per step).

    Floats are written with ``repr`` (shortest round-trip), so identical
    runs produce byte-identical files.
    """
    lines = [CSV_HEADER]
    for i in range(series.n_steps):
        lines.append(",".join(repr(float(v)) for v in (
            series.t[i], series.avg_von_mises[i], series.energy[i],
            series.diss_plast_cum[i], series.diss_dam_cum[i],
            series.amdp_step[i], series.amdp_cum[i])))
    Path(path).write_text("\n".join(lines) + "\n")


def write_manifest(config: RunConfig, path) -> None:
    """Write the exact configuration of a run next to its outputs."""
    Path(path).write_text(emit_config(config))


def _vtk_scalars(name: str, values: np.ndarray) -> list[str]:
    lines = [f"SCALARS {name} double 1", "LOOKUP_TABLE default"]
    lines.extend(repr(float(v)) for v in values)
    return lines


def write_vtk_snapshot(path, mesh: Mesh, state: State,
                       params: MaterialParams,
                       residuum_field: np.ndarray | None = None) -> None:
    """Write one legacy-ASCII VTK unstructured-grid snapshot.

    Point data: damage, displacement. Cell data: plastic-strain norm,
    deviatoric elastic-stress norm, and (when given) the signed
    maximum-dissipation residuum density with its log-magnitude companion.
    """
    from plastdam.fields import element_zeta_mean
    from plastdam.material import dev2
    from plastdam.mesh import p1_strain

    n_pts = mesh.n_nodes
    n_cel = mesh.n_elements
    lines = [
        "# vtk DataFile Version 3.0",
        "plastdam snapshot",
        "ASCII",
        "DATASET UNSTRUCTURED_GRID",
        f"POINTS {n_pts} double",
    ]
    for x, y in mesh.nodes:
        lines.append(f"{x!r} {y!r} 0.0")
    lines.append(f"CELLS {n_cel} {4 * n_cel}")
    for tri in mesh.elements:
        lines.append(f"3 {tri[0]} {tri[1]} {tri[2]}")
    lines.append(f"CELL_TYPES {n_cel}")
    lines.extend(["5"] * n_cel)

    lines.append(f"POINT_DATA {n_pts}")
    lines.extend(_vtk_scalars("damage", state.zeta))
    lines.append("VECTORS displacement double")
    for ux, uy in state.u:
        lines.append(f"{ux!r} {uy!r} 0.0")

    e = p1_strain(mesh, state.u)
    zbar = element_zeta_mean(mesh, state.zeta)
    sig = stress(e - state.pi, zbar, params)
    dev = dev2(sig)
    pi_norm = np.sqrt(np.sum(state.pi * state.pi, axis=(1, 2)))
    dev_norm = np.sqrt(np.sum(dev * dev, axis=(1, 2)))

    lines.append(f"CELL_DATA {n_cel}")
    lines.extend(_vtk_scalars("plastic_strain_norm", pi_norm))
    lines.extend(_vtk_scalars("dev_stress_norm", dev_norm))
    if residuum_field is not None:
        lines.extend(_vtk_scalars("amdp_residuum", residuum_field))
        log_mag = np.log10(np.abs(residuum_field) + 1e-300)
        lines.extend(_vtk_scalars("amdp_residuum_log", log_mag))
    Path(path).write_text("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# CLI
# ---------------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="plastdam",
        description="Elasto-plasticity coupled to gradient damage on the "
                    "unit square")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run an evolution and write outputs")
    run_p.add_argument("--preset", choices=["asymmetric", "symmetric"],
                       help="loading geometry preset")
    run_p.add_argument("--config", type=Path, help="configuration file")
    run_p.add_argument("--tau", type=float, help="time step")
    run_p.add_argument("--n-sub", type=int, dest="n_sub",
                       help="mesh subdivisions per side")
    run_p.add_argument("--t-end", type=float, dest="t_end",
                       help="final process time")
    run_p.add_argument("--out", type=str, help="output directory")
    run_p.add_argument("--snapshot-every", type=int, dest="snapshot_every",
                       help="write a VTK snapshot every K steps")

    check_p = sub.add_parser("check", help="run built-in self checks")
    check_p.add_argument("--fast", action="store_true",
                         help="skip the miniature evolution check")

    mesh_p = sub.add_parser("mesh-info", help="print mesh statistics")
    mesh_p.add_argument("--n-sub", type=int, dest="n_sub", default=24)
    mesh_p.add_argument("--variant", choices=["asymmetric", "symmetric"],
                        default="asymmetric")
    return parser


def _cmd_run(args) -> int:
    from plastdam.evolution import EvolutionError, run

    try:
        config = parse_config(args.config.read_text()) if args.config \
            else RunConfig()
        overrides = {}
        if args.preset:
            overrides["variant"] = args.preset
        for key in ("tau", "n_sub", "t_end", "out", "snapshot_every"):
            value = getattr(args, key)
            if value is not None:
                overrides[key] = value
        if overrides:
            config = replace(config, **overrides).validate()
    except (ValueError, OSError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2

    out_dir = Path(config.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_manifest(config, out_dir / "manifest.txt")

    result = None
    try:
        result = run(config)
    except EvolutionError as exc:
        write_timeseries_csv(exc.partial_series, out_dir / "timeseries.csv")
        print(f"run aborted: {exc}", file=sys.stderr)
        print(f"partial series written to {out_dir / 'timeseries.csv'}",
              file=sys.stderr)
        return 1

    series = result.series
    write_timeseries_csv(series, out_dir / "timeseries.csv")
    for k, state, residuum in result.snapshots:
        write_vtk_snapshot(out_dir / f"snapshot_{k:05d}.vtk", result.mesh,
                           state, result.params, residuum)

    final = series.n_steps - 1
    ratio = (series.amdp_cum[final]
             / max(series.diss_plast_cum[final] + series.diss_dam_cum[final],
                   1e-300)) if series.n_steps else float("nan")
    print(f"completed {series.n_steps} steps "
          f"({config.variant}, n_sub={config.n_sub}, tau={config.tau})")
    if series.n_steps:
        print(f"final energy            {series.energy[final]:.6e} J")
        print(f"cumulative dissipation  "
              f"{series.diss_plast_cum[final] + series.diss_dam_cum[final]:.6e} J")
        print(f"residuum/dissipation    {ratio:.3e}")
        print(f"max avg von Mises       {series.avg_von_mises.max():.6e} N "
              f"at t = {series.t[np.argmax(series.avg_von_mises)]:g}")
    print(f"outputs in {out_dir}")
    return 0


def _cmd_check(args) -> int:
    from plastdam.material import return_map
    from plastdam.qp_solver import BoxQp, solve_box_qp

    failures = 0

    def report(name: str, ok: bool, detail: str = "") -> None:
        nonlocal failures
        state = "PASS" if ok else "FAIL"
        suffix = f"  ({detail})" if detail and not ok else ""
        print(f"{state}  {name}{suffix}")
        failures += 0 if ok else 1

    mesh = build_crossed_mesh(24)
    report("mesh counts (n_sub=24)",
           mesh.n_elements == 2304 and mesh.n_nodes == 1201)
    report("mesh area partition",
           abs(float(mesh.element_area.sum()) - 1.0) <= 1e-12)

    lam, mu = lame_from_young_poisson(27e9, 0.2)
    report("elastic moduli conversion", lam == 7.5e9 and mu == 11.25e9)

    config = RunConfig()
    params = config.material_params()
    rng = np.random.default_rng(2408)
    ok = True
    for _ in range(200):
        x, y = rng.normal(scale=10 ** rng.uniform(-6, -2), size=2)
        e = np.array([[x, y], [y, rng.normal(scale=abs(x) + 1e-9)]])
        e = 0.5 * (e + e.T)
        a_, b_ = rng.normal(scale=1e-4, size=2)
        pi_prev = np.array([[a_, b_], [b_, -a_]])
        zeta = rng.uniform(0.0, 1.0)
        pi_new, _ = return_map(e, pi_prev, zeta, params)
        mu_z = params.mu0 + zeta * (params.mu1 - params.mu0)
        s = 2.0 * mu_z * (e - 0.5 * np.trace(e) * np.eye(2) - pi_new) \
            - params.hardening_h * pi_new
        if np.linalg.norm(s) > params.sigma_y * (1.0 + 1e-8):
            ok = False
            break
    report("return-map consistency (200 samples)", ok)

    qp = BoxQp(hessian=np.zeros((2, 2)), linear=np.array([1.0, -1.0]),
               lower=np.zeros(2), upper=np.ones(2))
    sol = solve_box_qp(qp, x0=np.array([0.5, 0.5]))
    report("box-QP linear program corner",
           np.allclose(sol.x, [0.0, 1.0], atol=1e-12))

    if not args.fast:
        from plastdam.evolution import run

        small = replace(config, n_sub=6, t_end=5.0, tau=1.0).validate()
        result = run(small)
        series = result.series
        decrease_ok = True
        for i, rep in enumerate(series.reports):
            lhs = rep.energy_final + rep.dissipated_plastic
            if lhs > rep.energy_start + 1e-8 * max(1.0, abs(rep.energy_start)):
                decrease_ok = False
        report("miniature run: per-step energy decrease", decrease_ok)
        report("miniature run: residuum nonnegative",
               bool(np.all(series.amdp_step >= -1e-8)))

    print(f"{failures} failure(s)")
    return 1 if failures else 0


def _cmd_mesh_info(args) -> int:
    mesh = build_crossed_mesh(args.n_sub)
    try:
        tags = tag_boundaries(mesh, args.variant)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"n_sub                {mesh.n_sub}")
    print(f"elements             {mesh.n_elements}")
    print(f"nodes                {mesh.n_nodes}")
    print(f"total area           {float(mesh.element_area.sum())!r}")
    print(f"variant              {tags.variant}")
    print(f"dirichlet_xy nodes   {len(tags.dirichlet_xy)}")
    print(f"dirichlet_x nodes    {len(tags.dirichlet_x)}")
    print(f"free boundary nodes  {len(tags.free)}")
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "run":
        return _cmd_run(args)
    if args.command == "check":
        return _cmd_check(args)
    return _cmd_mesh_info(args)


if __name__ == "__main__":
    sys.exit(main())
