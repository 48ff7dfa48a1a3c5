"""Batch front end: `semwave <subcommand> --config file.json --out dir`.

Subcommands: mms, solve, project, fv-source, curle, mesh-gen.  Every run
writes a manifest (config echo plus SHA-256 of each output file).  All
physical constants must be explicit in the config; there are no hidden
defaults for rho0, c0 or Z.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
import time as _time
from pathlib import Path

import numpy as np

from . import manufactured
from .assembly import assemble_operators, neumann_load, point_source_load, volume_load
from .curle import ForceHistory, curle_pressure, psd
from .fvsource import FvField, generate_box_fv, lighthill_divergence, load_fv, sample_velocity, save_fv, spanwise_average
from .mesh import HexMesh, generate_box_mesh
from .newmark import NewmarkConfig, run, write_probe_csv
from .projection import aeroacoustic_load, build_projection
from .space import SpectralField, build_space, interpolate, l2_error

CONFIG_VERSION = "1"


class ConfigError(Exception):
    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


def _require(cfg: dict, keys, problems, where="config"):
    for key in keys:
        if key not in cfg:
            problems.append(f"{where}: missing required key {key!r}")


def load_config(path) -> dict:
    with open(path) as fh:
        cfg = json.load(fh)
    if cfg.get("version") != CONFIG_VERSION:
        raise ConfigError([f"unsupported config version {cfg.get('version')!r}"])
    return cfg


def _mesh_from_config(spec: dict, problems) -> HexMesh | None:
    if "file" in spec:
        path = Path(spec["file"])
        if not path.exists():
            problems.append(f"mesh file {path} does not exist")
            return None
        return HexMesh.load(path)
    gen = spec.get("generator")
    if gen is None:
        problems.append("mesh: need either 'file' or 'generator'")
        return None
    missing = [k for k in ("box", "div") if k not in gen]
    if missing:
        problems.append(f"mesh.generator: missing {missing}")
        return None
    return generate_box_mesh(gen["box"], gen["div"], gen.get("tags"))


def _newmark_from_config(cfg: dict, problems) -> NewmarkConfig | None:
    tc = cfg.get("time", {})
    _require(tc, ("dt", "t_final"), problems, "time")
    if problems:
        return None
    return NewmarkConfig(
        dt=float(tc["dt"]),
        t_final=float(tc["t_final"]),
        beta=float(tc.get("beta", 0.25)),
        gamma=float(tc.get("gamma", 0.5)),
        cg_tol=float(tc.get("cg_tol", 1e-10)),
        cg_maxiter=int(tc.get("cg_maxiter", 1000)),
        snapshot_stride=int(cfg.get("snapshot_stride", 0)),
        probes={k: tuple(v) for k, v in cfg.get("probes", {}).items()},
    )


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(out_dir: Path, cfg: dict, outputs: list[Path], seed=None):
    manifest = {
        "config": cfg,
        "seed": seed,
        "outputs": {p.name: _sha256(p) for p in outputs},
    }
    path = out_dir / "manifest.json"
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
    return path


# -- mms ------------------------------------------------------------------

BOX_NORMALS = {
    "xmin": (-1, 0, 0), "xmax": (1, 0, 0),
    "ymin": (0, -1, 0), "ymax": (0, 1, 0),
    "zmin": (0, 0, -1), "zmax": (0, 0, 1),
}


def mms_single(divisions: int, degree: int, cfg: NewmarkConfig, points: int | None = None) -> tuple[float, int]:
    """One manufactured-solution run on the unit cube with c0 = 1.

    Returns (E2 error at the final time, ndof)."""
    mesh = generate_box_mesh([(0, 1), (0, 1), (0, 1)], (divisions,) * 3)
    space = build_space(mesh, degree)
    ops = assemble_operators(space, c0=1.0, rho0=1.0)
    neumann_fns = {tag: manufactured.neumann(n) for tag, n in BOX_NORMALS.items()}

    def loads(k):
        t = k * cfg.dt
        out = volume_load(space, manufactured.forcing, t, mass=ops.mass)
        for tag, g in neumann_fns.items():
            out += neumann_load(space, tag, g, t, c0=1.0)
        return out

    rho0 = np.zeros(space.ndof)
    # the manufactured solution starts at u=0 but with nonzero velocity
    v0 = interpolate(space, lambda x, y, z: np.pi * manufactured.spatial(x, y, z)).coeffs
    result = run(space, ops, loads, cfg, initial=(rho0, v0))
    t_final = result.times[-1]
    err = l2_error(
        space,
        SpectralField(space, result.final.rho),
        lambda x, y, z: manufactured.exact(x, y, z, t_final),
        points=points,
    )
    return err, space.ndof


def run_mms(cfg: dict, out_dir: Path) -> Path:
    problems = []
    _require(cfg, ("degrees", "divisions", "time"), problems)
    nm = _newmark_from_config(cfg, problems)
    if problems:
        raise ConfigError(problems)

    rows = []
    for r in cfg["degrees"]:
        prev_err = None
        for n in cfg["divisions"]:
            t0 = _time.perf_counter()
            err, ndof = mms_single(int(n), int(r), nm)
            elapsed = _time.perf_counter() - t0
            h = 1.0 / n
            order = np.nan if prev_err is None else float(np.log2(prev_err / err))
            rows.append((int(r), h, ndof, err, order, elapsed))
            prev_err = err
    report = out_dir / "mms_report.csv"
    with open(report, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["degree", "h", "ndof", "E2", "observed_order", "runtime_s"])
        for row in rows:
            w.writerow([row[0], f"{row[1]:.12g}", row[2], f"{row[3]:.12g}", f"{row[4]:.6g}", f"{row[5]:.3f}"])
    return report


# -- solve ----------------------------------------------------------------


def _build_loads(cfg: dict, space, ops, nm: NewmarkConfig, problems):
    src = cfg.get("source", {"type": "none"})
    kind = src.get("type", "none")
    if kind == "none":
        zero = np.zeros(space.ndof)
        return lambda k: zero
    if kind == "monopole":
        missing = [k for k in ("position", "frequency") if k not in src]
        if missing:
            problems.append(f"source(monopole): missing {missing}")
            return None
        unit = point_source_load(space, src["position"], 1.0)
        f0 = float(src["frequency"])
        return lambda k: unit * np.sin(2.0 * np.pi * f0 * k * nm.dt)
    if kind == "projected":
        files = src.get("files")
        if not files:
            problems.append("source(projected): missing 'files' list of load vectors")
            return None
        vecs = [np.load(f) for f in files]
        stride = int(src.get("stride", 1))
        # donor loads held piecewise constant between mappings
        return lambda k: vecs[min(k // stride, len(vecs) - 1)]
    problems.append(f"source: unknown type {kind!r}")
    return None


def _initial_from_config(cfg: dict, space, c0: float):
    init = cfg.get("initial")
    if init is None:
        return None
    if init.get("type") != "gaussian_plane":
        raise ConfigError([f"initial: unknown type {init.get('type')!r}"])
    axis = int(init["axis"])
    center = float(init["center"])
    sigma = float(init["sigma"])
    direction = float(init.get("direction", 1.0))

    def pulse(x, y, z):
        s = (x, y, z)[axis]
        return np.exp(-(((s - center) / sigma) ** 2))

    def pulse_v(x, y, z):
        s = (x, y, z)[axis]
        return direction * c0 * 2.0 * (s - center) / sigma**2 * np.exp(-(((s - center) / sigma) ** 2))

    # rho = g(s - c t): d/dt = -c g' for a wave moving toward +axis
    rho = interpolate(space, pulse).coeffs
    vel = interpolate(space, pulse_v).coeffs
    return rho, vel


def run_solve(cfg: dict, out_dir: Path, run_name: str = "solve"):
    problems = []
    _require(cfg, ("rho0", "c0", "mesh", "degree", "time"), problems)
    nm = _newmark_from_config(cfg, problems)
    mesh = _mesh_from_config(cfg.get("mesh", {}), problems) if "mesh" in cfg else None
    if problems:
        raise ConfigError(problems)

    impedance = {tag: float(z) for tag, z in cfg.get("impedance", {}).items()}
    unknown = set(impedance) - mesh.tags
    if unknown:
        raise ConfigError([f"impedance tags {sorted(unknown)} not present in mesh (has {sorted(mesh.tags)})"])

    space = build_space(mesh, int(cfg["degree"]))
    ops = assemble_operators(space, c0=float(cfg["c0"]), rho0=float(cfg["rho0"]), impedance=impedance)
    loads = _build_loads(cfg, space, ops, nm, problems)
    if problems:
        raise ConfigError(problems)
    initial = _initial_from_config(cfg, space, ops.c0)

    result = run(space, ops, loads, nm, initial=initial, out_dir=out_dir, run_name=run_name)
    outputs = [Path(p) for p in result.snapshot_files]
    probe_path = out_dir / f"{run_name}_probes.csv"
    write_probe_csv(result, probe_path)
    outputs.append(probe_path)
    return result, outputs


# -- fv-source ------------------------------------------------------------

SYNTHETIC_FIELDS = {
    # u = (x, -y, 0): divergence of u x u is exactly (x, y, 0)
    "shear_xy": lambda x, y, z: (x, -y, np.zeros_like(z)),
    "uniform_x": lambda x, y, z: (np.ones_like(x), np.zeros_like(y), np.zeros_like(z)),
}


def run_fv_source(cfg: dict, out_dir: Path) -> Path:
    problems = []
    _require(cfg, ("rho0",), problems)
    rho0 = float(cfg.get("rho0", 0.0))
    if "fv_file" in cfg:
        mesh, fields = load_fv(cfg["fv_file"])
        fields = [f for f in fields if f.values.ndim == 2]
        if not fields:
            problems.append("fv_file contains no vector velocity fields")
    elif "synthetic" in cfg:
        syn = cfg["synthetic"]
        _require(syn, ("box", "div", "field"), problems, "synthetic")
        if syn.get("field") not in SYNTHETIC_FIELDS:
            problems.append(f"synthetic.field must be one of {sorted(SYNTHETIC_FIELDS)}")
        if not problems:
            mesh = generate_box_fv(syn["box"], syn["div"])
            times = syn.get("times", [0.0])
            fields = [sample_velocity(mesh, SYNTHETIC_FIELDS[syn["field"]], time=t) for t in times]
    else:
        problems.append("need 'fv_file' or 'synthetic' donor specification")
    if problems:
        raise ConfigError(problems)

    sources = [lighthill_divergence(mesh, f, rho0) for f in fields]
    axis = cfg.get("spanwise_axis")
    if axis is not None:
        averaged = [spanwise_average(s, int(axis)) for s in sources]
        mesh_out, sources = averaged[0].mesh, averaged
    else:
        mesh_out = mesh
    out_path = out_dir / "fv_source.json"
    save_fv(out_path, mesh_out, sources)
    return out_path


# -- project --------------------------------------------------------------


def run_project(cfg: dict, out_dir: Path):
    problems = []
    _require(cfg, ("fv_file", "mesh", "degree"), problems)
    mesh = _mesh_from_config(cfg.get("mesh", {}), problems) if "mesh" in cfg else None
    if problems:
        raise ConfigError(problems)
    fvmesh, fields = load_fv(cfg["fv_file"])
    space = build_space(mesh, int(cfg["degree"]))
    proj = build_projection(space, fvmesh, points_per_axis=int(cfg.get("points_per_axis", 3)))
    from .assembly import assemble_convective

    conv = assemble_convective(space)
    outputs = []
    report = proj.conservation_report(fvmesh)
    if fields:
        first = fields[0].values
        audit = proj.conservation_report(fvmesh, first[:, 0] if first.ndim == 2 else first)
        report["transferred_mass_fv"] = audit["transferred_mass_fv"]
        report["transferred_mass_acoustic"] = audit["transferred_mass_acoustic"]
    for idx, f in enumerate(fields):
        if f.values.ndim == 2:
            comps = [proj.project(f.values[:, d]).coeffs for d in range(3)]
            load = aeroacoustic_load(conv, *comps)
            out = out_dir / f"load_{idx:04d}.npy"
            np.save(out, load)
            outputs.append(out)
            for d, comp in enumerate(comps):
                cpath = out_dir / f"projected_{idx:04d}_{'xyz'[d]}.npy"
                np.save(cpath, comp)
                outputs.append(cpath)
        else:
            out = out_dir / f"projected_{idx:04d}.npy"
            np.save(out, proj.project(f.values).coeffs)
            outputs.append(out)
    rep_path = out_dir / "conservation_report.json"
    with open(rep_path, "w") as fh:
        json.dump(report, fh, indent=2)
    outputs.append(rep_path)
    return report, outputs


# -- curle ----------------------------------------------------------------


def run_curle(cfg: dict, out_dir: Path):
    problems = []
    _require(cfg, ("forces", "observers", "c0"), problems)
    if problems:
        raise ConfigError(problems)
    c0 = float(cfg["c0"])
    histories = []
    for spec in cfg["forces"]:
        path = Path(spec["file"])
        if not path.exists():
            raise ConfigError([f"force file {path} does not exist"])
        rows = np.loadtxt(path, delimiter=",", skiprows=1)
        histories.append(ForceHistory(rows[:, 0], rows[:, 1:4], np.asarray(spec.get("body_point", [0, 0, 0]), dtype=float)))

    outputs = []
    for name, pos in cfg["observers"].items():
        # multiple (force, body point) pairs: contributions sum linearly
        total = None
        for hist in histories:
            rec = curle_pressure(hist, pos, c0)
            total = rec.pressure if total is None else total + rec.pressure
        times = histories[0].times
        ppath = out_dir / f"curle_{name}.csv"
        with open(ppath, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["time", "pressure"])
            for t, p in zip(times, total):
                w.writerow([f"{t:.12g}", f"{p:.12g}"])
        outputs.append(ppath)
        seg = int(cfg.get("psd_segment", min(256, len(times))))
        freq, pxx = psd(total, float(times[1] - times[0]), seg)
        spath = out_dir / f"curle_{name}_psd.csv"
        with open(spath, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["frequency", "psd"])
            for f, p in zip(freq, pxx):
                w.writerow([f"{f:.12g}", f"{p:.12g}"])
        outputs.append(spath)
    return outputs


# -- entry point ----------------------------------------------------------


def _parse_tags(items):
    tags = {}
    for item in items or []:
        side, _, name = item.partition("=")
        tags[side] = name or side
    return tags


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="semwave", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("mms", "solve", "project", "fv-source", "curle"):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True)
        p.add_argument("--out", required=True)
        p.add_argument("--seed", type=int, default=0)
    p = sub.add_parser("mesh-gen")
    p.add_argument("--box", required=True, help="x0,x1,y0,y1,z0,z1")
    p.add_argument("--div", required=True, help="nx,ny,nz")
    p.add_argument("--tag", action="append", help="side=name, side in xmin..zmax")
    p.add_argument("--out", required=True)
    args = parser.parse_args(argv)

    try:
        if args.command == "mesh-gen":
            b = [float(v) for v in args.box.split(",")]
            div = [int(v) for v in args.div.split(",")]
            mesh = generate_box_mesh([b[0:2], b[2:4], b[4:6]], div, _parse_tags(args.tag))
            out = Path(args.out)
            out.parent.mkdir(parents=True, exist_ok=True)
            mesh.save(out)
            return 0

        cfg = load_config(args.config)
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        np.random.seed(args.seed)
        if args.command == "mms":
            outputs = [run_mms(cfg, out_dir)]
        elif args.command == "solve":
            _, outputs = run_solve(cfg, out_dir)
        elif args.command == "fv-source":
            outputs = [run_fv_source(cfg, out_dir)]
        elif args.command == "project":
            _, outputs = run_project(cfg, out_dir)
        else:
            outputs = run_curle(cfg, out_dir)
        write_manifest(out_dir, cfg, [Path(p) for p in outputs], seed=args.seed)
        return 0
    except ConfigError as exc:
        json.dump({"error": "configuration", "problems": exc.problems}, sys.stderr)
        sys.stderr.write("\n")
        return 2
    except Exception as exc:  # solver/runtime failures
        json.dump({"error": type(exc).__name__, "message": str(exc)}, sys.stderr)
        sys.stderr.write("\n")
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
