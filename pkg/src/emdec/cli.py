"""Batch front-end: `emdec run <config>`, `emdec validate <mesh|config>`,
`emdec spectrum <csv>`.

Exit codes: 0 ok, 2 config/input error, 3 numeric failure, 4 I/O error.
The output directory comes from the config, overridable by --output-dir or
the EMDEC_OUTPUT_DIR environment variable.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import diagnostics as dg
from . import integrators as it
from . import io as eio
from . import maxwell as mx
from . import mesh as msh
from .config import Config, parse_config
from .dec import exterior_derivative
from .errors import ConfigError, EmdecError, MeshError, NumericError


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="emdec",
                                     description="DEC electromagnetic field solver")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a simulation from a config file")
    p_run.add_argument("config")
    p_run.add_argument("--output-dir", default=None)

    p_val = sub.add_parser("validate", help="check a mesh or config file")
    p_val.add_argument("path")

    p_spec = sub.add_parser("spectrum", help="periodogram of a probe/energy CSV")
    p_spec.add_argument("csv")
    p_spec.add_argument("--column", default=None)
    p_spec.add_argument("--output-dir", default=None)

    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            return cmd_run(args.config, args.output_dir)
        if args.command == "validate":
            return cmd_validate(args.path)
        return cmd_spectrum(args.csv, args.column, args.output_dir)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except MeshError as exc:
        print(f"mesh error: {exc}", file=sys.stderr)
        return 2
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 4
    except EmdecError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


# -- run -------------------------------------------------------------------------


def build_mesh(cfg: Config) -> msh.CellComplex:
    if cfg.mesh_kind == "rect":
        return msh.build_rect_grid(cfg.mesh_extents, cfg.mesh_counts)
    if cfg.mesh_kind == "rect_random":
        axes = msh.random_partition_axes(cfg.mesh_extents, cfg.mesh_counts,
                                         seed=cfg.mesh_seed)
        return msh.grid_from_axes(axes)
    with open(cfg.mesh_path) as fh:
        return msh.load_mesh(fh)


def cmd_run(config_path: str, output_override: str | None) -> int:
    with open(config_path) as fh:
        text = fh.read()
    cfg = parse_config(text, base_dir=os.path.dirname(os.path.abspath(config_path)))
    out_dir = (output_override or os.environ.get("EMDEC_OUTPUT_DIR")
               or cfg.output_dir)
    os.makedirs(out_dir, exist_ok=True)

    K = build_mesh(cfg)
    dual = msh.circumcentric_dual(K)
    mat = mx.MaterialParams(cfg.epsilon, cfg.mu)
    src = mx.make_source(K, dual, cfg.jx, cfg.jy, cfg.jz, cfg.rho) \
        if any(e is not None for e in (cfg.jx, cfg.jy, cfg.jz, cfg.rho)) \
        else mx.NO_SOURCE

    if cfg.init == "random":
        state0 = mx.init_random_E(K, cfg.seed)
    else:
        state0 = mx.zero_state(K)

    probe_edges = cfg.probe_edges or (_default_probe(K),)
    manifest: dict = {
        "scheme": cfg.scheme,
        "mesh_kind": cfg.mesh_kind,
        "n_vertices": K.n_cells(0),
        "n_edges": K.n_cells(1),
        "n_faces": K.n_cells(2),
        "seed": cfg.seed,
    }
    if K.dimension == 3:
        manifest["n_cells"] = K.n_cells(3)

    run_cfg = it.RunConfig(
        t_final=cfg.t_final, scheme=cfg.scheme, dt=cfg.dt,
        dt_safety=cfg.dt_safety if cfg.dt is None else 0.9,
        cadence=cfg.cadence, seed=cfg.seed, jitter=cfg.jitter,
        probe_edges=tuple(probe_edges), probe_faces=tuple(cfg.probe_faces),
        snapshot_every=cfg.snapshots)

    if cfg.scheme in ("yee", "bk"):
        traj = it.run_sync(K, dual, mat, run_cfg, state0, src)
        manifest["dt"] = traj.dt
        manifest["n_steps"] = traj.n_steps
    else:
        if cfg.dt is not None:
            dt_faces = np.full(K.n_cells(2), cfg.dt)
        elif cfg.dt_rule == "local":
            dt_faces = cfg.dt_safety * it.local_cfl_dt(K, dual, mat)
        else:
            dt_faces = np.full(K.n_cells(2),
                               cfg.dt_safety * it.cfl_dt(K, dual, mat))
        schedule = it.build_schedule(K, dt_faces, cfg.t_final,
                                     jitter=cfg.jitter, seed=cfg.seed)
        traj = it.run_avi(K, dual, mat, schedule, state0, src, config=run_cfg)
        manifest["dt_min"] = float(min(schedule.dt_faces))
        manifest["dt_max"] = float(max(schedule.dt_faces))
        manifest["n_events"] = traj.n_events
        manifest["asynchronous"] = schedule.pairwise_asynchronous()

    _write_outputs(out_dir, cfg, traj, probe_edges)
    eio.write_manifest(os.path.join(out_dir, "manifest.txt"), manifest, cfg.raw_text)
    print(f"run complete: {len(traj.times)} samples -> {out_dir}")
    return 0


def _default_probe(K: msh.CellComplex) -> int:
    """Deterministic interior edge at a generic spot (off symmetry lines,
    where no low cavity mode has a node)."""
    lo = K.vertices.min(axis=0)
    hi = K.vertices.max(axis=0)
    frac = np.array([0.31, 0.27, 0.29])[:K.dimension]
    target = lo + frac * (hi - lo)
    interior = np.nonzero(~K.boundary_mask(1))[0]
    mids = np.array([K.vertices[list(K.cells[1][i])].mean(axis=0) for i in interior])
    return int(interior[np.argmin(np.linalg.norm(mids - target, axis=1))])


def _write_outputs(out_dir: str, cfg: Config, traj, probe_edges) -> None:
    eio.write_csv(os.path.join(out_dir, "energy.csv"),
                  ["time", "electric", "magnetic", "total"],
                  zip(traj.times, traj.energy_e, traj.energy_b, traj.energy_total))
    eio.write_csv(os.path.join(out_dir, "residuals.csv"),
                  ["time", "divb", "gauss"],
                  zip(traj.times, traj.divb, traj.gauss))
    header = (["time"] + [f"e{i}" for i in probe_edges]
              + [f"f{i}" for i in cfg.probe_faces])
    rows = [[t, *pe, *pf] for t, pe, pf in
            zip(traj.times, traj.probe_edges, traj.probe_faces)]
    eio.write_csv(os.path.join(out_dir, "probes.csv"), header, rows)

    if cfg.spectrum and len(traj.times) >= dg.MIN_SPECTRUM_SAMPLES + 1:
        dt_s = float(traj.times[1] - traj.times[0])
        sp = dg.spectrum(traj.probe_edges[1:, 0], dt_s)
        eio.write_csv(os.path.join(out_dir, "spectrum.csv"),
                      ["frequency", "power"], zip(sp.frequencies, sp.power))
        eio.write_csv(os.path.join(out_dir, "peaks.csv"), ["rank", "frequency"],
                      [(r + 1, f) for r, f in enumerate(sp.peaks)])

    snaps = getattr(traj, "snapshots", None)
    if snaps:
        for n, (t, E, B) in enumerate(snaps):
            eio.write_snapshot(os.path.join(out_dir, f"snapshot_E_{n:06d}.csv"),
                               "E", 1, t, E)
            eio.write_snapshot(os.path.join(out_dir, f"snapshot_B_{n:06d}.csv"),
                               "B", 2, t, B)
    final = traj.final_state
    eio.write_snapshot(os.path.join(out_dir, "final_E.csv"), "E", 1,
                       final.t_E, final.E)
    eio.write_snapshot(os.path.join(out_dir, "final_B.csv"), "B", 2,
                       final.t_B, final.B)


# -- validate ----------------------------------------------------------------------


def cmd_validate(path: str) -> int:
    with open(path) as fh:
        text = fh.read()
    first = next((ln.strip() for ln in text.splitlines()
                  if ln.strip() and not ln.strip().startswith("#")), "")
    rows: list[tuple[str, str, str]] = []
    if first.startswith("dim"):
        K = _checked_load(text, rows)
        if K is not None:
            _mesh_checks(K, rows)
    else:
        try:
            cfg = parse_config(text, base_dir=os.path.dirname(os.path.abspath(path)))
            rows.append(("config", "PASS", f"scheme={cfg.scheme}"))
            K = build_mesh(cfg)
            rows.append(("mesh build", "PASS",
                         f"{K.n_cells(0)} vertices, {K.n_cells(K.dimension)} top cells"))
            _mesh_checks(K, rows)
        except ConfigError as exc:
            rows.append(("config", "FAIL", str(exc)))
        except MeshError as exc:
            rows.append(("mesh build", "FAIL", str(exc)))

    width = max(len(r[0]) for r in rows)
    for name, status, detail in rows:
        print(f"{name:<{width}}  {status:<4}  {detail}")
    return 0


def _checked_load(text: str, rows) -> msh.CellComplex | None:
    try:
        K = msh.load_mesh(text)
        rows.append(("parse", "PASS",
                     f"dim {K.dimension}, {K.n_cells(K.dimension)} top cells"))
        return K
    except MeshError as exc:
        rows.append(("parse", "FAIL", str(exc)))
        return None


def _mesh_checks(K: msh.CellComplex, rows) -> None:
    import warnings

    try:
        K.validate_manifold()
        rows.append(("manifold", "PASS", "every interior facet has 2 cofaces"))
    except MeshError as exc:
        rows.append(("manifold", "FAIL", str(exc)))
        return

    ok = True
    for k in range(K.dimension - 1):
        d_hi = exterior_derivative(K, k + 1).matrix
        d_lo = exterior_derivative(K, k).matrix
        if (d_hi @ d_lo).nnz != 0:
            ok = False
            rows.append((f"d{k + 1} d{k} = 0", "FAIL", "nonzero integer product"))
    if ok:
        rows.append(("d d = 0", "PASS", "exact integer identity"))

    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            dual = msh.circumcentric_dual(K)
            msh.quality(K)
        negatives = min((dual.dual_volumes[k].min() for k in range(K.dimension)),
                        default=1.0)
        if negatives < 0:
            rows.append(("hodge positivity", "WARN",
                         f"negative signed dual measure ({negatives:.3e}); "
                         "mesh is not well-centered"))
        else:
            rows.append(("hodge positivity", "PASS", "all dual measures positive"))
        outside = [str(w.message) for w in caught if "circumcenter" in str(w.message)]
        if outside:
            rows.append(("circumcenters", "WARN", outside[0]))
        else:
            rows.append(("circumcenters", "PASS", "all inside their cells"))
        dt_max = it.cfl_dt(K, dual, mx.MaterialParams())
        rows.append(("cfl estimate", "PASS", f"dt_max = {dt_max:.6g}"))
    except MeshError as exc:
        rows.append(("circumcenters", "FAIL", str(exc)))
    except NumericError as exc:
        rows.append(("cfl estimate", "FAIL", str(exc)))


# -- spectrum ----------------------------------------------------------------------


def cmd_spectrum(csv_path: str, column: str | None, output_override: str | None) -> int:
    header, data = eio.read_csv(csv_path)
    if not data or header[0] != "time":
        raise NumericError("input CSV must have a leading time column")
    cols = {name: [row[i] for row in data] for i, name in enumerate(header)}
    name = column or header[1]
    if name not in cols:
        raise NumericError(f"no column {name!r} in {csv_path}")
    times = cols["time"]
    if len(times) < 3:
        raise NumericError("time series too short")
    dt = times[1] - times[0]
    steps = np.diff(times)
    if np.max(np.abs(steps - dt)) > 1e-9 * max(abs(dt), 1.0):
        raise NumericError("time column is not uniformly sampled")
    sp = dg.spectrum(np.array(cols[name][1:]), dt)
    out_dir = output_override or os.path.dirname(os.path.abspath(csv_path))
    eio.write_csv(os.path.join(out_dir, "spectrum.csv"),
                  ["frequency", "power"], zip(sp.frequencies, sp.power))
    eio.write_csv(os.path.join(out_dir, "peaks.csv"), ["rank", "frequency"],
                  [(r + 1, f) for r, f in enumerate(sp.peaks)])
    print(f"{len(sp.peaks)} peaks -> {out_dir}/peaks.csv")
    return 0


if __name__ == "__main__":
    sys.exit(main())
