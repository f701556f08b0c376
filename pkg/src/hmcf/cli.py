"""Command line interface: ``hmcf generate | flow | pair | check | profile | report``.

Outputs go under ``$HMCF_OUT`` (default ``./hmcf_out``) unless ``-o`` is
given.  Exit status is 0 on success (including singular or extinct flows),
1 on numerical or file failures and 2 on usage errors.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from types import SimpleNamespace

import numpy as np

from . import __version__, analytic, certify, flow, shapes
from .hmesh import HMeshError, format_float, read_hmesh, validate, write_hmesh

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

KIND_ALIASES = {
    "sphere": "geodesic_sphere",
    "geodesic_sphere": "geodesic_sphere",
    "torus": "drilled_sphere_torus",
    "drilled_sphere_torus": "drilled_sphere_torus",
    "dumbbell": "dumbbell",
    "ellipsoid": "ellipsoidal",
    "ellipsoidal": "ellipsoidal",
}
PAIR_COLUMNS = flow.CSV_COLUMNS + ("d", "monitorF1", "monitorFa1")
DEFAULT_RESOLUTION = {"geodesic_sphere": 2562, "ellipsoidal": 2562, "drilled_sphere_torus": 8192, "dumbbell": 8192}


class UsageError(Exception):
    pass


def out_root():
    return Path(os.environ.get("HMCF_OUT", "hmcf_out"))


def sha256_file(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def digest_of(obj):
    return hashlib.sha256(json.dumps(obj, sort_keys=True).encode()).hexdigest()


def _fmt(x):
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format_float(float(x))


def _write_json(path, obj):
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def sidecar_path(mesh_path):
    p = Path(mesh_path)
    return p.with_name(p.stem + ".manifest.json")


def _load_sidecar(mesh_path):
    p = sidecar_path(mesh_path)
    if p.exists():
        try:
            return json.loads(p.read_text())
        except ValueError:
            return None
    return None


# --------------------------------------------------------------------------
# generate


def _shape_spec(args):
    params = {}
    if args.spec:
        d = json.loads(Path(args.spec).read_text())
        d = d.get("shape", d)
        kind = KIND_ALIASES.get(d.get("kind"), d.get("kind"))
        params.update(d.get("params", {}))
        resolution = d.get("resolution")
    else:
        kind, resolution = None, None
    if args.kind:
        kind = KIND_ALIASES.get(args.kind)
    if kind not in shapes.KINDS:
        raise UsageError(f"unknown or missing shape kind {kind!r}")
    for flag, key in (("r", "r"), ("eps", "epsilon"), ("d", "d"), ("stretch", "stretch")):
        v = getattr(args, flag)
        if v is not None:
            params[key] = v
    if args.res is not None:
        resolution = args.res
    if resolution is None:
        resolution = DEFAULT_RESOLUTION[kind]
    return shapes.ShapeSpec(kind, params, int(resolution))


def cmd_generate(args):
    spec = _shape_spec(args)
    try:
        mesh = shapes.build(spec)
    except shapes.ShapeError as exc:
        raise UsageError(str(exc)) from None
    out = Path(args.output) if args.output else out_root() / f"{spec.kind}.hmesh"
    out.parent.mkdir(parents=True, exist_ok=True)
    write_hmesh(mesh, out)
    problems = validate(mesh)
    chi = mesh.euler_characteristic()
    manifest = {
        "artifact_version": __version__,
        "command": "generate",
        "shape": spec.to_dict(),
        "digest": digest_of(spec.to_dict()),
        "outputs": {"mesh": str(out), "mesh_sha256": sha256_file(out)},
        "vertices": mesh.n_vertices,
        "faces": mesh.n_faces,
        "euler_characteristic": chi,
    }
    _write_json(sidecar_path(out), manifest)
    print(f"wrote {out}: {mesh.n_vertices} vertices, {mesh.n_faces} faces, chi = {chi}")
    print("validate: ok" if not problems else "validate: " + "; ".join(problems))
    return EXIT_OK if not problems else EXIT_FAIL


# --------------------------------------------------------------------------
# flow and pair


def _flow_config(args, base=None):
    cfg = dict(base or {})
    if getattr(args, "config", None):
        d = json.loads(Path(args.config).read_text())
        cfg.update(d.get("flow", d))
    for flag, key in (("cfl", "cfl"), ("dt_min", "dt_min"), ("h_max", "h_max_abs"), ("max_steps", "max_steps"),
                      ("record_every", "record_every"), ("remesh", "remesh"), ("remesh_ratio", "remesh_ratio"),
                      ("tangential", "tangential_smoothing"), ("velocity", "velocity")):
        v = getattr(args, flag, None)
        if v is not None:
            cfg[key] = v
    try:
        return flow.FlowConfig.from_dict(cfg)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"bad flow config: {exc}") from None


def _axis_for(args, sidecar):
    if getattr(args, "axis_d", None) is not None:
        return float(args.axis_d)
    shape = (sidecar or {}).get("shape") or {}
    if shape.get("kind") == "dumbbell":
        return float(shape.get("params", {}).get("d", 8.0))
    return None


def _read_mesh(path):
    try:
        return read_hmesh(path)
    except FileNotFoundError:
        raise UsageError(f"no such mesh file: {path}") from None


def _write_csv(path, columns, rows):
    with open(path, "w") as fh:
        fh.write(",".join(columns) + "\n")
        for r in rows:
            fh.write(",".join(_fmt(v) for v in r) + "\n")


def _record_row(rec):
    return [getattr(rec, c) for c in flow.CSV_COLUMNS]


def _diameter_certificate(records):
    """Diameter bound over every record; the worst margin is reported."""
    worst = None
    for r in records:
        rhs = 7.0 / (2.0 * math.pi) * math.sqrt(max(r.A * r.W, 0.0))
        margin = rhs - r.diam
        if worst is None or margin < worst[0]:
            worst = (margin, r.diam, rhs)
    margin, lhs, rhs = worst
    tol = certify.DIAMETER_TOL * rhs
    return certify.Certificate("diameter_bound_all_records", lhs, rhs, "<=", margin, tol,
                               "pass" if margin >= -tol else "fail",
                               certify.values_digest(*[(r.t, r.diam, r.A, r.W) for r in records]),
                               {"n_records": len(records)})


def _run_one(job):
    """Run a single flow described by ``job`` (a plain dict, so it pickles)."""
    mesh_path, out_dir, cfg_dict, axis_d, shape = (job[k] for k in ("mesh", "out", "config", "axis_d", "shape"))
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    mesh = read_hmesh(mesh_path)
    config = flow.FlowConfig.from_dict(cfg_dict)
    axis = shapes.dumbbell_axis(axis_d) if axis_d is not None else None
    started = time.time()
    status = {"mesh": str(mesh_path)}
    try:
        state, records = flow.run(mesh, config, axis=axis)
    except flow.FlowError as exc:
        status.update({"status": "error", "error": str(exc), "dump": exc.dump})
        _write_json(out_dir / "status.json", status)
        return EXIT_FAIL
    _write_csv(out_dir / "diagnostics.csv", flow.CSV_COLUMNS, [_record_row(r) for r in records])
    certs = [_diameter_certificate(records).to_dict()] if records else []
    _write_json(out_dir / "certificates.json", certs)
    final = records[-1] if records else None
    status.update({
        "status": state.status,
        "steps": state.step_index,
        "t": state.t,
        "A": final.A if final else None,
        "A0": state.A0,
        "V": final.V if final else None,
        "neckRadius": final.neckRadius if final and axis is not None else None,
    })
    _write_json(out_dir / "status.json", status)
    manifest = {
        "artifact_version": __version__,
        "command": "flow",
        "inputs": {"mesh": str(Path(mesh_path).resolve()), "mesh_sha256": sha256_file(mesh_path)},
        "shape": shape,
        "flow_config": cfg_dict,
        "axis_d": axis_d,
        "outputs": {n: str(out_dir / n) for n in ("diagnostics.csv", "status.json", "certificates.json")},
        "wall_clock": {"started": started, "seconds": time.time() - started},
    }
    manifest["digest"] = digest_of({"mesh_sha256": manifest["inputs"]["mesh_sha256"], "shape": shape,
                                    "flow_config": cfg_dict, "axis_d": axis_d})
    _write_json(out_dir / "manifest.json", manifest)
    print(f"{mesh_path}: {state.status} after {state.step_index} steps at t = {state.t:.10g} -> {out_dir}")
    return EXIT_OK


def _jobs_from_manifest(path, out):
    m = json.loads(Path(path).read_text())
    if m.get("command") != "flow":
        raise UsageError("manifest is not a flow manifest")
    mesh = m["inputs"]["mesh"]
    if sha256_file(mesh) != m["inputs"]["mesh_sha256"]:
        raise UsageError(f"mesh {mesh} no longer matches the manifest digest")
    out_dir = Path(out) if out else Path(path).parent.with_name(Path(path).parent.name + "_rerun")
    return [{"mesh": mesh, "out": str(out_dir), "config": m["flow_config"], "axis_d": m.get("axis_d"),
             "shape": m.get("shape")}]


def cmd_flow(args):
    if args.manifest:
        jobs = _jobs_from_manifest(args.manifest, args.output)
    else:
        if not args.meshes:
            raise UsageError("flow needs at least one mesh file or --manifest")
        config = _flow_config(args)
        jobs = []
        for mp in args.meshes:
            if not Path(mp).exists():
                raise UsageError(f"no such mesh file: {mp}")
            side = _load_sidecar(mp)
            if len(args.meshes) == 1 and args.output:
                out_dir = Path(args.output)
            else:
                base = Path(args.output) if args.output else out_root()
                out_dir = base / Path(mp).stem
            jobs.append({"mesh": str(mp), "out": str(out_dir), "config": config.to_dict(),
                         "axis_d": _axis_for(args, side), "shape": (side or {}).get("shape")})
    try:
        if args.jobs > 1 and len(jobs) > 1:
            with ProcessPoolExecutor(max_workers=args.jobs) as ex:
                codes = list(ex.map(_run_one, jobs))
        else:
            codes = [_run_one(j) for j in jobs]
    except HMeshError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    return max(codes)


def _pair_row(rec):
    a, b = rec.a, rec.b
    union = [rec.step, rec.t, a.A + b.A, a.V + b.V, a.Wbar + b.Wbar, a.W + b.W, max(a.maxAbsH, b.maxAbsH),
             min(a.minEdge, b.minEdge), max(a.diam, b.diam), math.nan, a.flaggedFaces + b.flaggedFaces]
    return union + [rec.d, rec.monitorF1, rec.monitorFa1]


def cmd_pair(args):
    config = _flow_config(args)
    ma, mb = _read_mesh(args.mesh_a), _read_mesh(args.mesh_b)
    out_dir = Path(args.output) if args.output else out_root() / f"pair_{Path(args.mesh_a).stem}_{Path(args.mesh_b).stem}"
    out_dir.mkdir(parents=True, exist_ok=True)
    tol_mesh = flow.pair_tolerance(ma, mb)
    try:
        sa, sb, records = flow.run_pair(ma, mb, config)
    except flow.FlowError as exc:
        _write_json(out_dir / "status.json", {"status": "error", "error": str(exc), "dump": exc.dump})
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    _write_csv(out_dir / "pair.csv", PAIR_COLUMNS, [_pair_row(r) for r in records])
    certs = []
    if records:
        certs = [certify.check_comparison_monitor(records, tol_mesh).to_dict(),
                 certify.check_comparison_monitor(records, tol_mesh, weak=True).to_dict()]
    _write_json(out_dir / "certificates.json", certs)
    status = {
        "status": [sa.status, sb.status],
        "steps": sa.step_index,
        "t": sa.t,
        "tol_mesh": tol_mesh,
        "monitorF1_min": min((r.monitorF1 for r in records), default=None),
        "monitorFa1_min": min((r.monitorFa1 for r in records), default=None),
        "d_min": min((r.d for r in records), default=None),
    }
    _write_json(out_dir / "status.json", status)
    manifest = {
        "artifact_version": __version__,
        "command": "pair",
        "inputs": {"mesh_a": str(Path(args.mesh_a).resolve()), "mesh_b": str(Path(args.mesh_b).resolve()),
                   "mesh_a_sha256": sha256_file(args.mesh_a), "mesh_b_sha256": sha256_file(args.mesh_b)},
        "flow_config": config.to_dict(),
    }
    manifest["digest"] = digest_of({"a": manifest["inputs"]["mesh_a_sha256"], "b": manifest["inputs"]["mesh_b_sha256"],
                                    "config": manifest["flow_config"]})
    _write_json(out_dir / "manifest.json", manifest)
    print(f"pair: {sa.status}/{sb.status} at t = {sa.t:.10g}, min monitorF1 = {status['monitorF1_min']:.6g} "
          f"(tolerance {math.sinh(tol_mesh / 2):.6g}) -> {out_dir}")
    return EXIT_OK


# --------------------------------------------------------------------------
# check


def _check_run_dir(run_dir, which):
    from .report import read_csv

    pair_csv = run_dir / "pair.csv"
    if pair_csv.exists():
        if which not in ("all", "comparison_monitor", "comparison_monitor_weak"):
            raise UsageError(f"certificate {which!r} does not apply to a pair run")
        status = json.loads((run_dir / "status.json").read_text())
        recs = [SimpleNamespace(t=r["t"], d=r["d"], monitorF1=r["monitorF1"], monitorFa1=r["monitorFa1"],
                                flaggedFaces=int(r["flaggedFaces"])) for r in read_csv(pair_csv)]
        out = []
        if which in ("all", "comparison_monitor"):
            out.append(certify.check_comparison_monitor(recs, status["tol_mesh"]))
        if which in ("all", "comparison_monitor_weak"):
            out.append(certify.check_comparison_monitor(recs, status["tol_mesh"], weak=True))
        return out
    manifest = run_dir / "manifest.json"
    if not manifest.exists():
        raise UsageError(f"{run_dir} is not a run directory")
    mesh = read_hmesh(json.loads(manifest.read_text())["inputs"]["mesh"])
    return certify.run_mesh_checks(mesh, which)


def cmd_check(args):
    known = certify.MESH_CHECKS + ("dumbbell_singularity", "comparison_monitor", "comparison_monitor_weak", "all")
    if args.which not in known:
        raise UsageError(f"unknown certificate {args.which!r}; choose from {', '.join(known)}")
    if args.which == "dumbbell_singularity":
        if args.area0 is None or args.d is None:
            raise UsageError("dumbbell_singularity needs --area0 and --d")
        try:
            certs = [certify.check_dumbbell_singularity(args.area0, args.d, args.r_bell)]
        except certify.CertifyError as exc:
            raise UsageError(str(exc)) from None
    else:
        if not args.target:
            raise UsageError("check needs a mesh file or run directory")
        target = Path(args.target)
        if not target.exists():
            raise UsageError(f"no such file or directory: {target}")
        try:
            if target.is_dir():
                certs = _check_run_dir(target, args.which)
            else:
                if args.which.startswith("comparison_monitor"):
                    raise UsageError("comparison monitor certificates need a pair run directory")
                certs = certify.run_mesh_checks(read_hmesh(target), args.which, args.c0)
        except certify.CertifyError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_FAIL
    text = json.dumps([c.to_dict() for c in certs], indent=2, sort_keys=True)
    if args.output:
        Path(args.output).write_text(text + "\n")
    print(text)
    ok = all(c.verdict != "fail" for c in certs)
    return EXIT_OK if ok else EXIT_FAIL


# --------------------------------------------------------------------------
# profile and report


def profile_rows(volumes):
    rows = []
    for v in volumes:
        closed = analytic.sphere_area(analytic.sphere_radius_for_volume(v)) if v > 0 else 0.0
        prof = analytic.iso_profile_area(v)
        rows.append((v, closed, prof, abs(prof - closed)))
    return rows


def cmd_profile(args):
    if args.v0 is None and not args.sweep:
        raise UsageError("profile needs --v0 or --sweep")
    if args.v0 is not None and args.v0 < 0:
        raise UsageError("--v0 must be nonnegative")
    vols = [args.v0] if args.v0 is not None else [analytic.sphere_volume(0.25 * k) for k in range(1, 13)]
    print("V,sphere_area,profile_area,deficit")
    for row in profile_rows(vols):
        print(",".join(format_float(x) for x in row))
    return EXIT_OK


def cmd_report(args):
    from .report import ReportError, make_report

    try:
        paths = make_report(args.run_dir)
    except ReportError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    for p in paths:
        print(p)
    return EXIT_OK


# --------------------------------------------------------------------------


def _add_flow_flags(p):
    p.add_argument("--config", help="JSON file with flow settings (flags override it)")
    p.add_argument("--cfl", type=float)
    p.add_argument("--dt-min", dest="dt_min", type=float)
    p.add_argument("--h-max", dest="h_max", type=float, help="curvature blow-up threshold")
    p.add_argument("--max-steps", dest="max_steps", type=int)
    p.add_argument("--record-every", dest="record_every", type=int)
    p.add_argument("--remesh", choices=["off", "collapse_short_edges"])
    p.add_argument("--remesh-ratio", dest="remesh_ratio", type=float)
    p.add_argument("--tangential", type=float, help="tangential relaxation weight (0 disables)")
    p.add_argument("--velocity", choices=["normal", "vector"])
    p.add_argument("-o", "--output", help="output directory")


def build_parser():
    ap = argparse.ArgumentParser(prog="hmcf", description="Mean curvature flow in hyperbolic 3-space.")
    ap.add_argument("--version", action="version", version=f"hmcf {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write an initial surface as HMESH")
    g.add_argument("--kind", choices=sorted(KIND_ALIASES))
    g.add_argument("--spec", help="JSON shape spec")
    g.add_argument("--r", type=float)
    g.add_argument("--eps", type=float)
    g.add_argument("--d", type=float)
    g.add_argument("--stretch", type=float)
    g.add_argument("--res", type=int, help="target vertex count")
    g.add_argument("-o", "--output")
    g.set_defaults(func=cmd_generate)

    f = sub.add_parser("flow", help="flow one or more meshes")
    f.add_argument("meshes", nargs="*")
    _add_flow_flags(f)
    f.add_argument("--axis-d", dest="axis_d", type=float, help="neck axis: points at +-D/2 on the x1 axis")
    f.add_argument("--jobs", type=int, default=1)
    f.add_argument("--manifest", help="re-run a flow manifest")
    f.set_defaults(func=cmd_flow)

    p = sub.add_parser("pair", help="flow two meshes on a shared clock")
    p.add_argument("mesh_a")
    p.add_argument("mesh_b")
    _add_flow_flags(p)
    p.set_defaults(func=cmd_pair)

    c = sub.add_parser("check", help="evaluate certificates")
    c.add_argument("target", nargs="?", help="mesh file or run directory")
    c.add_argument("--which", default="all")
    c.add_argument("--c0", type=float, default=analytic.C0_DEFAULT)
    c.add_argument("--area0", type=float)
    c.add_argument("--d", type=float)
    c.add_argument("--r-bell", dest="r_bell", type=float, default=1.0)
    c.add_argument("-o", "--output")
    c.set_defaults(func=cmd_check)

    pr = sub.add_parser("profile", help="tabulate the isoperimetric profile")
    pr.add_argument("--v0", type=float)
    pr.add_argument("--sweep", action="store_true")
    pr.set_defaults(func=cmd_profile)

    r = sub.add_parser("report", help="plots and summary for a run directory")
    r.add_argument("run_dir")
    r.set_defaults(func=cmd_report)
    return ap


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except HMeshError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except flow.FlowError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
