"""Command-line front end.

Verbs:

    flagdyn validate --config sys.cfg
        parse + build the system and run the invariant battery; exit 0 iff
        every check passes, otherwise 1 with the first failure named.
    flagdyn flags --config sys.cfg [--out-dir DIR]
        enumerate the distinguished flags at the maximally mixed state and
        their spectral tangent vectors.
    flagdyn omega --config sys.cfg [--flag-source {identity,iota}]
        transfer-rate matrix w, generator Omega, and the projected affine
        field (b, A, det A) per flag.
    flagdyn slc --config sys.cfg --out-dir DIR [--resolution N] [--threads N]
        classify the simplex grid, sweep candidate boundary patches, and
        write grid.csv, arcs.csv, summary.json, region.png (+ region.svg
        for three-level systems).
    flagdyn simulate --config plan.cfg --out-dir DIR
        run the config's transport plan: rollout / roundtrip checkpoint
        table, or a book-end delta sweep with its bound report.

Exit codes: 0 ok, 1 validation failure, 2 parse error, 3 numerical failure.
Text outputs are byte-deterministic for a fixed config + seed; PNG files
are best-effort renderings and carry no such promise.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from .controllability import (
    CATEGORY_NAMES,
    build_field_set,
    compute_a_iota,
    iota_flag_set,
    rasterize_region,
    tangent_set_at_iota,
)
from .core import trace_distance
from .errors import FlagdynError, UnsupportedDimensionForSvgError, ValidationError
from .flagpath import ConstantFlagPath, GeodesicFlagPath, SampledFlagPath
from .hamiltonian import TransportPlan, bookend_transport, roundtrip_report
from .orbit import Flag, compute_w, default_step, identity_flag, project_field, w_derivative
from .randsys import SeededStream
from .report import (
    fmt,
    render_bound_png,
    render_region_png,
    render_region_svg,
    render_trajectory_png,
    write_csv,
    write_json,
)
from .simplex import build_projection
from .specio import load_document, parse_plan, parse_run, parse_system, resolve_frame

IDENTITY_TOL = 1e-12


def _ensure_outdir(args) -> str | None:
    if args.out_dir is None:
        return None
    os.makedirs(args.out_dir, exist_ok=True)
    return args.out_dir


def _load(args):
    doc = load_document(args.config)
    spec = parse_system(doc)
    run = parse_run(doc)
    if args.resolution is not None:
        run.resolution = args.resolution
        run.validate()
    sys_ = spec.build(seed_override=args.seed)
    return doc, spec, run, sys_


def _emit(out_dir, name, header, rows, as_json: bool):
    """Write one table as CSV, or as a JSON list of row objects."""
    if as_json:
        payload = [dict(zip(header, row)) for row in rows]
        return write_json(os.path.join(out_dir, name + ".json"), payload)
    return write_csv(os.path.join(out_dir, name + ".csv"), header, rows)


# -- validate -------------------------------------------------------------------


def _invariant_battery(spec, sys_):
    """Yield (name, passed, detail) for each structural invariant."""
    n = sys_.dim
    pmap = build_projection(n)
    iota = np.full(n, 1.0 / n)

    d1 = float(np.linalg.norm(pmap.pi @ iota))
    d2 = float(np.linalg.norm(pmap.pi @ pmap.pi.T - np.eye(n - 1)))
    d3 = float(
        np.linalg.norm(pmap.pi.T @ pmap.pi - (np.eye(n) - np.outer(iota, iota) * n))
    )
    worst = max(d1, d2, d3)
    yield ("projection identities", worst <= IDENTITY_TOL, f"max defect {worst:.3e}")

    scale = max(1.0, sys_.dissipation_scale())
    om_id = compute_w(sys_, identity_flag(n)).omega
    col = float(np.abs(om_id.sum(axis=0)).max())
    yield ("generator column sums (identity flag)", col <= 1e-10 * scale, f"max |sum| {col:.3e}")

    iset = iota_flag_set(sys_)
    om_iota = compute_w(sys_, iset.flags[0]).omega
    col2 = float(np.abs(om_iota.sum(axis=0)).max())
    yield ("generator column sums (iota flag)", col2 <= 1e-10 * scale, f"max |sum| {col2:.3e}")

    tr = float(abs(np.trace(iset.a_iota).real))
    yield ("commutator-sum trace", tr <= 1e-10 * scale, f"|trace| {tr:.3e}")

    structured = all(
        label.startswith(("jump", "dephasing")) for label in spec.labels
    )
    if structured and spec.rng is None:
        stream = SeededStream(20240317)
        worst_dw = 0.0
        for _ in range(3):
            h = stream.tangent_off_diagonal(n)
            for flag in (identity_flag(n), iset.flags[0]):
                dw = w_derivative(sys_, flag, h)
                worst_dw = max(worst_dw, float(np.abs(dw).max()))
        yield (
            "rate-map criticality at the distinguished flags",
            worst_dw <= 1e-8 * scale,
            f"max |dw| {worst_dw:.3e}",
        )


def cmd_validate(args) -> int:
    _, spec, _, sys_ = _load(args)
    results = []
    failed = None
    for name, ok, detail in _invariant_battery(spec, sys_):
        results.append({"check": name, "passed": bool(ok), "detail": detail})
        print(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
        if not ok and failed is None:
            failed = name
    out_dir = _ensure_outdir(args)
    if out_dir is not None:
        write_json(
            os.path.join(out_dir, "validate.json"),
            {
                "dim": sys_.dim,
                "num_operators": sys_.num_ops,
                "dissipation_scale": sys_.dissipation_scale(),
                "checks": results,
                "passed": failed is None,
            },
        )
    if failed is not None:
        raise ValidationError(f"invariant battery failed: {failed}")
    print(f"ok: {sys_.num_ops} operator(s) on a {sys_.dim}-level system")
    return 0


# -- flags ----------------------------------------------------------------------


def _perm_label(perm) -> str:
    return "|".join(str(p + 1) for p in perm)


def cmd_flags(args) -> int:
    _, _, _, sys_ = _load(args)
    n = sys_.dim
    iset = iota_flag_set(sys_)
    tangents = tangent_set_at_iota(iset)
    header = (
        ["flag", "perm"]
        + [f"gamma_{j + 1}" for j in range(n)]
        + [f"tangent_{j + 1}" for j in range(n)]
    )
    rows = []
    for i, perm in enumerate(iset.perms):
        rows.append(
            [i, _perm_label(perm)]
            + [iset.gamma[p] for p in perm]
            + list(tangents[i])
        )
    print(f"{len(iset.flags)} distinguished flags on a {n}-level system")
    print("spectrum of the commutator sum:", " ".join(fmt(g) for g in iset.gamma))
    out_dir = _ensure_outdir(args)
    if out_dir is not None:
        _emit(out_dir, "flags", header, rows, args.format == "json")
        write_json(
            os.path.join(out_dir, "summary.json"),
            {
                "dim": n,
                "num_flags": len(iset.flags),
                "a_iota_spectrum": list(iset.gamma),
            },
        )
    return 0


# -- omega ----------------------------------------------------------------------


def cmd_omega(args) -> int:
    _, _, _, sys_ = _load(args)
    n = sys_.dim
    pmap = build_projection(n)
    if args.flag_source == "identity":
        flags = [identity_flag(n)]
        labels = ["identity"]
    else:
        iset = iota_flag_set(sys_)
        flags = list(iset.flags)
        labels = [_perm_label(p) for p in iset.perms]

    rate_rows = []
    field_rows = []
    dets = []
    for idx, (flag, label) in enumerate(zip(flags, labels)):
        om = compute_w(sys_, flag)
        for i in range(n):
            for j in range(n):
                rate_rows.append([idx, label, i + 1, j + 1, om.w[i, j], om.omega[i, j]])
        fld = project_field(pmap, om)
        det = float(np.linalg.det(fld.a))
        dets.append(det)
        row = [idx, label, det] + list(fld.b)
        for i in range(n - 1):
            row.extend(fld.a[i])
        field_rows.append(row)
    print(f"{len(flags)} flag(s); det A:", " ".join(fmt(d) for d in dets))
    out_dir = _ensure_outdir(args)
    if out_dir is not None:
        as_json = args.format == "json"
        _emit(out_dir, "omega", ["flag", "perm", "row", "col", "w", "omega"], rate_rows, as_json)
        fheader = (
            ["flag", "perm", "det_a"]
            + [f"b_{i + 1}" for i in range(n - 1)]
            + [f"a_{i + 1}{j + 1}" for i in range(n - 1) for j in range(n - 1)]
        )
        _emit(out_dir, "fields", fheader, field_rows, as_json)
        write_json(
            os.path.join(out_dir, "summary.json"),
            {"dim": n, "flag_source": args.flag_source, "det_a": dets},
        )
    return 0


# -- slc ------------------------------------------------------------------------


def cmd_slc(args) -> int:
    _, _, run, sys_ = _load(args)
    n = sys_.dim
    if args.format == "svg" and n != 3:
        raise UnsupportedDimensionForSvgError(
            f"svg output needs a 3-level system, got n = {n}"
        )
    iset = iota_flag_set(sys_)
    fset = build_field_set(sys_, iset.flags)
    region = rasterize_region(
        fset,
        resolution=run.resolution,
        tol=run.membership_tol,
        samples_per_facet=run.samples_per_facet,
        dedup=run.dedup,
        threads=args.threads,
    )
    counts = region.counts()
    print(
        "grid %d points: %d interior / %d boundary / %d exterior"
        % (
            region.codes.shape[0],
            counts["interior"],
            counts["boundary"],
            counts["exterior"],
        )
    )
    print(
        "%d candidate boundary patches from %d usable flags"
        % (len(region.patches), len(fset.usable(run.dedup)))
    )

    out_dir = _ensure_outdir(args)
    if out_dir is None:
        return 0
    as_json = args.format == "json"

    grid_header = (
        [f"lambda_{j + 1}" for j in range(n)]
        + [f"x_{j + 1}" for j in range(n - 1)]
        + ["category", "code", "margin"]
    )
    grid_rows = []
    for i in range(region.codes.shape[0]):
        grid_rows.append(
            list(region.lambdas[i])
            + list(region.xs[i])
            + [CATEGORY_NAMES[int(region.codes[i])], int(region.codes[i]), region.margins[i]]
        )
    _emit(out_dir, "grid", grid_header, grid_rows, as_json)

    arc_header = (
        ["subset"]
        + [f"s_{j + 1}" for j in range(n - 1)]
        + [f"x_{j + 1}" for j in range(n - 1)]
        + ["residual"]
    )
    arc_rows = []
    for patch in region.patches:
        sid = "|".join(str(i) for i in patch.subset)
        for k in range(patch.weights.shape[0]):
            arc_rows.append(
                [sid] + list(patch.weights[k]) + list(patch.points[k]) + [patch.residuals[k]]
            )
    _emit(out_dir, "arcs", arc_header, arc_rows, as_json)

    max_res = max(
        (float(p.residuals.max()) for p in region.patches if p.residuals.size),
        default=0.0,
    )
    write_json(
        os.path.join(out_dir, "summary.json"),
        {
            "dim": n,
            "resolution": region.resolution,
            "tol": region.tol,
            "counts": counts,
            "num_patches": len(region.patches),
            "max_patch_residual": max_res,
            **region.metadata,
        },
    )

    arcs = [p.points for p in region.patches]
    if n == 3:
        render_region_svg(os.path.join(out_dir, "region.svg"), region, fset.pmap, arcs)
    if n in (3, 4):
        render_region_png(os.path.join(out_dir, "region.png"), region, fset.pmap, arcs)
    return 0


# -- simulate -------------------------------------------------------------------


def _build_flag_path(plan, n, base_frame, t0=0.0):
    frames = [
        resolve_frame(entry, n, base_frame, f"plan.flag_path.frames[{i}]")
        for i, entry in enumerate(plan.frames)
    ]
    if plan.path_kind == "constant":
        return ConstantFlagPath(frames[0])
    if plan.path_kind == "geodesic":
        durations = plan.durations
        if not durations:
            durations = [plan.duration / (len(frames) - 1)] * (len(frames) - 1)
        if len(durations) != len(frames) - 1:
            raise ValidationError(
                "plan.flag_path.durations must have one entry per segment "
                f"({len(frames) - 1}), got {len(durations)}"
            )
        return GeodesicFlagPath(frames, durations, t0=t0)
    times = plan.times
    if not times:
        times = np.linspace(t0, t0 + plan.duration, len(frames))
    if len(times) != len(frames):
        raise ValidationError(
            f"plan.flag_path.times must have one entry per frame, got {len(times)}"
        )
    return SampledFlagPath(times, frames, splices=plan.splices)


def _checkpoint_rows(traj, path, stride):
    rows = []
    n = traj.lambdas.shape[1]
    for i in range(0, traj.times.shape[0], stride):
        lam = traj.lambdas[i]
        # sorted descending, consecutive diffs are <= 0, so the smallest
        # gap is -max(diff)
        order = np.argsort(-lam, kind="stable")
        gap = float(-np.diff(lam[order]).max()) if n > 1 else 0.0
        # distance of the driven state to the plan's own state at this time
        d = trace_distance(traj.rhos[i], traj.planned_state(i, path))
        rows.append(
            [traj.times[i]]
            + list(lam)
            + list(traj.xs[i])
            + [gap, traj.h_norms[i], d]
        )
    return rows


def cmd_simulate(args) -> int:
    doc, spec, run, sys_ = _load(args)
    n = sys_.dim
    plan_spec = parse_plan(doc, n)
    base_frame = iota_flag_set(sys_).base.frame if _needs_iota(plan_spec) else np.eye(n, dtype=complex)
    path = _build_flag_path(plan_spec, n, base_frame)
    plan = TransportPlan(
        flag_path=path, lambda0=plan_spec.lambda0, duration=plan_spec.duration
    )
    step = run.step if run.step is not None else default_step(sys_)
    out_dir = _ensure_outdir(args)
    as_json = args.format == "json"

    if plan_spec.mode == "bookend":
        u0 = path.frame(0.0)
        rho_start = (u0 * plan_spec.lambda0) @ u0.conj().T
        results = []
        for delta in plan_spec.deltas:
            rho_i = _rotated(rho_start, plan_spec.seed_i)
            # target: wherever the plan ends, optionally re-rotated
            probe = bookend_transport(
                sys_, rho_i, _plan_end_state(sys_, plan, path, plan_spec), plan,
                delta=float(delta), step=step, crossing_tol=run.crossing_tol,
            )
            results.append(probe)
            print(
                "delta %s: distance %s  bound %s"
                % (fmt(probe.delta), fmt(probe.distance), fmt(probe.bound))
            )
        if out_dir is not None:
            rows = [[r.delta, r.distance, r.bound, r.distance / r.bound] for r in results]
            _emit(out_dir, "bound", ["delta", "distance", "bound", "ratio"], rows, as_json)
            write_json(
                os.path.join(out_dir, "summary.json"),
                {
                    "mode": "bookend",
                    "dim": n,
                    "deltas": [r.delta for r in results],
                    "distances": [r.distance for r in results],
                    "bounds": [r.bound for r in results],
                },
            )
            render_bound_png(
                os.path.join(out_dir, "bound.png"),
                [r.delta for r in results],
                [r.distance for r in results],
                [r.bound for r in results],
            )
        return 0

    report = roundtrip_report(sys_, plan, step=step, crossing_tol=run.crossing_tol)
    traj = report.traj
    stride = run.checkpoint_stride or max(1, traj.times.shape[0] // 2000)
    print(
        "rollout %d steps: max eigenvalue deviation %s, max projector deviation %s"
        % (traj.times.shape[0] - 1, fmt(report.eig_dev), fmt(report.proj_dev))
    )
    if plan_spec.mode == "roundtrip":
        print("minimum spectral gap along the plan:", fmt(report.min_gap))
    if out_dir is not None:
        header = (
            ["t"]
            + [f"lambda_{j + 1}" for j in range(n)]
            + [f"x_{j + 1}" for j in range(n - 1)]
            + ["min_gap", "h_norm", "d_to_target"]
        )
        _emit(out_dir, "checkpoints", header, _checkpoint_rows(traj, path, stride), as_json)
        write_json(
            os.path.join(out_dir, "summary.json"),
            {
                "mode": plan_spec.mode,
                "dim": n,
                "steps": int(traj.times.shape[0] - 1),
                "eig_deviation": report.eig_dev,
                "projector_deviation": report.proj_dev,
                "min_gap": report.min_gap,
            },
        )
        render_trajectory_png(
            os.path.join(out_dir, "trajectory.png"), traj.times, traj.lambdas
        )
    return 0


def _needs_iota(plan_spec) -> bool:
    for entry in plan_spec.frames:
        if entry == "iota":
            return True
        if isinstance(entry, dict) and "permute_iota" in entry:
            return True
    return False


def _rotated(rho, seed):
    if seed is None:
        return rho
    v = SeededStream(int(seed)).haar_unitary(rho.shape[0])
    return v @ rho @ v.conj().T


def _plan_end_state(sys_, plan, path, plan_spec):
    from .orbit import integrate_lambda

    lam_traj = integrate_lambda(sys_, path, plan.lambda0, (0.0, plan.duration))
    u1 = path.frame(plan.duration)
    rho_end = (u1 * lam_traj.lambdas[-1]) @ u1.conj().T
    return _rotated(rho_end, plan_spec.seed_t)


# -- dispatch -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="flagdyn",
        description="orbit-resolved Lindblad dynamics: validation, rate matrices, "
        "controllability regions, and transport plans",
    )
    sub = parser.add_subparsers(dest="verb", required=True)

    def common(p):
        p.add_argument("--config", required=True, help="system/plan config file")
        p.add_argument("--out-dir", default=None, help="directory for emitted files")
        p.add_argument(
            "--format", choices=("csv", "json", "svg"), default="csv",
            help="tabular output format; svg additionally renders the region overlay",
        )
        p.add_argument("--seed", type=int, default=None, help="override the rng seed")
        p.add_argument(
            "--resolution", type=int, default=None, help="override the grid resolution"
        )
        p.add_argument(
            "--threads", type=int, default=1,
            help="worker threads for grid classification (output is identical)",
        )

    p = sub.add_parser("validate", help="run the structural invariant battery")
    common(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("flags", help="distinguished flags at the maximally mixed state")
    common(p)
    p.set_defaults(func=cmd_flags)

    p = sub.add_parser("omega", help="transfer rates and projected affine fields")
    common(p)
    p.add_argument(
        "--flag-source", choices=("identity", "iota"), default="iota",
        help="which flags to evaluate",
    )
    p.set_defaults(func=cmd_omega)

    p = sub.add_parser("slc", help="rasterize the controllability region")
    common(p)
    p.set_defaults(func=cmd_slc)

    p = sub.add_parser("simulate", help="run the config's transport plan")
    common(p)
    p.set_defaults(func=cmd_simulate)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except FlagdynError as exc:
        print(f"{args.verb}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
