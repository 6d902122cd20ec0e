"""Command-line frontend: decompose, remesh, remesh2d, metrics.

Every command accepts `--config FILE` (a JSON object of option names);
explicit flags override config-file values. Error classes map to distinct
exit codes so scripts can react: parse/format 2, topology 3, engine 4,
resource guards 5.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .contour2d import (
    read_contour_csv,
    read_contours,
    remesh_microstructure_2d,
    segment_budgets,
    write_contours,
)
from .diffusion import DiffusionConfig, run_hierarchical
from .errors import (
    EngineError,
    FoldError,
    FormatError,
    GuardError,
    SingularityError,
    TopologyError,
)
from .harmonics import ExpansionConfig, decompose, load_weights, save_weights
from .mesh import MAX_ICOSPHERE_REFINEMENTS, load_mesh, quality_report, save_mesh
from .spheroidal import (
    KINDS,
    align_to_principal_axes,
    fit_domain,
    map_to_domain,
    sample_cap_grid,
    sample_icosphere,
)

EXIT_PARSE = 2
EXIT_TOPOLOGY = 3
EXIT_ENGINE = 4
EXIT_GUARD = 5

_KIND_CHOICES = tuple(KINDS) + ("hemispheroid",)


def _add_config_flag(parser):
    parser.add_argument(
        "--config",
        default=None,
        help="JSON file of option values; explicit flags win",
    )


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="equimesh",
        description=(
            "Morphology-preserving remeshing: harmonic decomposition of "
            "genus-0 surfaces and density-equalizing resampling."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("decompose", help="fit a domain and write weights")
    p.add_argument("--in", dest="input", default=None, help="mesh file (obj/off/ply)")
    p.add_argument("--out", default=None, help="weights file to write")
    p.add_argument("--nmax", type=int, default=None, help="expansion degree")
    p.add_argument(
        "--kind",
        default=None,
        choices=_KIND_CHOICES,
        help="domain kind hint (open meshes need a hemispheroidal one)",
    )
    p.add_argument(
        "--no-align",
        action="store_true",
        default=None,
        help="skip principal-axes alignment of the input",
    )
    _add_config_flag(p)

    p = sub.add_parser("remesh", help="density-equalize a surface sampling")
    p.add_argument("--weights", default=None, help="weights file from decompose")
    p.add_argument("--in", dest="input", default=None, help="mesh to decompose inline")
    p.add_argument("--nmax", type=int, default=None, help="degree for inline decompose")
    p.add_argument(
        "--kind", default=None, choices=_KIND_CHOICES, help="domain kind hint"
    )
    p.add_argument("--out", default=None, help="remeshed mesh file")
    p.add_argument("--trace", default=None, help="iteration trace CSV")
    p.add_argument(
        "--refine",
        type=int,
        default=None,
        help="icosphere refinements for closed sampling (default 4)",
    )
    p.add_argument("--rings", type=int, default=None, help="cap sampling rings")
    p.add_argument("--sectors", type=int, default=None, help="cap sampling sectors")
    p.add_argument(
        "--stages",
        default=None,
        help="schedule nmax:imax[,nmax:imax...]; default one stage at the "
        "weight degree",
    )
    p.add_argument("--imax", type=int, default=None, help="iterations (default 50)")
    p.add_argument("--gamma", type=float, default=None, help="anisotropy strength")
    p.add_argument("--dt-scale", type=float, default=None, help="time-step constant")
    p.add_argument("--std-tol", type=float, default=None, help="early-stop threshold")
    _add_config_flag(p)

    p = sub.add_parser("metrics", help="per-face/vertex quality report")
    p.add_argument("--in", dest="input", default=None, help="mesh file")
    p.add_argument("--out", default=None, help="report CSV")
    p.add_argument("--bins", type=int, default=None, help="histogram bins")
    _add_config_flag(p)

    p = sub.add_parser("remesh2d", help="remesh planar particle contours")
    p.add_argument(
        "--in", dest="input", default=None, help="contours document or contour CSV"
    )
    p.add_argument("--out", default=None, help="remeshed contours document")
    p.add_argument(
        "--max-segments", type=int, default=None, help="budget of the longest contour"
    )
    p.add_argument("--nmax", type=int, default=None, help="contour expansion degree")
    p.add_argument("--imax", type=int, default=None, help="diffusion iterations")
    p.add_argument("--workers", type=int, default=None, help="parallel particle jobs")
    _add_config_flag(p)

    return parser


def _merge_config(args):
    """Overlay config-file values under explicit flags; flags win."""
    values = vars(args)
    if args.config is not None:
        try:
            raw = Path(args.config).read_text()
        except OSError as exc:
            raise FormatError(f"cannot read config {args.config}: {exc}") from exc
        try:
            data = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise FormatError(f"bad config file: {exc}") from exc
        if not isinstance(data, dict):
            raise FormatError("config file must hold a JSON object")
        for key, value in data.items():
            name = key.replace("-", "_")
            if name not in values:
                raise FormatError(f"unknown config key {key!r}")
            if values[name] is None:
                values[name] = value
    return args


def _require(args, *names):
    for name in names:
        if getattr(args, name) is None:
            flag = "--in" if name == "input" else "--" + name.replace("_", "-")
            raise FormatError(f"missing required option {flag}")


def _parse_stages(text):
    stages = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        try:
            n_str, i_str = part.split(":")
            stages.append((int(n_str), int(i_str)))
        except ValueError as exc:
            raise FormatError(
                f"bad stage {part!r}; expected nmax:imax"
            ) from exc
    if not stages:
        raise FormatError("empty stage schedule")
    return stages


def _decompose_pipeline(mesh_path, n_max, kind_hint, align):
    mesh = load_mesh(mesh_path)
    if align:
        mesh = align_to_principal_axes(mesh)
    domain = fit_domain(mesh, kind_hint=kind_hint)
    coords = map_to_domain(mesh, domain)
    weights = decompose(mesh, coords, ExpansionConfig(n_max))
    return weights


def cmd_decompose(args):
    _require(args, "input", "out", "nmax")
    align = not bool(args.no_align)
    weights = _decompose_pipeline(args.input, args.nmax, args.kind, align)
    save_weights(weights, args.out)
    beta = (weights.n_max + 1) ** 2
    print(f"kind={weights.domain.kind} beta={beta} "
          f"residual_rms={weights.residual_rms:.6e}")
    print(f"wrote {args.out}")
    return 0


def _sample_for(domain, refine, rings, sectors):
    if not domain.is_hemispheroid:
        return sample_icosphere(domain, refine)
    if refine > MAX_ICOSPHERE_REFINEMENTS:
        raise GuardError(
            f"refinement {refine} exceeds the cap of {MAX_ICOSPHERE_REFINEMENTS}"
        )
    if rings is None:
        rings = 4 * (2**refine)
    if sectors is None:
        sectors = 8 * (2**refine)
    return sample_cap_grid(domain, rings=rings, sectors=sectors)


def cmd_remesh(args):
    if args.weights is not None:
        weights = load_weights(args.weights)
    else:
        _require(args, "input", "nmax")
        weights = _decompose_pipeline(args.input, args.nmax, args.kind, True)
    _require(args, "out")

    refine = 4 if args.refine is None else args.refine
    i_max = 50 if args.imax is None else args.imax
    if args.stages is not None:
        stages = _parse_stages(args.stages)
    else:
        stages = [(weights.n_max, i_max)]
    config = DiffusionConfig(
        stages=tuple(stages),
        gamma=0.0 if args.gamma is None else args.gamma,
        dt_scale=0.5 if args.dt_scale is None else args.dt_scale,
        std_tolerance=1e-6 if args.std_tol is None else args.std_tol,
    )
    coords, faces = _sample_for(weights.domain, refine, args.rings, args.sectors)
    try:
        final_coords, remeshed, trace = run_hierarchical(
            weights, coords, faces, config
        )
    except EngineError as exc:
        trace = getattr(exc, "trace", None)
        if trace is not None and args.trace is not None:
            trace.to_csv(args.trace)
            print(f"wrote partial trace {args.trace}", file=sys.stderr)
        raise
    save_mesh(remeshed, args.out)
    if args.trace is not None:
        trace.to_csv(args.trace)
    final_std = trace.std_u[-1] if trace.n_rows else trace.initial_std_u
    final_area = trace.area[-1] if trace.n_rows else trace.initial_area
    drift = abs(final_area - trace.initial_area) / trace.initial_area
    flips = int(np.sum(trace.flip_count)) if trace.n_rows else 0
    print(
        f"iterations={trace.n_rows} initial_std={trace.initial_std_u:.6e} "
        f"final_std={final_std:.6e} area_drift={drift:.3%} "
        f"flip_retries={flips} basis_evaluations="
        f"{trace.basis_evaluation_count[-1] if trace.n_rows else 0}"
    )
    print(f"wrote {args.out}")
    return 0


def cmd_metrics(args):
    _require(args, "input", "out")
    bins = 16 if args.bins is None else args.bins
    mesh = load_mesh(args.input)
    report = quality_report(mesh, bins=bins)
    report.to_csv(args.out)
    for line in report.summary_lines():
        print(line)
    print(f"wrote {args.out}")
    return 0


def cmd_remesh2d(args):
    _require(args, "input", "out", "max_segments", "nmax")
    i_max = 200 if args.imax is None else args.imax
    workers = 1 if args.workers is None else args.workers
    try:
        named = read_contours(args.input)
    except FormatError:
        # fall back to a single-contour CSV
        named = [("0", read_contour_csv(args.input))]
    ids = [pid for pid, _ in named]
    contours = [c for _, c in named]
    lengths = [c.length() for c in contours]
    budgets = segment_budgets(lengths, args.max_segments)
    print("particle length budget")
    for pid, length, budget in zip(ids, lengths, budgets):
        print(f"{pid} {length:.6g} {budget}")
    remeshed = remesh_microstructure_2d(
        contours, args.max_segments, args.nmax, i_max=i_max, workers=workers
    )
    write_contours(list(zip(ids, remeshed)), args.out)
    print(f"wrote {args.out}")
    return 0


_COMMANDS = {
    "decompose": cmd_decompose,
    "remesh": cmd_remesh,
    "metrics": cmd_metrics,
    "remesh2d": cmd_remesh2d,
}


def main(argv=None):
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        args = _merge_config(args)
        return _COMMANDS[args.command](args)
    except (FormatError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (TopologyError, FoldError, SingularityError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_TOPOLOGY
    except GuardError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_GUARD
    except EngineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ENGINE
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())
