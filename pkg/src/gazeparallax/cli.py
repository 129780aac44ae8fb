"""Command-line entry point: matrices, analyze, render, simulate-experiment, fit, serve."""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import eye_model, psychophysics, retinal
from .perception import AcuityModel, DisplaySpec, tradeoff_table
from .transforms import DisplayGeometry, GazeState, RenderMode, eye_and_projection


def _parse_vec3(text: str) -> tuple[float, float, float]:
    parts = [p for p in text.split(",") if p != ""]
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"expected x,y,z, got {text!r}")
    return tuple(float(p) for p in parts)


def _parse_float_list(text: str) -> list[float]:
    try:
        return [float(p) for p in text.split(",") if p != ""]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc))


def _parse_resolution(text: str) -> tuple[int, int]:
    try:
        w, h = text.lower().split("x")
        return int(w), int(h)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected WIDTHxHEIGHT, got {text!r}")


def _parse_distance(text: str) -> float:
    if text.strip().lower() in ("inf", "infinity"):
        return math.inf
    return float(text)


def _mode_from_args(mode: str, gain: float) -> RenderMode:
    if mode == "conventional":
        return RenderMode.conventional()
    if mode == "ocular":
        return RenderMode.ocular_parallax(gain)
    if mode == "reversed":
        return RenderMode.reversed_ocular(gain)
    raise argparse.ArgumentTypeError(f"unknown mode {mode!r}")


def _geometry_from_args(args) -> DisplayGeometry:
    fov = args.fov
    if len(fov) == 1:
        fov = fov * 4
    if len(fov) != 4:
        raise SystemExit("--fov takes one half-angle or l,r,t,b")
    return DisplayGeometry(
        fov_left=fov[0],
        fov_right=fov[1],
        fov_top=fov[2],
        fov_bottom=fov[3],
        image_distance=args.image_distance,
        z_near=args.near,
        z_far=args.far,
    )


def _add_geometry_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--fov", type=_parse_float_list, default=[20.0],
                   help="field-of-view half-angles in degrees: one value or l,r,t,b")
    p.add_argument("--near", type=float, default=0.1, help="near clip distance, m")
    p.add_argument("--far", type=float, default=1000.0, help="far clip distance, m")
    p.add_argument("--image-distance", type=_parse_distance, default=math.inf,
                   help="virtual image distance in m, or 'inf'")


def _add_gaze_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--ipd", type=float, default=0.064, help="interpupillary distance, m (0 = monocular)")
    p.add_argument("--mode", choices=("conventional", "ocular", "reversed"), default="ocular")
    p.add_argument("--gain", type=float, default=1.0, help="parallax gain; 1 is physiological")
    p.add_argument("--eye-model", default="gullstrand-emsley",
                   choices=("gullstrand1", "gullstrand-emsley", "emsley"))
    p.add_argument("--accommodated", action="store_true", help="use the accommodated model variant")


def cmd_matrices(args) -> int:
    state = GazeState(fixation=np.array(args.fixation), ipd=args.ipd,
                      mode=_mode_from_args(args.mode, args.gain))
    model = eye_model.get_model(args.eye_model, args.accommodated)
    geom = _geometry_from_args(args)
    out = {}
    for side in ("left", "right"):
        ep = eye_and_projection(state, model, geom, side)
        out[side] = {
            "eye_matrix": [float(v) for v in ep.eye_matrix.reshape(-1)],
            "projection_matrix": [float(v) for v in ep.projection_matrix.reshape(-1)],
            "nodal_point": [float(v) for v in ep.nodal_point],
        }
    json.dump(out, sys.stdout, indent=2)
    sys.stdout.write("\n")
    return 0


def cmd_analyze_curves(args) -> int:
    model = AcuityModel()
    disp = DisplaySpec(pixel_pitch_arcmin=args.pitch_arcmin)
    header, rows = tradeoff_table(
        model, disp, args.delta_d, max_eccentricity_deg=args.max_ecc,
        step_deg=args.step, d_far=args.far_ref,
    )
    out = Path(args.out)
    with open(out, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([f"{v:.6f}" for v in row])
    if not args.no_fig:
        from .figures import save_tradeoff_figure

        save_tradeoff_figure(header, rows, out.with_suffix(".png"))
    return 0


def cmd_render(args) -> int:
    if (args.scene is None) == (args.stimulus is None):
        print("render: give exactly one of --scene or --stimulus", file=sys.stderr)
        return 2
    if args.scene is not None:
        scene = retinal.load_scene(args.scene)
    else:
        spec_vals = args.stimulus
        seed = int(spec_vals[2]) if len(spec_vals) > 2 else 0
        scene = retinal.make_detection_stimulus(spec_vals[0], spec_vals[1], seed)

    state = GazeState(fixation=np.array(args.gaze), ipd=args.ipd,
                      mode=_mode_from_args(args.mode, args.gain))
    model = eye_model.get_model(args.eye_model, args.accommodated)
    geom = _geometry_from_args(args)
    img = retinal.render(scene, state, model, geom, args.res, side=args.side)
    if args.foveate:
        img = retinal.foveate(img, AcuityModel())
    out = Path(args.out)
    if out.suffix.lower() == ".png":
        retinal.write_png(img, out)
    else:
        retinal.write_ppm(img, out)
    return 0


def _observer_from_json(text: str) -> psychophysics.SimulatedObserver:
    doc = json.loads(text) if text else {}
    return psychophysics.SimulatedObserver(
        detection_threshold_d=doc.get("threshold", 0.36),
        psychometric_slope=doc.get("slope", 0.15),
        lapse_rate=doc.get("lapse", 0.02),
        weber_fraction=doc.get("weber", 0.11),
        rng_seed=int(doc.get("seed", 0)),
    )


def cmd_simulate_experiment(args) -> int:
    obs = _observer_from_json(args.observer)
    plan_fn = (
        psychophysics.plan_detection_session
        if args.experiment == "detection"
        else psychophysics.plan_discrimination_session
    )
    rng = np.random.default_rng(args.seed)
    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["trial_index", "absolute_d", "offset_d", "relative_d", "correct"])
        index = 0
        for rep in range(args.replications):
            plan = plan_fn(args.seed + rep)
            for result in psychophysics.run_session(plan, obs, rng):
                cond = result.condition
                writer.writerow(
                    [index, f"{cond.absolute_d:g}", f"{cond.offset_d:g}",
                     f"{cond.relative_d:g}", int(result.correct)]
                )
                index += 1
    return 0


def _read_results_csv(path):
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        for rec in csv.DictReader(fh):
            rows.append(
                (float(rec["absolute_d"]), float(rec["offset_d"]),
                 float(rec["relative_d"]), int(rec["correct"]))
            )
    if not rows:
        raise ValueError(f"no trials in {path}")
    return rows


def cmd_fit(args) -> int:
    rows = _read_results_csv(args.infile)
    is_discrimination = any(offset > 0 for _, offset, _, _ in rows)
    group_key = (lambda r: r[1]) if is_discrimination else (lambda r: r[0])

    groups: dict[float, dict[float, list[int]]] = {}
    for row in rows:
        level = groups.setdefault(group_key(row), {}).setdefault(row[2], [0, 0])
        level[0] += 1
        level[1] += row[3]

    report = {"experiment": "discrimination" if is_discrimination else "detection", "groups": {}}
    fig_groups = {}
    thresholds = []
    for key in sorted(groups):
        data = [(x, n, k) for x, (n, k) in sorted(groups[key].items())]
        fit = psychophysics.fit_psychometric(data)
        label = f"{'offset' if is_discrimination else 'absolute'}_{key:g}D"
        report["groups"][label] = {
            "alpha": fit.alpha,
            "beta": fit.beta,
            "lapse": fit.lapse,
            "guess": fit.guess,
            "log_likelihood": fit.log_likelihood,
            "threshold75": fit.threshold75,
            "reliable": fit.reliable,
        }
        fig_groups[label] = (data, fit)
        thresholds.append((key, fit.threshold75))

    if is_discrimination and len(thresholds) >= 2:
        slope, intercept = psychophysics.discrimination_linear_fit(thresholds)
        report["linear_fit"] = {"slope": slope, "intercept_d": intercept}

    out = Path(args.out)
    with open(out, "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2)
        fh.write("\n")
    if not args.no_fig:
        from .figures import save_psychometric_figure, save_threshold_line_figure

        save_psychometric_figure(fig_groups, out.with_suffix(".png"))
        if "linear_fit" in report:
            save_threshold_line_figure(
                [t[0] for t in thresholds], [t[1] for t in thresholds],
                report["linear_fit"]["slope"], report["linear_fit"]["intercept_d"],
                out.with_name(out.stem + "_weber.png"),
            )
    return 0


def cmd_serve(args) -> int:
    from .server import run_server

    scene = retinal.load_scene(args.scene) if args.scene else retinal.default_scene()
    run_server(args.host, args.port, scene)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gazeparallax",
        description="Gaze-contingent ocular parallax rendering toolkit",
    )
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("matrices", help="emit per-eye eye/projection matrices and nodal points as JSON")
    p.add_argument("--fixation", type=_parse_vec3, required=True, help="3D fixation point x,y,z (m)")
    _add_gaze_flags(p)
    _add_geometry_flags(p)
    p.set_defaults(func=cmd_matrices)

    p_analyze = sub.add_parser("analyze", help="perceptual tradeoff reports")
    analyze_sub = p_analyze.add_subparsers(dest="analysis")
    p = analyze_sub.add_parser("curves", help="parallax/MAR curves as CSV plus a figure")
    p.add_argument("--delta-d", type=_parse_float_list, default=[1.0, 2.0, 3.0],
                   help="relative distances in diopters, comma separated")
    p.add_argument("--max-ecc", type=float, default=40.0)
    p.add_argument("--step", type=float, default=0.5)
    p.add_argument("--pitch-arcmin", type=float, default=4.58)
    p.add_argument("--far-ref", type=_parse_distance, default=1.0,
                   help="far reference distance in m (or 'inf') anchoring the diopter pairs")
    p.add_argument("--out", required=True, help="output CSV path; figure lands next to it")
    p.add_argument("--no-fig", action="store_true")
    p.set_defaults(func=cmd_analyze_curves)

    p = sub.add_parser("render", help="render a scene or the two-disc stimulus to PPM/PNG")
    p.add_argument("--scene", help="scene JSON document")
    p.add_argument("--stimulus", type=_parse_float_list, metavar="ABS,REL[,SEED]",
                   help="two-disc detection stimulus: absolute D, relative D, optional seed")
    p.add_argument("--gaze", type=_parse_vec3, required=True, help="fixation point x,y,z (m)")
    p.add_argument("--res", type=_parse_resolution, default=(800, 800))
    p.add_argument("--side", choices=("left", "right"), default="right")
    p.add_argument("--foveate", action="store_true", help="apply eccentricity-dependent blur")
    p.add_argument("--out", required=True)
    _add_gaze_flags(p)
    _add_geometry_flags(p)
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("simulate-experiment", help="run simulated 2AFC sessions to a results CSV")
    p.add_argument("--experiment", choices=("detection", "discrimination"), required=True)
    p.add_argument("--observer", default="", help='JSON, e.g. \'{"threshold":0.36,"slope":0.15}\'')
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--replications", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate_experiment)

    p = sub.add_parser("fit", help="fit psychometric functions to a results CSV")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--no-fig", action="store_true")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("serve", help="interactive session protocol over a WebSocket")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8601)
    p.add_argument("--scene", help="scene JSON; omit for the built-in default scene")
    p.set_defaults(func=cmd_serve)

    return parser


def dispatch(argv) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if not getattr(args, "func", None):
        parser.print_usage(sys.stderr)
        return 2
    try:
        return args.func(args)
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"gazeparallax: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
