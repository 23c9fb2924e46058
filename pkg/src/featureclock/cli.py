"""Command-line frontend: compute clocks from CSV inputs, write SVG and JSON.

Exit codes: 0 success, 2 bad input (files or flags), 3 computation failure.
Warnings go to stderr and are echoed in the JSON report. Reports are
key-sorted with floats trimmed to 12 significant digits, so identical runs
produce identical bytes.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
import warnings
from contextlib import contextmanager
from importlib import resources
from pathlib import Path

from . import __version__
from .clockcore import Clock, build_global_clock, build_local_clocks
from .errors import ClockWarning, ComputationError, InputDataError
from .grouping import GroupingResult, dbscan, from_labels, kmeans, mst_over_centers
from .ingest import Dataset, RunConfig, load_dataset, validate_config
from .intergroup import IntergroupClock, build_intergroup_clocks
from .render import render_circles, render_clock, render_intergroup, render_scatter

SCHEMA_VERSION = 1


@contextmanager
def _capture_warnings(sink: list[str]):
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        yield
    for item in caught:
        if issubclass(item.category, ClockWarning):
            sink.append(str(item.message))


def _parse_canvas(text: str) -> tuple[int, int]:
    try:
        w, h = text.lower().split("x")
        return int(w), int(h)
    except ValueError:
        raise InputDataError(f"canvas must look like 900x600, got {text!r}") from None


def _parse_cluster(text: str) -> dict:
    head, _, tail = text.partition(":")
    method = head.strip().lower()
    if method == "kmeans":
        try:
            return {"cluster_method": "kmeans", "cluster_k": int(tail)}
        except ValueError:
            raise InputDataError(f"expected kmeans:<k>, got {text!r}") from None
    if method == "dbscan":
        try:
            eps_text, min_text = tail.split(",")
            return {
                "cluster_method": "dbscan",
                "cluster_eps": float(eps_text),
                "cluster_min_pts": int(min_text),
            }
        except ValueError:
            raise InputDataError(f"expected dbscan:<eps>,<min_pts>, got {text!r}") from None
    raise InputDataError(f"unknown clustering {text!r}; use kmeans:<k> or dbscan:<eps>,<min_pts>")


def _add_common_flags(parser: argparse.ArgumentParser, *, need_inputs: bool = True) -> None:
    if need_inputs:
        parser.add_argument("--x", required=True, help="CSV of high-dimensional features")
        parser.add_argument("--y", required=True, help="CSV of 2D embedding coordinates")
        parser.add_argument("--labels", default=None, help="CSV of per-point labels")
        parser.add_argument("--cluster", default=None, help="kmeans:<k> or dbscan:<eps>,<min_pts>")
        parser.add_argument("--cluster-on", dest="cluster_on", choices=("x", "y"), default=None,
                            help="space to cluster in (default: x)")
    parser.add_argument("--alpha", type=float, default=None, help="significance level (default 0.05)")
    parser.add_argument("--top-k", dest="top_k", type=int, default=None, help="keep only the k strongest arrows")
    parser.add_argument("--theta-step", dest="theta_step_deg", type=float, default=None,
                        help="sweep step in degrees (default 5)")
    parser.add_argument("--no-standardize-x", dest="standardize_x", action="store_const",
                        const=False, default=None, help="skip feature standardization")
    parser.add_argument("--no-center-y", dest="center_y", action="store_const",
                        const=False, default=None, help="skip embedding centering")
    parser.add_argument("--standardize-betas", dest="standardize_betas", action="store_const",
                        const=True, default=None, help="rescale coefficients by their pooled std")
    parser.add_argument("--significance-rule", dest="significance_rule", choices=("or", "and"),
                        default=None, help="axis p-value combination (default or)")
    parser.add_argument("--circles", action="store_const", const=True, default=None,
                        help="draw the full coefficient sweep instead of single arrows")
    parser.add_argument("--scale", dest="clock_scale", type=float, default=None,
                        help="clock radius multiplier (default 1)")
    parser.add_argument("--seed", type=int, default=None, help="clustering seed (default 0)")
    parser.add_argument("--canvas", default=None, help="canvas size as WIDTHxHEIGHT (default 900x600)")
    parser.add_argument("--out-dir", dest="out_dir", default=".", help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="featureclock",
        description="Explain a 2D embedding with clock glyphs of feature contributions.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_global = sub.add_parser("global", help="one clock over all points")
    _add_common_flags(p_global)
    p_global.set_defaults(handler=_cmd_global)

    p_local = sub.add_parser("local", help="one clock per group")
    _add_common_flags(p_local)
    p_local.set_defaults(handler=_cmd_local)

    p_inter = sub.add_parser("intergroup", help="clocks along the MST between group centers")
    _add_common_flags(p_inter)
    p_inter.set_defaults(handler=_cmd_intergroup)

    p_demo = sub.add_parser("demo", help="run all three clocks on the bundled iris fixture")
    p_demo.add_argument("--out-dir", dest="out_dir", default="demo_out")
    p_demo.set_defaults(handler=_cmd_demo)

    return parser


def _config_from_args(args: argparse.Namespace) -> RunConfig:
    raw: dict = {}
    for key in (
        "alpha",
        "top_k",
        "theta_step_deg",
        "standardize_x",
        "center_y",
        "standardize_betas",
        "significance_rule",
        "circles",
        "clock_scale",
        "seed",
        "cluster_on",
    ):
        value = getattr(args, key, None)
        if value is not None:
            raw[key] = value
    if getattr(args, "canvas", None) is not None:
        raw["canvas"] = _parse_canvas(args.canvas)
    if getattr(args, "cluster", None) is not None:
        raw.update(_parse_cluster(args.cluster))
    return validate_config(raw)


def _resolve_grouping(args: argparse.Namespace, dataset: Dataset, config: RunConfig) -> GroupingResult:
    if getattr(args, "labels", None):
        return from_labels(dataset.labels, dataset.Y)
    if config.cluster_method == "kmeans":
        data = dataset.X if config.cluster_on == "x" else dataset.Y
        return kmeans(data, config.cluster_k, config.seed, dataset.Y)
    if config.cluster_method == "dbscan":
        data = dataset.X if config.cluster_on == "x" else dataset.Y
        return dbscan(data, config.cluster_eps, config.cluster_min_pts, dataset.Y)
    raise InputDataError("a grouping source is required: --labels or --cluster")


def _normalize_floats(obj):
    if isinstance(obj, bool):
        return obj
    if isinstance(obj, float):
        return float(f"{obj:.12g}")
    if isinstance(obj, dict):
        return {key: _normalize_floats(value) for key, value in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_normalize_floats(value) for value in obj]
    return obj


def format_report(report: dict) -> str:
    return json.dumps(_normalize_floats(report), sort_keys=True, indent=2) + "\n"


def _arrow_record(arrow) -> dict:
    return {
        "feature": arrow.feature,
        "beta0": arrow.beta0,
        "beta90": arrow.beta90,
        "magnitude": arrow.magnitude,
        "angle_deg": arrow.angle_deg,
        "p0": arrow.p0,
        "p90": arrow.p90,
        "significant": arrow.significant,
    }


def _clock_record(clock: Clock) -> dict:
    record = {
        "variant": clock.variant,
        "group": clock.group,
        "member_count": len(clock.members),
        "anchor": [clock.anchor[0], clock.anchor[1]],
        "scale": clock.scale,
        "arrows": [_arrow_record(a) for a in clock.arrows],
    }
    if clock.circles is not None:
        record["circles"] = {
            feature: [[angle, coef] for angle, coef in samples]
            for feature, samples in clock.circles.items()
        }
    return record


def _intergroup_record(clock: IntergroupClock) -> dict:
    return {
        "variant": "intergroup",
        "edge": {"a": clock.edge_names[0], "b": clock.edge_names[1]},
        "centers": [list(clock.centers[0]), list(clock.centers[1])],
        "anchor": [clock.anchor[0], clock.anchor[1]],
        "axis_angle_deg": clock.axis_angle_deg,
        "converged": clock.converged,
        "arrows": [_arrow_record(a) for a in clock.arrows],
    }


def _report(command: str, config: RunConfig, dataset: Dataset, clock_records, notes) -> dict:
    config_echo = dataclasses.asdict(config)
    config_echo["canvas"] = list(config.canvas)
    if config_echo["anchor"] is not None:
        config_echo["anchor"] = list(config_echo["anchor"])
    return {
        "schema_version": SCHEMA_VERSION,
        "tool": "featureclock",
        "tool_version": __version__,
        "command": command,
        "inputs": {
            "x": Path(dataset.provenance.x_path).name,
            "y": Path(dataset.provenance.y_path).name,
            "labels": Path(dataset.provenance.labels_path).name
            if dataset.provenance.labels_path
            else None,
            "rows": dataset.provenance.n_rows,
            "features": len(dataset.feature_names),
        },
        "config": config_echo,
        "clocks": clock_records,
        "warnings": list(notes),
    }


def _write_outputs(out_dir, stem: str, scene, report: dict) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / f"{stem}.svg").write_text(scene.to_svg(), encoding="utf-8")
    (out / f"{stem}.json").write_text(format_report(report), encoding="utf-8")


def _cmd_global(args: argparse.Namespace) -> list[str]:
    notes: list[str] = []
    with _capture_warnings(notes):
        config = _config_from_args(args)
        dataset = load_dataset(args.x, args.y, args.labels)
        grouping = from_labels(dataset.labels, dataset.Y) if dataset.labels else None
        clock = build_global_clock(dataset, config)
    scene = render_scatter(dataset, grouping, canvas=config.canvas)
    if clock.circles is not None:
        render_circles(scene, clock, clock_scale=config.clock_scale)
    else:
        render_clock(scene, clock, clock_scale=config.clock_scale)
    report = _report("global", config, dataset, [_clock_record(clock)], notes)
    _write_outputs(args.out_dir, "clock", scene, report)
    return notes


def _cmd_local(args: argparse.Namespace) -> list[str]:
    notes: list[str] = []
    with _capture_warnings(notes):
        config = _config_from_args(args)
        dataset = load_dataset(args.x, args.y, args.labels)
        grouping = _resolve_grouping(args, dataset, config)
        clocks = build_local_clocks(dataset, grouping, config)
    scene = render_scatter(dataset, grouping, canvas=config.canvas)
    for clock in clocks:
        if clock.circles is not None:
            render_circles(scene, clock, clock_scale=config.clock_scale)
        else:
            render_clock(scene, clock, clock_scale=config.clock_scale)
    report = _report("local", config, dataset, [_clock_record(c) for c in clocks], notes)
    _write_outputs(args.out_dir, "clock", scene, report)
    return notes


def _cmd_intergroup(args: argparse.Namespace) -> list[str]:
    notes: list[str] = []
    with _capture_warnings(notes):
        config = _config_from_args(args)
        dataset = load_dataset(args.x, args.y, args.labels)
        grouping = _resolve_grouping(args, dataset, config)
        if len(grouping.groups) < 2:
            raise ComputationError(
                f"inter-group clocks need at least 2 groups, found {len(grouping.groups)}"
            )
        mst = mst_over_centers(grouping)
        clocks = build_intergroup_clocks(dataset, grouping, mst, config)
    scene = render_scatter(dataset, grouping, canvas=config.canvas)
    render_intergroup(scene, clocks)
    by_id = {g.id: g.name for g in grouping.groups}
    report = _report("intergroup", config, dataset, [_intergroup_record(c) for c in clocks], notes)
    report["mst"] = [[by_id[a], by_id[b], length] for a, b, length in mst.edges]
    _write_outputs(args.out_dir, "clock", scene, report)
    return notes


def demo_paths() -> tuple[Path, Path, Path]:
    """Paths of the bundled iris fixture (features, embedding, labels)."""
    data = resources.files("featureclock") / "data"
    return (
        Path(str(data / "iris_features.csv")),
        Path(str(data / "iris_embedding.csv")),
        Path(str(data / "iris_labels.csv")),
    )


def _cmd_demo(args: argparse.Namespace) -> list[str]:
    x_path, y_path, labels_path = demo_paths()
    dataset = load_dataset(x_path, y_path, labels_path)
    config = validate_config({})
    out = Path(args.out_dir)
    notes: list[str] = []

    with _capture_warnings(notes):
        grouping = from_labels(dataset.labels, dataset.Y)
        global_clock = build_global_clock(dataset, config)
    scene = render_scatter(dataset, grouping, canvas=config.canvas)
    render_clock(scene, global_clock, clock_scale=config.clock_scale)
    report = _report("global", config, dataset, [_clock_record(global_clock)], notes)
    _write_outputs(out, "global_clock", scene, report)

    local_notes: list[str] = []
    with _capture_warnings(local_notes):
        local_clocks = build_local_clocks(dataset, grouping, config)
    scene = render_scatter(dataset, grouping, canvas=config.canvas)
    for clock in local_clocks:
        render_clock(scene, clock, clock_scale=config.clock_scale)
    report = _report("local", config, dataset, [_clock_record(c) for c in local_clocks], local_notes)
    _write_outputs(out, "local_clocks", scene, report)

    inter_notes: list[str] = []
    with _capture_warnings(inter_notes):
        mst = mst_over_centers(grouping)
        inter_clocks = build_intergroup_clocks(dataset, grouping, mst, config)
    scene = render_scatter(dataset, grouping, canvas=config.canvas)
    render_intergroup(scene, inter_clocks)
    by_id = {g.id: g.name for g in grouping.groups}
    report = _report("intergroup", config, dataset, [_intergroup_record(c) for c in inter_clocks], inter_notes)
    report["mst"] = [[by_id[a], by_id[b], length] for a, b, length in mst.edges]
    _write_outputs(out, "intergroup_clocks", scene, report)

    return notes + local_notes + inter_notes


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        notes = args.handler(args)
    except InputDataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ComputationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    for note in notes:
        print(f"warning: {note}", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
