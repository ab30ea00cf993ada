"""Command line front end.

Subcommands:
  pairwise   register one scan onto another
  multiview  register a directory of scans into a shared frame
  synth      generate a synthetic scene on disk
  eval       score an estimated trajectory against a reference

Exit codes: 0 success, 1 operational failure (bad file, degenerate data),
2 usage error. Output rows are 'name value value ...' so they can be parsed
with split().
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .config import PipelineConfig
from .errors import LengthMismatch, RegistrationError
from .geometry import PointCloud, geodesic_angle
from .graph import build_graph
from .io_formats import (
    TrajectoryEntry,
    read_config,
    read_features,
    read_ply,
    read_trajectory,
    trajectory_from_motions,
    voxel_downsample,
    write_features,
    write_ply,
    write_trajectory,
)
from .metrics import (
    ROTATION_ECDF_THRESHOLDS_DEG,
    TRANSLATION_ECDF_THRESHOLDS_M,
    ecdf,
)
from .pairwise import register_pair
from .pipeline import pairwise_chain_absolute, run_multiview
from .synthetic import generate_scene


def _fmt(values) -> str:
    return " ".join("%.17g" % float(v) for v in np.atleast_1d(values))


def _load_cloud(ply_path: Path, feat_path: Path | None, voxel: float | None) -> PointCloud:
    cloud = read_ply(ply_path)
    if feat_path is not None:
        features = read_features(feat_path)
        if features.shape[0] != len(cloud):
            raise LengthMismatch(
                f"{feat_path} holds {features.shape[0]} descriptors for {len(cloud)} points"
            )
        cloud = PointCloud(cloud.points, features)
    else:
        # fall back to raw coordinates as descriptors
        cloud = PointCloud(cloud.points, cloud.points)
    if voxel is not None:
        cloud = voxel_downsample(cloud, voxel)
    return cloud


def _cmd_pairwise(args) -> int:
    feats = [Path(p) for p in args.features] if args.features else [None, None]
    src = _load_cloud(Path(args.source), feats[0], None)
    dst = _load_cloud(Path(args.target), feats[1], None)
    cfg = replace(PipelineConfig(), temperature=args.temperature)
    result = register_pair(src, dst, cfg)
    print("motion", _fmt(result.motion.matrix.ravel()))
    print("inlier_ratio", _fmt(result.inlier_ratio))
    print("local_confidence", _fmt(result.local_confidence))
    print("converged", int(result.converged))
    return 0


def _read_edge_list(path: Path):
    pairs = []
    for raw in path.read_text(encoding="utf-8").splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tokens = line.replace("-", " ").split()
        if len(tokens) != 2:
            raise ValueError(f"edge line '{line}' is not a pair of scan indices")
        pairs.append((int(tokens[0]), int(tokens[1])))
    return tuple(pairs)


def _scan_paths(directory: Path):
    paths = sorted(directory.glob("scan_*.ply"))
    if not paths:
        raise FileNotFoundError(f"no scan_*.ply files in {directory}")
    return paths


def _cmd_multiview(args) -> int:
    directory = Path(args.directory)
    cfg = read_config(args.config) if args.config else PipelineConfig()
    if args.edges:
        cfg = replace(cfg, connectivity=_read_edge_list(Path(args.edges)))
    clouds = []
    for ply_path in _scan_paths(directory):
        feat_path = ply_path.with_suffix(".feat")
        clouds.append(
            _load_cloud(ply_path, feat_path if feat_path.exists() else None, args.voxel)
        )
    if args.pairwise_only:
        pairs = cfg.connectivity
        if pairs is None:
            pairs = tuple(
                (i, j) for i in range(len(clouds)) for j in range(i + 1, len(clouds))
            )
        registered = [(i, j, register_pair(clouds[i], clouds[j], cfg)) for i, j in pairs]
        graph = build_graph(registered, len(clouds))
        absolute = pairwise_chain_absolute(graph)
        print("mode pairwise_chain")
        print("active_edges", len(graph.active_edges()))
    else:
        result, trace = run_multiview(clouds, cfg)
        absolute = result.absolute
        print("mode multiview")
        print("rotation_eigengap", _fmt(result.rotation_eigengap))
        print("translation_rank_deficiency", result.translation_rank_deficiency)
        print("active_edges", len(result.graph.active_edges()))
        print("disconnected", int(result.disconnected))
    entries = trajectory_from_motions(absolute)
    if args.out:
        write_trajectory(entries, args.out)
        print("trajectory", args.out)
    else:
        for entry in entries:
            print(entry.i, entry.j, entry.n)
            for row in entry.matrix:
                print(_fmt(row))
    return 0


def _cmd_synth(args) -> int:
    scene = generate_scene(
        n_scans=args.scans,
        pts_per_scan=args.pts,
        noise_sigma=args.noise,
        outlier_edge_fraction=args.outliers,
        seed=args.seed,
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for idx, cloud in enumerate(scene.clouds):
        write_ply(cloud, out / f"scan_{idx:03d}.ply", binary=True)
        write_features(cloud.features, out / f"scan_{idx:03d}.feat")
    write_trajectory(trajectory_from_motions(scene.ground_truth), out / "gt.log")
    with open(out / "edges.txt", "w", encoding="utf-8") as handle:
        for i, j in scene.edges:
            handle.write(f"{i} {j}\n")
    if scene.corruptions:
        with open(out / "labels.txt", "w", encoding="utf-8") as handle:
            for i, j in scene.edges:
                handle.write(f"{i} {j} {scene.edge_labels[(i, j)]}\n")
        n = len(scene.clouds)
        corruption_entries = [
            TrajectoryEntry(i, j, n, m.matrix) for (i, j), m in scene.corruptions.items()
        ]
        write_trajectory(corruption_entries, out / "corruptions.log")
    print("scans", len(scene.clouds))
    print("edges", len(scene.edges))
    print("outlier_edges", sum(1 for label in scene.edge_labels.values() if label == "outlier"))
    print("directory", out)
    return 0


def _parse_thresholds(text: str):
    return tuple(float(tok) for tok in text.split(",") if tok.strip())


def _cmd_eval(args) -> int:
    est = read_trajectory(args.est)
    gt = read_trajectory(args.gt)
    if len(est) != len(gt):
        raise LengthMismatch(f"{len(est)} estimated motions vs {len(gt)} reference motions")
    rot_thresholds = (
        _parse_thresholds(args.rot_thresholds)
        if args.rot_thresholds
        else ROTATION_ECDF_THRESHOLDS_DEG
    )
    trans_thresholds = (
        _parse_thresholds(args.trans_thresholds)
        if args.trans_thresholds
        else TRANSLATION_ECDF_THRESHOLDS_M
    )
    rot_errors = []
    trans_errors = []
    n = len(est)
    for j in range(n):
        for i in range(j):
            rel_est = np.linalg.solve(est[j].matrix, est[i].matrix)
            rel_gt = np.linalg.solve(gt[j].matrix, gt[i].matrix)
            rot_errors.append(np.degrees(geodesic_angle(rel_est[:3, :3], rel_gt[:3, :3])))
            trans_errors.append(float(np.linalg.norm(rel_est[:3, 3] - rel_gt[:3, 3])))
    rot_errors = np.array(rot_errors)
    trans_errors = np.array(trans_errors)
    print("pairs", rot_errors.size)
    print("rot_thresholds_deg", _fmt(rot_thresholds))
    print("rot_ecdf", _fmt(ecdf(rot_errors, rot_thresholds)))
    print("trans_thresholds_m", _fmt(trans_thresholds))
    print("trans_ecdf", _fmt(ecdf(trans_errors, trans_thresholds)))
    print("rot_mean_deg", _fmt(np.mean(rot_errors)))
    print("rot_median_deg", _fmt(np.median(rot_errors)))
    print("trans_mean_m", _fmt(np.mean(trans_errors)))
    print("trans_median_m", _fmt(np.median(trans_errors)))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mvreg", description="Multi-scan rigid registration toolkit"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("pairwise", help="register a source scan onto a target scan")
    p.add_argument("source", help="source PLY file")
    p.add_argument("target", help="target PLY file")
    p.add_argument("--features", nargs=2, metavar=("SRC", "DST"),
                   help="descriptor files for source and target")
    p.add_argument("--temperature", type=float, default=PipelineConfig().temperature,
                   help="softmax temperature for correspondence weighting")
    p.set_defaults(func=_cmd_pairwise)

    p = sub.add_parser("multiview", help="register scan_*.ply files in a directory")
    p.add_argument("directory", help="directory holding scan_*.ply (+ optional .feat) files")
    p.add_argument("--config", help="key=value configuration file")
    p.add_argument("--edges", help="file with one 'i j' scan pair per line")
    p.add_argument("--out", help="write the absolute trajectory to this file")
    p.add_argument("--voxel", type=float, default=None,
                   help="voxel size for downsampling before registration")
    p.add_argument("--pairwise-only", action="store_true",
                   help="chain pairwise estimates along a spanning tree instead of synchronizing")
    p.set_defaults(func=_cmd_multiview)

    p = sub.add_parser("synth", help="generate a synthetic scene")
    p.add_argument("--scans", type=int, default=10)
    p.add_argument("--pts", type=int, default=512)
    p.add_argument("--noise", type=float, default=0.01)
    p.add_argument("--outliers", type=float, default=0.0,
                   help="fraction of scan pairs given a consistently wrong alignment")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("eval", help="compare two trajectories")
    p.add_argument("--est", required=True, help="estimated trajectory file")
    p.add_argument("--gt", required=True, help="reference trajectory file")
    p.add_argument("--rot-thresholds", help="comma separated degree thresholds")
    p.add_argument("--trans-thresholds", help="comma separated metre thresholds")
    p.set_defaults(func=_cmd_eval)
    return parser


def cli_main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 0
    try:
        return args.func(args)
    except (RegistrationError, OSError, ValueError) as exc:
        print(f"mvreg: error: {exc}", file=sys.stderr)
        return 1


def main():
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
