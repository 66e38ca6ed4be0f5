"""``voleta`` command line: the full run plus each stage on its own."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import evalreg, frames, meshkit, metrology, pipeline, sceneio
from .errors import VoletaError


def _write_json(data, out):
    text = json.dumps(data, indent=2, sort_keys=True) + "\n"
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_keyframes(args):
    files = sceneio.list_files(Path(args.input), sceneio.RGB_EXTS)
    if not files:
        raise VoletaError(f"no PNG/JPEG frames in {args.input}")
    seq = [frames.load_frame(p, i) for i, p in enumerate(files.values())]
    sel = frames.select_keyframes(seq, args.hamming, args.blur_threshold, frames.parse_radii(args.radii))
    _write_json(sel.to_dict(), args.out)
    return 0


def cmd_clean_mesh(args):
    mesh = meshkit.load_mesh(args.inp)
    clean = meshkit.remove_isolated_pieces(mesh, args.diameter_frac)
    meshkit.save_mesh(clean, args.out, binary=args.binary)
    print(f"kept {clean.n_triangles} of {mesh.n_triangles} triangles")
    return 0


def cmd_volume(args):
    mesh = meshkit.load_mesh(args.inp)
    if args.scale is not None:
        mesh = meshkit.scale_mesh(mesh, args.scale, metric=True)
    edges = meshkit.boundary_edge_count(mesh)
    if edges:
        logging.warning("mesh is not watertight: %d boundary edges", edges)
    print(pipeline.fixed(meshkit.mesh_volume(mesh) * 1e6, 2))
    return 0


def cmd_scale(args):
    ingest = sceneio.IngestConfig(depth_scale=args.depth_scale)
    scene = sceneio.load_scene(args.scene, ingest)
    blocks = sceneio.read_blocks(Path(args.blocks))
    mesh = meshkit.remove_isolated_pieces(meshkit.load_mesh(args.mesh), args.diameter_frac)
    v_u = meshkit.mesh_volume(mesh)
    meta = scene.metadata
    idx = scene.overhead_index
    validation = None
    if (idx in scene.depth_maps and idx in scene.food_masks and idx in scene.reference_masks
            and meta.reference_real_w_m and meta.reference_real_l_m):
        validation = metrology.depth_validation(scene.depth_maps[idx], scene.food_masks[idx],
                                                scene.reference_masks[idx], meta.reference_real_w_m,
                                                meta.reference_real_l_m)
    else:
        logging.warning("overhead frame %s lacks depth/masks/reference size; block scale only", idx)
    est = metrology.estimate_scale(blocks, v_u, meta.block_edge_m, validation, args.tolerance)
    _write_json(est.to_dict(), args.out)
    return 0


def cmd_evaluate(args):
    ours = meshkit.load_mesh(args.ours, unit="meters")
    gt = meshkit.load_mesh(args.gt, unit="meters")
    res = evalreg.evaluate_pair(ours, gt, args.samples, args.seed, max_iterations=args.max_iterations,
                                convergence_eps=args.eps)
    _write_json(res.to_dict(), args.out)
    return 0


def _fmt_for(path, explicit):
    if explicit:
        return explicit
    return "csv" if str(path).lower().endswith(".csv") else "json"


def cmd_run(args):
    config = pipeline.PipelineConfig.from_json(args.config) if args.config else pipeline.PipelineConfig()
    report = pipeline.run_dataset(args.dataset, config)
    pipeline.emit_report(report, _fmt_for(args.out, args.format), args.out)
    if args.manifest:
        scenes = sceneio.load_dataset(args.dataset, config.ingest_config())
        sceneio.build_manifest(args.dataset, scenes).save(args.manifest)
    return 0 if pipeline.all_scenes_produced(report) else 1


def cmd_report(args):
    report = pipeline.load_report(args.inp)
    pipeline.emit_report(report, _fmt_for(args.out, args.format), args.out)
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="voleta", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    k = sub.add_parser("keyframes", help="select keyframes from a folder of frames")
    k.add_argument("--input", required=True)
    k.add_argument("--hamming", type=int, default=frames.DEFAULT_HAMMING_THRESHOLD)
    k.add_argument("--blur-threshold", type=float, default=0.0)
    k.add_argument("--radii", default="0:30:2")
    k.add_argument("--out")
    k.set_defaults(func=cmd_keyframes)

    c = sub.add_parser("clean-mesh", help="remove small isolated components")
    c.add_argument("--in", dest="inp", required=True)
    c.add_argument("--out", required=True)
    c.add_argument("--diameter-frac", type=float, default=0.05)
    c.add_argument("--binary", action="store_true", help="write binary little-endian PLY")
    c.set_defaults(func=cmd_clean_mesh)

    v = sub.add_parser("volume", help="print enclosed volume in cm^3 (mesh in meters after --scale)")
    v.add_argument("--in", dest="inp", required=True)
    v.add_argument("--scale", type=float)
    v.set_defaults(func=cmd_volume)

    s = sub.add_parser("scale", help="estimate the metric scale of a food mesh")
    s.add_argument("--scene", required=True)
    s.add_argument("--blocks", required=True)
    s.add_argument("--mesh", required=True)
    s.add_argument("--tolerance", type=float, default=metrology.DEFAULT_TOLERANCE)
    s.add_argument("--diameter-frac", type=float, default=0.05)
    s.add_argument("--depth-scale", type=float, default=0.001)
    s.add_argument("--out")
    s.set_defaults(func=cmd_scale)

    e = sub.add_parser("evaluate", help="Chamfer distance with and without ICP")
    e.add_argument("--ours", required=True)
    e.add_argument("--gt", required=True)
    e.add_argument("--samples", type=int, default=evalreg.DEFAULT_SAMPLES)
    e.add_argument("--seed", type=int, default=42)
    e.add_argument("--max-iterations", type=int, default=evalreg.DEFAULT_MAX_ITERATIONS)
    e.add_argument("--eps", type=float, default=evalreg.DEFAULT_CONVERGENCE_EPS)
    e.add_argument("--out")
    e.set_defaults(func=cmd_evaluate)

    r = sub.add_parser("run", help="run the whole pipeline over a dataset")
    r.add_argument("--dataset", required=True)
    r.add_argument("--config")
    r.add_argument("--out", required=True)
    r.add_argument("--format", choices=("csv", "json"))
    r.add_argument("--manifest", help="also write the dataset manifest here")
    r.set_defaults(func=cmd_run)

    rep = sub.add_parser("report", help="re-render a JSON report")
    rep.add_argument("--in", dest="inp", required=True)
    rep.add_argument("--out", required=True)
    rep.add_argument("--format", choices=("csv", "json"))
    rep.set_defaults(func=cmd_report)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (VoletaError, OSError) as exc:
        print(f"voleta: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
