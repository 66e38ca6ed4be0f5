"""Dataset orchestration and report rendering.

Each scene is dispatched on its keyframe count: exactly one keyframe takes
the one-shot path (pick the best already-known scale), anything else the
few-shot path (block scale, then depth validation). Neural reconstruction
and segmentation happen upstream; their meshes and masks arrive as files.
"""
from __future__ import annotations

import csv
import io
import json
import logging
from dataclasses import asdict, dataclass, field, fields
from decimal import ROUND_HALF_EVEN, Decimal
from pathlib import Path
from typing import Optional

import numpy as np

from . import evalreg, frames, meshkit, metrology, sceneio
from .errors import InvalidInputError

log = logging.getLogger(__name__)

PATHS = ("few-shot", "one-shot", "awaiting-reconstruction")

DEFAULT_PROVENANCE = {
    "reconstruction": "NeuS2",
    "iterations": 15000,
    "mesh_resolution": [512, 512],
    "aabb_scale": 1,
    "scale": 0.15,
    "offset": [0.5, 0.5, 0.5],
}


@dataclass
class PipelineConfig:
    hamming_threshold: int = frames.DEFAULT_HAMMING_THRESHOLD
    radii: list = field(default_factory=lambda: list(frames.DEFAULT_RADII))
    blur_threshold: float = 0.0
    diameter_fraction: float = 0.05
    fine_tune_tolerance: float = metrology.DEFAULT_TOLERANCE
    samples: int = evalreg.DEFAULT_SAMPLES
    seed: int = 42
    depth_scale: float = 0.001
    exclusions: list = field(default_factory=list)
    extra_scale_candidates: list = field(default_factory=list)
    icp_max_iterations: int = evalreg.DEFAULT_MAX_ITERATIONS
    icp_convergence_eps: float = evalreg.DEFAULT_CONVERGENCE_EPS
    ingest: dict = field(default_factory=dict)
    reconstruction_provenance: dict = field(default_factory=lambda: dict(DEFAULT_PROVENANCE))

    def __post_init__(self):
        if not 0 <= self.hamming_threshold <= 64:
            raise InvalidInputError("hamming_threshold must lie in [0, 64]")
        if not self.radii or any(r % 2 or not 0 <= r <= 30 for r in self.radii):
            raise InvalidInputError("radii must be even integers in [0, 30]")
        if not 0 <= self.diameter_fraction <= 1:
            raise InvalidInputError("diameter_fraction must lie in [0, 1]")
        if not 0 < self.fine_tune_tolerance <= 1:
            raise InvalidInputError("fine_tune_tolerance must lie in (0, 1]")
        if self.samples < 1:
            raise InvalidInputError("samples must be >= 1")
        if not self.depth_scale > 0:
            raise InvalidInputError("depth_scale must be positive")

    @classmethod
    def from_dict(cls, data):
        data = dict(data or {})
        unknown = set(data) - {f.name for f in fields(cls)}
        if unknown:
            raise InvalidInputError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def from_json(cls, path):
        return cls.from_dict(json.loads(Path(path).read_text()))

    def to_dict(self):
        return asdict(self)

    def ingest_config(self):
        cfg = sceneio.IngestConfig.from_dict(self.ingest)
        cfg.depth_scale = self.depth_scale
        return cfg


@dataclass
class SceneRow:
    scene_id: int
    label: str
    difficulty: str
    path: str
    excluded: bool = False
    n_frames: int = 0
    n_keyframes: int = 0
    retention_ratio: Optional[float] = None
    s_initial: Optional[float] = None
    s_fine: Optional[float] = None
    scale_method: Optional[str] = None
    ppu: Optional[float] = None
    reference_extent_px: Optional[list] = None
    food_extent_px: Optional[list] = None
    food_height: Optional[float] = None
    potential_volume: Optional[float] = None
    unitless_volume: Optional[float] = None
    predicted_volume: Optional[float] = None
    gt_volume: Optional[float] = None
    chamfer_with_transform: Optional[float] = None
    chamfer_without_transform: Optional[float] = None
    icp_rmse: Optional[float] = None
    boundary_edges: Optional[int] = None
    diagnostics: list = field(default_factory=list)

    @property
    def status(self):
        return "excluded" if self.excluded else self.path

    def to_dict(self):
        d = asdict(self)
        d["status"] = self.status
        return d

    @classmethod
    def from_dict(cls, data):
        data = {k: v for k, v in data.items() if k != "status"}
        return cls(**data)


@dataclass
class VolumeReport:
    rows: list
    aggregates: dict
    config: dict = field(default_factory=dict)

    @classmethod
    def from_rows(cls, rows, config=None):
        rows = sorted(rows, key=lambda r: r.scene_id)
        return cls(rows, aggregate(rows), dict(config or {}))

    def to_dict(self):
        return {
            "rows": [r.to_dict() for r in self.rows],
            "aggregates": self.aggregates,
            "config": self.config,
        }

    @classmethod
    def from_dict(cls, data):
        return cls([SceneRow.from_dict(r) for r in data["rows"]], data["aggregates"], data.get("config", {}))

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def aggregate(rows):
    """MAPE and Chamfer sum/mean over included rows that carry the values."""
    included = [r for r in rows if not r.excluded]
    vol = [r for r in included if r.predicted_volume is not None and r.gt_volume is not None]
    ch = [r for r in included if r.chamfer_with_transform is not None and r.chamfer_without_transform is not None]
    out = {
        "n_scenes": len(rows),
        "n_included": len(included),
        "n_volume_pairs": len(vol),
        "mape": None,
        "n_chamfer": len(ch),
        "chamfer_with_sum": None,
        "chamfer_with_mean": None,
        "chamfer_without_sum": None,
        "chamfer_without_mean": None,
        "diagnostics": [],
    }
    if vol:
        out["mape"] = evalreg.mape([r.gt_volume for r in vol], [r.predicted_volume for r in vol])
    if ch:
        w = [r.chamfer_with_transform for r in ch]
        wo = [r.chamfer_without_transform for r in ch]
        out["chamfer_with_sum"] = float(np.sum(w))
        out["chamfer_with_mean"] = float(np.mean(w))
        out["chamfer_without_sum"] = float(np.sum(wo))
        out["chamfer_without_mean"] = float(np.mean(wo))
    if not vol and not ch:
        out["diagnostics"].append("no evaluable scenes")
    return out


def _overhead_validation(scene, row):
    idx = scene.overhead_index
    meta = scene.metadata
    missing = [name for name, ok in (
        ("depth", idx in scene.depth_maps),
        ("food mask", idx in scene.food_masks),
        ("reference mask", idx in scene.reference_masks),
        ("reference dimensions", meta.reference_real_w_m and meta.reference_real_l_m),
    ) if not ok]
    if missing:
        row.diagnostics.append(f"depth validation skipped, missing {', '.join(missing)} for frame {idx}")
        return None
    try:
        val = metrology.depth_validation(scene.depth_maps[idx], scene.food_masks[idx],
                                         scene.reference_masks[idx], meta.reference_real_w_m,
                                         meta.reference_real_l_m)
    except InvalidInputError as exc:
        row.diagnostics.append(f"depth validation failed: {exc}")
        return None
    row.ppu = val["ppu"]
    row.reference_extent_px = list(val["reference_extent_px"])
    row.food_extent_px = list(val["food_extent_px"])
    row.food_height = val["food_height"]
    row.potential_volume = val["potential_volume"]
    if val["potential_volume"] is None:
        row.diagnostics.append("food and reference depths coincide; no potential volume")
    return val


def _few_shot_scale(scene, row, val, unitless_volume, config):
    blocks = scene.metadata.block_lengths
    pot = val["potential_volume"] if val else None
    if blocks:
        est = metrology.estimate_scale(blocks, unitless_volume, scene.metadata.block_edge_m,
                                       validation=val, tolerance=config.fine_tune_tolerance)
        row.s_initial = est.s_initial
        row.scale_method = est.method
        return est.s_fine
    if pot is not None:
        row.diagnostics.append("no block lengths; scale from potential volume alone")
        row.scale_method = "depth-only"
        return float(np.cbrt(pot / unitless_volume))
    row.diagnostics.append("no block lengths and no potential volume; cannot scale")
    return None


def _one_shot_scale(scene, row, val, unitless_volume, candidates):
    pot = val["potential_volume"] if val else None
    cands = [c for c in (candidates or []) if c and c > 0]
    blocks = scene.metadata.block_lengths
    if cands and pot is not None:
        row.scale_method = "one-shot-candidate"
        return metrology.select_scale_one_shot(cands, unitless_volume, pot)
    if blocks:
        row.diagnostics.append("one-shot without candidates or potential volume; using block scale")
        s = metrology.scale_from_reference_blocks(blocks, scene.metadata.block_edge_m)
        row.s_initial = s
        row.scale_method = "blocks"
        return s
    if pot is not None:
        row.diagnostics.append("one-shot without candidates; scale from potential volume alone")
        row.scale_method = "depth-only"
        return float(np.cbrt(pot / unitless_volume))
    row.diagnostics.append("one-shot without candidates, blocks or potential volume; cannot scale")
    return None


def run_scene(scene, config=None, candidates=None, selection=None):
    """Process one scene into a :class:`SceneRow` (volumes in m^3, lengths in m)."""
    config = config or PipelineConfig()
    excluded = bool(scene.metadata.excluded or scene.scene_id in set(config.exclusions))
    if selection is None:
        selection = frames.select_keyframes(scene.frames, config.hamming_threshold,
                                            config.blur_threshold, config.radii)
    k = len(selection.kept)
    path = "one-shot" if k == 1 else "few-shot"
    if "food" not in scene.meshes:
        path = "awaiting-reconstruction"
    row = SceneRow(scene.scene_id, scene.label, scene.difficulty, path, excluded,
                   n_frames=len(scene.frames), n_keyframes=k,
                   retention_ratio=selection.retention_ratio)
    if selection.empty:
        row.diagnostics.append("no frame passed the blur gate")

    val = _overhead_validation(scene, row)
    if scene.metadata.gt_volume_m3 is not None:
        row.gt_volume = float(scene.metadata.gt_volume_m3)
    gt_mesh = meshkit.load_mesh(scene.meshes["gt"], unit="meters") if "gt" in scene.meshes else None
    if gt_mesh is not None and row.gt_volume is None:
        row.gt_volume = meshkit.mesh_volume(gt_mesh)

    if path == "awaiting-reconstruction":
        row.diagnostics.append("no food mesh")
        return row

    raw = meshkit.load_mesh(scene.meshes["food"])
    clean = meshkit.remove_isolated_pieces(raw, config.diameter_fraction)
    row.boundary_edges = meshkit.boundary_edge_count(clean)
    if row.boundary_edges:
        row.diagnostics.append(f"food mesh is not watertight ({row.boundary_edges} boundary edges)")
    v_u = meshkit.mesh_volume(clean)
    row.unitless_volume = v_u
    if not v_u > 0:
        row.diagnostics.append("cleaned food mesh encloses no volume")
        return row

    if path == "one-shot":
        s = _one_shot_scale(scene, row, val, v_u, candidates)
    else:
        s = _few_shot_scale(scene, row, val, v_u, config)
    if s is None:
        return row
    row.s_fine = s
    scaled = meshkit.scale_mesh(clean, s, metric=True)
    row.predicted_volume = meshkit.mesh_volume(scaled)

    if gt_mesh is not None and not gt_mesh.is_empty():
        res = evalreg.evaluate_pair(scaled, gt_mesh, config.samples, config.seed,
                                    max_iterations=config.icp_max_iterations,
                                    convergence_eps=config.icp_convergence_eps)
        row.chamfer_with_transform = res.chamfer_with_transform
        row.chamfer_without_transform = res.chamfer_without_transform
        row.icp_rmse = res.icp_rmse
        if not res.consistent:
            row.diagnostics.append("registration increased the Chamfer distance")
    return row


def _scenes_from(source, config):
    if isinstance(source, sceneio.DatasetManifest):
        ingest = config.ingest_config()
        return [sceneio.load_scene(s["path"], ingest) for s in source.scenes]
    if isinstance(source, (str, Path)):
        return sceneio.load_dataset(source, config.ingest_config())
    return list(source)


def run_dataset(source, config=None):
    """Run every scene and assemble a :class:`VolumeReport`.

    ``source`` is a :class:`~voleta.sceneio.DatasetManifest`, a dataset root
    directory, or an iterable of scene records. Few-shot scenes run first;
    their fine scales (plus configured extras) form the candidate pool for
    one-shot scenes.
    """
    config = config or PipelineConfig()
    scenes = sorted(_scenes_from(source, config), key=lambda s: s.scene_id)
    selections = {s.scene_id: frames.select_keyframes(s.frames, config.hamming_threshold,
                                                      config.blur_threshold, config.radii)
                  for s in scenes}
    rows = {}
    deferred = []
    for scene in scenes:
        sel = selections[scene.scene_id]
        if len(sel.kept) == 1 and "food" in scene.meshes:
            deferred.append(scene)
            continue
        rows[scene.scene_id] = run_scene(scene, config, selection=sel)
    # excluded scenes still contribute candidates so toggling exclusion leaves other rows alone
    pool = [r.s_fine for r in rows.values() if r.path == "few-shot" and r.s_fine is not None]
    pool += [float(c) for c in config.extra_scale_candidates]
    for scene in deferred:
        rows[scene.scene_id] = run_scene(scene, config, candidates=pool, selection=selections[scene.scene_id])
    report = VolumeReport.from_rows(rows.values(), config.to_dict())
    for r in report.rows:
        log.info("scene %s: %s", r.scene_id, r.status)
    return report


def all_scenes_produced(report):
    """True when every non-excluded row has a predicted volume."""
    return all(r.predicted_volume is not None for r in report.rows if not r.excluded)


CSV_COLUMNS = [
    "level", "id", "label", "s_fine", "ppu_cm_per_px", "ref_w_px", "ref_l_px",
    "food_w_px", "food_l_px", "food_h_cm", "potential_volume_cm3",
    "predicted_volume_cm3", "gt_volume_cm3", "chamfer_with_e3", "chamfer_without_e3",
    "status",
]


def fixed(value, places):
    """Round-half-even decimal rendering of a float's shortest repr."""
    if value is None:
        return ""
    q = Decimal(1).scaleb(-places)
    return str(Decimal(repr(float(value))).quantize(q, rounding=ROUND_HALF_EVEN))


def _csv_row(r):
    ref = r.reference_extent_px or [None, None]
    food = r.food_extent_px or [None, None]
    m3_to_cm3 = 1e6
    return [
        r.difficulty,
        r.scene_id,
        r.label,
        "" if r.s_fine is None else "%.10g" % r.s_fine,
        fixed(None if r.ppu is None else r.ppu * 100.0, 5),
        "" if ref[0] is None else ref[0],
        "" if ref[1] is None else ref[1],
        "" if food[0] is None else food[0],
        "" if food[1] is None else food[1],
        fixed(None if r.food_height is None else r.food_height * 100.0, 3),
        fixed(None if r.potential_volume is None else r.potential_volume * m3_to_cm3, 2),
        fixed(None if r.predicted_volume is None else r.predicted_volume * m3_to_cm3, 2),
        fixed(None if r.gt_volume is None else r.gt_volume * m3_to_cm3, 2),
        fixed(None if r.chamfer_with_transform is None else r.chamfer_with_transform * 1e3, 2),
        fixed(None if r.chamfer_without_transform is None else r.chamfer_without_transform * 1e3, 2),
        r.status,
    ]


def report_csv(report):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for r in report.rows:
        writer.writerow(_csv_row(r))
    return buf.getvalue()


def emit_report(report, fmt, path):
    """Write ``report`` as ``"csv"`` (rounded for reading) or ``"json"`` (full precision)."""
    if fmt == "csv":
        text = report_csv(report)
    elif fmt == "json":
        text = report.to_json()
    else:
        raise InvalidInputError(f"unknown report format {fmt!r}")
    with open(path, "w", newline="") as fh:
        fh.write(text)


def load_report(path):
    return VolumeReport.from_dict(json.loads(Path(path).read_text()))
