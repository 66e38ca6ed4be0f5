"""Scene ingestion for RGBD food captures.

Canonical layout of one scene directory::

    <scene>/rgb/*.png|jpg
    <scene>/depth/*.png          16-bit, raw * depth_scale = meters
    <scene>/mask_food/*.png
    <scene>/mask_ref/*.png
    <scene>/meshes/{food,ref,gt}.ply|obj
    <scene>/metadata.json
    <scene>/blocks.json          optional measured block edges (mesh units)

Frames, depth maps and masks pair up by file stem. Other layouts can be
mapped through :class:`IngestConfig`.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
from PIL import Image

from .errors import EmptySceneError, ImageFormatError, IntegrityError, InvalidInputError
from .frames import Frame, load_frame
from .metrology import DEFAULT_BLOCK_EDGE_M, BinaryMask, DepthMap, mask_extent

RGB_EXTS = (".png", ".jpg", ".jpeg")
MESH_EXTS = (".ply", ".obj")
MASK_THRESHOLD = 127


@dataclass
class IngestConfig:
    rgb_dir: str = "rgb"
    depth_dir: str = "depth"
    food_mask_dir: str = "mask_food"
    ref_mask_dir: str = "mask_ref"
    mesh_dir: str = "meshes"
    metadata_file: str = "metadata.json"
    blocks_file: str = "blocks.json"
    depth_scale: float = 0.001

    @classmethod
    def from_dict(cls, data):
        known = {k: v for k, v in (data or {}).items() if k in cls.__dataclass_fields__}
        return cls(**known)


@dataclass
class SceneMetadata:
    label: str = ""
    reference_real_w_m: Optional[float] = None
    reference_real_l_m: Optional[float] = None
    block_edge_m: float = DEFAULT_BLOCK_EDGE_M
    excluded: bool = False
    overhead_index: Optional[int] = None
    scene_id: Optional[int] = None
    difficulty: Optional[str] = None
    block_lengths: Optional[list] = None
    gt_volume_m3: Optional[float] = None

    @classmethod
    def from_dict(cls, data):
        known = {k: v for k, v in (data or {}).items() if k in cls.__dataclass_fields__}
        return cls(**known)


@dataclass
class SceneRecord:
    scene_id: int
    label: str
    difficulty: str
    frames: list
    depth_maps: dict
    food_masks: dict
    reference_masks: dict
    overhead_index: int
    meshes: dict
    metadata: SceneMetadata
    root: Optional[Path] = None

    @property
    def one_shot(self):
        return len(self.frames) == 1

    def frame_by_index(self, index):
        for f in self.frames:
            if f.index == index:
                return f
        raise KeyError(index)

    def summary(self):
        return {
            "scene_id": self.scene_id,
            "label": self.label,
            "difficulty": self.difficulty,
            "n_frames": len(self.frames),
            "n_depth": len(self.depth_maps),
            "n_food_masks": len(self.food_masks),
            "n_reference_masks": len(self.reference_masks),
            "overhead_index": self.overhead_index,
            "meshes": {k: str(v) for k, v in sorted(self.meshes.items())},
            "excluded": self.metadata.excluded,
            "path": str(self.root) if self.root is not None else None,
        }


@dataclass
class DatasetManifest:
    root: str
    scenes: list = field(default_factory=list)

    def difficulty_counts(self):
        counts = {"easy": 0, "medium": 0, "hard": 0}
        for s in self.scenes:
            counts[s["difficulty"]] = counts.get(s["difficulty"], 0) + 1
        return counts

    def to_dict(self):
        return {"root": self.root, "scenes": self.scenes}

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")

    @classmethod
    def load(cls, path):
        data = json.loads(Path(path).read_text())
        return cls(root=data["root"], scenes=data["scenes"])


def natural_key(text):
    return [int(tok) if tok.isdigit() else tok.lower() for tok in re.split(r"(\d+)", text)]


def difficulty_for(n_frames):
    if n_frames >= 100:
        return "easy"
    if n_frames >= 2:
        return "medium"
    return "hard"


def load_depth(path, depth_scale=0.001):
    """16-bit grayscale PNG to a :class:`DepthMap` in meters; raw 0 stays 0."""
    with Image.open(path) as im:
        if im.mode not in ("I;16", "I;16L", "I;16B", "I"):
            raise ImageFormatError(f"{path}: expected a 16-bit grayscale depth image, got mode {im.mode}")
        raw = np.asarray(im).astype(np.float64)
    if raw.ndim != 2:
        raise ImageFormatError(f"{path}: depth image must be single-channel")
    return DepthMap(raw * depth_scale)


def load_mask(path, kind="food"):
    try:
        with Image.open(path) as im:
            if im.mode == "P":
                im = im.convert("L")
            elif im.mode not in ("L", "1"):
                im = im.convert("L")
            arr = np.asarray(im)
    except OSError as exc:
        raise OSError(f"cannot read mask {path}: {exc}") from exc
    if arr.dtype == bool:
        return BinaryMask(arr, kind)
    return BinaryMask(arr > MASK_THRESHOLD, kind)


def apply_mask_rgba(frame, mask):
    """RGBA raster: RGB kept and alpha 255 under the mask, transparent black elsewhere."""
    px = frame.pixels if isinstance(frame, Frame) else np.asarray(frame, dtype=np.uint8)
    bits = mask.bits if isinstance(mask, BinaryMask) else np.asarray(mask, dtype=bool)
    if px.shape[:2] != bits.shape:
        raise IntegrityError(f"frame {px.shape[1]}x{px.shape[0]} and mask {bits.shape[1]}x{bits.shape[0]} differ")
    out = np.zeros(px.shape[:2] + (4,), dtype=np.uint8)
    out[bits, :3] = px[bits, :3]
    out[bits, 3] = 255
    return out


def list_files(directory, exts):
    if not directory.is_dir():
        return {}
    found = [p for p in directory.iterdir() if p.is_file() and p.suffix.lower() in exts]
    return {p.stem: p for p in sorted(found, key=lambda p: natural_key(p.name))}


def _scene_id(root, meta):
    if meta.scene_id is not None:
        return int(meta.scene_id)
    digits = re.findall(r"\d+", root.name)
    if not digits:
        raise InvalidInputError(f"{root}: no scene_id in metadata and none in the directory name")
    return int(digits[0])


def read_blocks(path):
    data = json.loads(path.read_text())
    if isinstance(data, dict):
        data = data.get("block_lengths", [])
    return [float(x) for x in data]


def load_scene(directory, config=None):
    config = config or IngestConfig()
    root = Path(directory)
    meta_path = root / config.metadata_file
    meta = SceneMetadata.from_dict(json.loads(meta_path.read_text())) if meta_path.exists() else SceneMetadata()
    blocks_path = root / config.blocks_file
    if meta.block_lengths is None and blocks_path.exists():
        meta.block_lengths = read_blocks(blocks_path)

    rgb_files = list_files(root / config.rgb_dir, RGB_EXTS)
    if not rgb_files:
        raise EmptySceneError(f"{root}: no RGB frames in {config.rgb_dir}/")
    frames = [load_frame(p, i) for i, p in enumerate(rgb_files.values())]
    by_stem = {f.id: f for f in frames}

    depth_maps, food_masks, ref_masks = {}, {}, {}
    for stem, path in list_files(root / config.depth_dir, (".png",)).items():
        if stem in by_stem:
            f = by_stem[stem]
            d = load_depth(path, config.depth_scale)
            _check_dims(f, d.width, d.height, rgb_files[stem], path)
            depth_maps[f.index] = d
    for subdir, kind, target in ((config.food_mask_dir, "food", food_masks),
                                 (config.ref_mask_dir, "reference", ref_masks)):
        for stem, path in list_files(root / subdir, (".png",)).items():
            if stem in by_stem:
                f = by_stem[stem]
                m = load_mask(path, kind)
                _check_dims(f, m.width, m.height, rgb_files[stem], path)
                target[f.index] = m

    meshes = {}
    for role in ("food", "ref", "gt"):
        for ext in MESH_EXTS:
            p = root / config.mesh_dir / f"{role}{ext}"
            if p.exists():
                meshes[role] = p
                break

    if meta.overhead_index is not None:
        overhead = int(meta.overhead_index)
        if overhead not in {f.index for f in frames}:
            raise InvalidInputError(f"{root}: overhead_index {overhead} is not a frame index")
    else:
        overhead = _default_overhead(frames, ref_masks)

    return SceneRecord(
        scene_id=_scene_id(root, meta),
        label=meta.label or root.name,
        difficulty=meta.difficulty or difficulty_for(len(frames)),
        frames=frames,
        depth_maps=depth_maps,
        food_masks=food_masks,
        reference_masks=ref_masks,
        overhead_index=overhead,
        meshes=meshes,
        metadata=meta,
        root=root,
    )


def _check_dims(frame, w, h, frame_path, other_path):
    if (w, h) != (frame.width, frame.height):
        raise IntegrityError(
            f"{other_path} is {w}x{h} but its frame {frame_path} is {frame.width}x{frame.height}")


def _default_overhead(frames, ref_masks):
    # largest reference bounding box ~ most fronto-parallel view
    best, best_area = frames[0].index, -1
    for f in frames:
        m = ref_masks.get(f.index)
        if m is None or not m.usable:
            continue
        _, _, (r0, c0, r1, c1) = mask_extent(m)
        area = (r1 - r0) * (c1 - c0)
        if area > best_area:
            best, best_area = f.index, area
    return best


def load_dataset(root, config=None):
    """Load every scene directory under ``root`` (those holding an RGB folder)."""
    config = config or IngestConfig()
    root = Path(root)
    dirs = [p for p in root.iterdir() if p.is_dir() and (p / config.rgb_dir).is_dir()]
    scenes = [load_scene(d, config) for d in sorted(dirs, key=lambda p: natural_key(p.name))]
    ids = [s.scene_id for s in scenes]
    if len(set(ids)) != len(ids):
        raise IntegrityError(f"duplicate scene ids under {root}: {sorted(ids)}")
    return sorted(scenes, key=lambda s: s.scene_id)


def build_manifest(root, scenes):
    return DatasetManifest(root=str(root), scenes=[s.summary() for s in scenes])

