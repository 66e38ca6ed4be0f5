"""Synthetic scenes with a known answer.

The food is a unitless icosphere (plus a tiny satellite piece for the
cleanup step). The overhead frame carries a rectangular reference board, a
square food footprint and a two-level depth map chosen so the depth-derived
box volume agrees with the block-derived scale.
"""
from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np
from PIL import Image

from .meshkit import box, concatenate, icosphere, save_mesh, scale_mesh, translate_mesh

FRAME_W, FRAME_H = 200, 160
PPU = 0.001  # m/px at the reference plane
REF_PX = (80, 100)  # (w, l) of the board in pixels
REF_ORIGIN = (20, 10)  # (row, col)
FOOD_ORIGIN = (40, 120)
TABLE_DEPTH_M = 0.600


def write_synthetic_scene(directory, scene_id=1, n_frames=5, scale=0.03, food_radius=1.0,
                          subdivisions=4, potential_factor=1.0, label="sphere", with_gt=True,
                          gt_offset=(0.01, -0.005, 0.002), excluded=False, seed=0, identical_frames=False,
                          with_food_mesh=True):
    """Write a scene directory and return the values it was built from.

    ``scale`` is the true meters-per-unit factor; block lengths are written
    so that the 12 mm chessboard edge recovers it. ``potential_factor``
    inflates the depth-derived food height to push the box volume away
    from the truth.
    """
    root = Path(directory)
    for sub in ("rgb", "depth", "mask_food", "mask_ref", "meshes"):
        (root / sub).mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)

    base = rng.integers(0, 256, size=(FRAME_H, FRAME_W, 3), dtype=np.uint8)
    for i in range(n_frames):
        img = base if identical_frames else rng.integers(0, 256, size=(FRAME_H, FRAME_W, 3), dtype=np.uint8)
        Image.fromarray(img).save(root / "rgb" / f"frame_{i:04d}.png")

    sphere = icosphere(subdivisions, food_radius, name="food")
    true_volume_m3 = 4.0 / 3.0 * math.pi * (scale * food_radius) ** 3

    food_px = int(round(2 * scale * food_radius / PPU))
    # box height that makes the footprint box hold the sphere's volume
    height_m = potential_factor * true_volume_m3 / (food_px * PPU) ** 2
    depth_raw = np.zeros((FRAME_H, FRAME_W), dtype=np.uint16)
    ref = np.zeros((FRAME_H, FRAME_W), dtype=np.uint8)
    food = np.zeros((FRAME_H, FRAME_W), dtype=np.uint8)
    r0, c0 = REF_ORIGIN
    ref[r0:r0 + REF_PX[1], c0:c0 + REF_PX[0]] = 255
    f0, g0 = FOOD_ORIGIN
    food[f0:f0 + food_px, g0:g0 + food_px] = 255
    depth_raw[ref > 0] = round(TABLE_DEPTH_M * 1e4)
    depth_raw[food > 0] = round((TABLE_DEPTH_M - height_m) * 1e4)
    Image.fromarray(depth_raw).save(root / "depth" / "frame_0000.png")
    Image.fromarray(ref).save(root / "mask_ref" / "frame_0000.png")
    Image.fromarray(food).save(root / "mask_food" / "frame_0000.png")

    if with_food_mesh:
        satellite = box((0.01, 0.01, 0.01), origin=(1.5 * food_radius, 0.0, 0.0))
        save_mesh(concatenate([sphere, satellite], name="food"), root / "meshes" / "food.ply")
    if with_gt:
        gt = translate_mesh(scale_mesh(sphere, scale, metric=True), gt_offset)
        save_mesh(gt, root / "meshes" / "gt.ply", binary=True)

    block_units = 0.012 / scale
    (root / "blocks.json").write_text(json.dumps({"block_lengths": [block_units] * 3}))
    meta = {
        "scene_id": scene_id,
        "label": label,
        "reference_real_w_m": REF_PX[0] * PPU,
        "reference_real_l_m": REF_PX[1] * PPU,
        "block_edge_m": 0.012,
        "excluded": excluded,
        "gt_volume_m3": true_volume_m3 if with_gt else None,
    }
    (root / "metadata.json").write_text(json.dumps(meta, indent=2))
    return {
        "scale": scale,
        "true_volume_m3": true_volume_m3,
        "food_px": food_px,
        "height_m": height_m,
        "block_units": block_units,
        "depth_scale": 1e-4,
    }
