"""Metric scale recovery for unitless reconstructions.

The reconstruction of the reference chessboard gives a first scale from
measured block edges. An overhead RGBD view then gives an independent
bounding-box volume for the food, which either confirms that scale or
replaces it with the cube-root correction that hits the box volume.

Lengths are meters, pixel extents are pixel counts, and the pixel pitch
(``ppu``) is meters per pixel.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from .errors import InvalidInputError

DEFAULT_BLOCK_EDGE_M = 0.012
DEFAULT_TOLERANCE = 0.25


@dataclass(frozen=True)
class BinaryMask:
    bits: np.ndarray
    kind: str = "food"

    def __post_init__(self):
        b = np.asarray(self.bits, dtype=bool)
        if b.ndim != 2:
            raise InvalidInputError(f"mask must be 2-D, got shape {b.shape}")
        object.__setattr__(self, "bits", b)

    @property
    def height(self):
        return self.bits.shape[0]

    @property
    def width(self):
        return self.bits.shape[1]

    @property
    def usable(self):
        return bool(self.bits.any())


@dataclass(frozen=True)
class DepthMap:
    """Depth in meters; 0 marks pixels with no return."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 2:
            raise InvalidInputError(f"depth map must be 2-D, got shape {v.shape}")
        if not np.all(np.isfinite(v)) or np.any(v < 0):
            raise InvalidInputError("depth values must be finite and nonnegative")
        object.__setattr__(self, "values", v)

    @property
    def height(self):
        return self.values.shape[0]

    @property
    def width(self):
        return self.values.shape[1]


@dataclass(frozen=True)
class MaskExtent:
    w: int
    l: int
    bbox: tuple  # (row0, col0, row1, col1), end-exclusive

    def __iter__(self):
        return iter((self.w, self.l, self.bbox))


@dataclass
class ScaleEstimate:
    s_initial: float
    s_fine: float
    l_avg: float
    method: str = "blocks"
    ppu: Optional[float] = None
    potential_volume: Optional[float] = None
    unitless_volume: Optional[float] = None
    food_extent_px: Optional[tuple] = None
    reference_extent_px: Optional[tuple] = None
    food_height: Optional[float] = None
    d_reference: Optional[float] = None
    d_food: Optional[float] = None

    def __post_init__(self):
        if not (self.s_initial > 0 and self.s_fine > 0):
            raise InvalidInputError("scale factors must be positive")
        if self.ppu is not None and not self.ppu > 0:
            raise InvalidInputError("ppu must be positive")

    def to_dict(self):
        d = asdict(self)
        for key in ("food_extent_px", "reference_extent_px"):
            if d[key] is not None:
                d[key] = list(d[key])
        return d


def _bits(mask):
    return mask.bits if isinstance(mask, BinaryMask) else np.asarray(mask, dtype=bool)


def scale_from_reference_blocks(block_lengths, l_real=DEFAULT_BLOCK_EDGE_M):
    """Meters per mesh unit: ``l_real`` over the mean measured block edge."""
    lengths = np.asarray(block_lengths, dtype=np.float64).ravel()
    if lengths.size == 0:
        raise InvalidInputError("block_lengths is empty")
    if np.any(~(lengths > 0)):
        raise InvalidInputError("block lengths must be positive")
    if not l_real > 0:
        raise InvalidInputError("l_real must be positive")
    return float(l_real / lengths.mean())


def mask_extent(mask):
    """Tight bounding box of the set pixels.

    Returns ``(w, l, bbox)`` with ``w <= l``; ``bbox`` is
    ``(row0, col0, row1, col1)`` in the mask's own orientation.
    """
    bits = _bits(mask)
    rows = np.flatnonzero(bits.any(axis=1))
    cols = np.flatnonzero(bits.any(axis=0))
    if rows.size == 0:
        raise InvalidInputError("mask has no set pixels")
    r0, r1 = int(rows[0]), int(rows[-1]) + 1
    c0, c1 = int(cols[0]), int(cols[-1]) + 1
    w, l = sorted((c1 - c0, r1 - r0))
    return MaskExtent(w, l, (r0, c0, r1, c1))


def pixels_per_unit(ref_mask, ref_real_w, ref_real_l):
    """Meters per pixel from the reference object's mask and physical size.

    The short pixel side pairs with the short physical side; the two
    per-axis ratios are averaged.
    """
    if not (ref_real_w > 0 and ref_real_l > 0):
        raise InvalidInputError("reference dimensions must be positive")
    w_px, l_px, _ = mask_extent(ref_mask)
    real_w, real_l = sorted((ref_real_w, ref_real_l))
    return float((real_w / w_px + real_l / l_px) / 2.0)


def masked_mean_depth(depth, mask):
    values = depth.values if isinstance(depth, DepthMap) else np.asarray(depth, dtype=np.float64)
    bits = _bits(mask)
    if values.shape != bits.shape:
        raise InvalidInputError(f"depth {values.shape} and mask {bits.shape} differ in size")
    if not bits.any():
        raise InvalidInputError("mask has no set pixels")
    sel = values[bits]
    sel = sel[sel > 0]
    if sel.size == 0:
        raise InvalidInputError("every masked depth is invalid (0)")
    return float(sel.mean())


def food_height(d_r, d_f):
    if d_r < 0 or d_f < 0:
        raise InvalidInputError("depths must be nonnegative")
    return abs(d_r - d_f)


def potential_volume(f_w, f_l, f_h, ppu):
    """Bounding-box volume ``(f_w * ppu) * (f_l * ppu) * f_h``.

    Each pixel extent is converted to a length on its own, so ``ppu``
    enters squared. The result is in ``unit(f_h) * unit(ppu)**2``.
    """
    if not (f_w > 0 and f_l > 0 and f_h > 0 and ppu > 0):
        raise InvalidInputError("potential_volume inputs must be positive")
    return float((f_w * ppu) * (f_l * ppu) * f_h)


def fine_tune_scale(s, unitless_volume, potential, tolerance=DEFAULT_TOLERANCE):
    """Keep ``s`` when ``s**3 * unitless_volume`` lies within ``tolerance``
    (relative) of ``potential``; otherwise return the cube-root scale that
    reproduces ``potential`` exactly.
    """
    if not (s > 0 and unitless_volume > 0 and potential > 0):
        raise InvalidInputError("fine_tune_scale inputs must be positive")
    if not 0 < tolerance <= 1:
        raise InvalidInputError("tolerance must lie in (0, 1]")
    v = s ** 3 * unitless_volume
    if abs(v - potential) / potential <= tolerance:
        return float(s)
    return float(np.cbrt(potential / unitless_volume))


def select_scale_one_shot(candidates, unitless_volume, potential):
    """Candidate whose scaled volume lands closest to ``potential``.

    Ties go to the smaller candidate.
    """
    cands = [float(c) for c in candidates]
    if not cands:
        raise InvalidInputError("no scale candidates")
    if any(not c > 0 for c in cands):
        raise InvalidInputError("scale candidates must be positive")
    return min(sorted(cands), key=lambda c: abs(c ** 3 * unitless_volume - potential))


def depth_validation(depth, food_mask, ref_mask, ref_real_w, ref_real_l):
    """Overhead-view quantities: ppu, extents, mean depths, height and box volume."""
    ppu = pixels_per_unit(ref_mask, ref_real_w, ref_real_l)
    ref_w, ref_l, _ = mask_extent(ref_mask)
    f_w, f_l, _ = mask_extent(food_mask)
    d_r = masked_mean_depth(depth, ref_mask)
    d_f = masked_mean_depth(depth, food_mask)
    h = food_height(d_r, d_f)
    pot = potential_volume(f_w, f_l, h, ppu) if h > 0 else None
    return {
        "ppu": ppu,
        "reference_extent_px": (ref_w, ref_l),
        "food_extent_px": (f_w, f_l),
        "d_reference": d_r,
        "d_food": d_f,
        "food_height": h,
        "potential_volume": pot,
    }


def estimate_scale(block_lengths, unitless_volume, l_real=DEFAULT_BLOCK_EDGE_M, validation=None,
                   tolerance=DEFAULT_TOLERANCE):
    """Block scale, optionally refined against a :func:`depth_validation` result."""
    lengths = np.asarray(block_lengths, dtype=np.float64)
    s = scale_from_reference_blocks(lengths, l_real)
    est = ScaleEstimate(s_initial=s, s_fine=s, l_avg=float(lengths.mean()), method="blocks",
                        unitless_volume=unitless_volume)
    if validation is None:
        return est
    for key in ("ppu", "reference_extent_px", "food_extent_px", "d_reference", "d_food",
                "food_height", "potential_volume"):
        setattr(est, key, validation[key])
    pot = validation["potential_volume"]
    if pot is not None and unitless_volume and unitless_volume > 0:
        est.s_fine = fine_tune_scale(s, unitless_volume, pot, tolerance)
        if est.s_fine != s:
            est.method = "depth-corrected"
    return est
