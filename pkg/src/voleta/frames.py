"""Keyframe curation: perceptual-hash de-duplication and FFT blur gating.

A capture sweep produces many nearly identical frames and a few smeared
ones. :func:`select_keyframes` walks the sequence once, drops frames whose
sharpness score falls below a threshold, and drops frames whose 64-bit DCT
hash sits within a Hamming radius of the last frame it kept.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from PIL import Image
from scipy import fft, ndimage

from .errors import InvalidInputError

__all__ = [
    "Frame",
    "PerceptualHash",
    "KeyframeSelection",
    "DEFAULT_RADII",
    "DEFAULT_HAMMING_THRESHOLD",
    "load_frame",
    "to_gray",
    "perceptual_hash",
    "hamming_distance",
    "blur_score",
    "gaussian_blur",
    "select_keyframes",
    "select_from_signatures",
    "parse_radii",
]

LUMA_WEIGHTS = np.array([0.299, 0.587, 0.114])
HASH_GRID = 32
HASH_BLOCK = 8
DEFAULT_RADII = tuple(range(0, 31, 2))
DEFAULT_HAMMING_THRESHOLD = 12
MIN_SIDE = 8


@dataclass(frozen=True, eq=False)
class Frame:
    """One RGB capture. ``pixels`` is a ``(height, width, 3)`` uint8 array."""

    index: int
    pixels: np.ndarray
    id: str = ""

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.ndim == 2:
            px = np.repeat(px[:, :, None], 3, axis=2)
        if px.ndim != 3 or px.shape[2] not in (3, 4):
            raise InvalidInputError(f"frame {self.id!r}: expected an RGB raster, got shape {px.shape}")
        px = px[:, :, :3]
        if px.dtype != np.uint8:
            px = np.clip(np.rint(px), 0, 255).astype(np.uint8)
        object.__setattr__(self, "pixels", px)
        if not self.id:
            object.__setattr__(self, "id", f"{self.index:06d}")

    @property
    def height(self):
        return self.pixels.shape[0]

    @property
    def width(self):
        return self.pixels.shape[1]


def load_frame(path, index):
    """Read an 8-bit PNG/JPEG into a :class:`Frame` whose id is the file stem."""
    path = Path(path)
    with Image.open(path) as im:
        pixels = np.asarray(im.convert("RGB"))
    return Frame(index=index, pixels=pixels, id=path.stem)


def to_gray(frame):
    """BT.601 luma as float64."""
    px = frame.pixels if isinstance(frame, Frame) else np.asarray(frame)
    if px.ndim == 2:
        return px.astype(np.float64)
    return px[:, :, :3].astype(np.float64) @ LUMA_WEIGHTS


def _check_size(gray):
    h, w = gray.shape
    if h < MIN_SIDE or w < MIN_SIDE:
        raise InvalidInputError(f"raster {w}x{h} is smaller than {MIN_SIDE}x{MIN_SIDE}")


def _area_weights(n_in, n_out):
    # row i averages the input interval [i*n_in/n_out, (i+1)*n_in/n_out)
    edges = np.arange(n_out + 1) * (n_in / n_out)
    lo = edges[:-1, None]
    hi = edges[1:, None]
    left = np.arange(n_in)[None, :]
    overlap = np.clip(np.minimum(hi, left + 1) - np.maximum(lo, left), 0.0, None)
    return overlap / (n_in / n_out)


def _area_resize(gray, size):
    h, w = gray.shape
    return _area_weights(h, size) @ gray @ _area_weights(w, size).T


@dataclass(frozen=True)
class PerceptualHash:
    """64-bit DCT hash. Bit 63 is the DC coefficient, bit 0 the (7, 7) one."""

    bits: int

    def __post_init__(self):
        if not 0 <= self.bits < 1 << 64:
            raise InvalidInputError("hash must fit in 64 bits")

    def __sub__(self, other):
        return hamming_distance(self, other)

    def hex(self):
        return f"{self.bits:016x}"

    @classmethod
    def from_hex(cls, text):
        return cls(int(text, 16))

    def __str__(self):
        return self.hex()


def perceptual_hash(frame):
    gray = to_gray(frame)
    _check_size(gray)
    # rounding keeps flat regions flat so their coefficients compare as exact zeros
    small = np.round(_area_resize(gray, HASH_GRID), 6)
    coeffs = fft.dctn(small, type=2, norm="ortho")[:HASH_BLOCK, :HASH_BLOCK].ravel()
    coeffs = np.round(coeffs, 6)
    median = np.median(coeffs[1:])
    value = 0
    for bit in coeffs > median:
        value = (value << 1) | int(bit)
    return PerceptualHash(value)


def hamming_distance(a, b):
    a = a.bits if isinstance(a, PerceptualHash) else int(a)
    b = b.bits if isinstance(b, PerceptualHash) else int(b)
    return (a ^ b).bit_count()


def gaussian_blur(gray, radius):
    """Gaussian blur whose kernel half-width equals ``radius`` pixels.

    sigma = radius / 3 with the kernel truncated at 3 sigma; radius 0 is the
    identity.
    """
    gray = np.asarray(gray, dtype=np.float64)
    if radius < 0:
        raise InvalidInputError("blur radius must be >= 0")
    if radius == 0:
        return gray.copy()
    return ndimage.gaussian_filter(gray, sigma=radius / 3.0, truncate=3.0, mode="wrap")


def _high_freq_energy(gray):
    h, w = gray.shape
    spectrum = np.abs(fft.fftshift(fft.fft2(gray)))
    yy, xx = np.ogrid[:h, :w]
    r2 = (yy - h // 2) ** 2 + (xx - w // 2) ** 2
    outside = r2 > (min(h, w) / 16.0) ** 2
    return float(np.mean(np.log1p(spectrum[outside])))


def blur_score(frame, radii=DEFAULT_RADII):
    """Sharpness as the high-frequency log-energy lost to Gaussian blurring.

    Energy is the mean ``log(1 + |F|)`` of the centred spectrum outside a
    disc of radius ``min(h, w) / 16``. The score is the energy of the frame
    minus the average energy of its blurred copies over ``radii``; a sharp
    frame loses more and scores higher.
    """
    radii = list(radii)
    if not radii:
        raise InvalidInputError("radii must be nonempty")
    if any(r < 0 for r in radii):
        raise InvalidInputError("radii must be >= 0")
    gray = to_gray(frame)
    _check_size(gray)
    base = _high_freq_energy(gray)
    blurred = [base if r == 0 else _high_freq_energy(gaussian_blur(gray, r)) for r in radii]
    return base - float(np.mean(blurred))


def parse_radii(text):
    """Parse ``"0:30:2"`` (inclusive stop) or ``"0,2,4"`` into a list of ints."""
    text = text.strip()
    if ":" in text:
        parts = [int(p) for p in text.split(":")]
        if len(parts) == 2:
            parts.append(1)
        start, stop, step = parts
        return list(range(start, stop + 1, step))
    return [int(p) for p in text.split(",") if p.strip()]


@dataclass
class KeyframeSelection:
    kept: list
    rejected_blurry: list
    rejected_duplicate: list
    total: int
    hashes: dict = field(default_factory=dict)
    scores: dict = field(default_factory=dict)
    ids: dict = field(default_factory=dict)

    @property
    def retention_ratio(self):
        return len(self.kept) / self.total if self.total else 0.0

    @property
    def empty(self):
        """True when every frame failed the blur gate."""
        return not self.kept

    def to_dict(self):
        frames = []
        status = {i: "kept" for i in self.kept}
        status.update({i: "blurry" for i in self.rejected_blurry})
        status.update({i: "duplicate" for i in self.rejected_duplicate})
        for i in sorted(status):
            frames.append({
                "index": i,
                "id": self.ids.get(i, str(i)),
                "status": status[i],
                "hash": self.hashes[i].hex() if i in self.hashes else None,
                "blur_score": self.scores.get(i),
            })
        return {
            "kept": [self.ids.get(i, str(i)) for i in self.kept],
            "rejected_blurry": [self.ids.get(i, str(i)) for i in self.rejected_blurry],
            "rejected_duplicate": [self.ids.get(i, str(i)) for i in self.rejected_duplicate],
            "retention_ratio": self.retention_ratio,
            "empty_selection": self.empty,
            "frames": frames,
        }


def select_from_signatures(indices, hashes, scores, hamming_threshold=DEFAULT_HAMMING_THRESHOLD,
                           blur_threshold=0.0):
    """Sequential selection fold over precomputed hashes and blur scores.

    ``indices``, ``hashes`` and ``scores`` are parallel sequences in capture
    order.
    """
    if not 0 <= hamming_threshold <= 64:
        raise InvalidInputError("hamming_threshold must lie in [0, 64]")
    indices = list(indices)
    kept, blurry, dup = [], [], []
    last = None
    for idx, h, s in zip(indices, hashes, scores):
        if s < blur_threshold:
            blurry.append(idx)
        elif last is not None and hamming_distance(h, last) <= hamming_threshold:
            dup.append(idx)
        else:
            kept.append(idx)
            last = h
    return KeyframeSelection(kept, blurry, dup, total=len(indices))


def select_keyframes(frames: Sequence[Frame], hamming_threshold: int = DEFAULT_HAMMING_THRESHOLD,
                     blur_threshold: float = 0.0, radii: Iterable[int] = DEFAULT_RADII):
    frames = list(frames)
    if not frames:
        raise InvalidInputError("no frames to select from")
    indices = [f.index for f in frames]
    if len(set(indices)) != len(indices):
        raise InvalidInputError("frame indices must be unique")
    radii = list(radii)
    hashes = [perceptual_hash(f) for f in frames]
    scores = [blur_score(f, radii) for f in frames]
    sel = select_from_signatures(indices, hashes, scores, hamming_threshold, blur_threshold)
    sel.hashes = dict(zip(indices, hashes))
    sel.scores = dict(zip(indices, scores))
    sel.ids = {f.index: f.id for f in frames}
    return sel
