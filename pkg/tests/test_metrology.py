import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from benchmark_data import BLOCK_SCALE, OVERHEAD_ROWS
from voleta.errors import InvalidInputError
from voleta.metrology import (
    BinaryMask,
    DepthMap,
    depth_validation,
    estimate_scale,
    fine_tune_scale,
    food_height,
    mask_extent,
    masked_mean_depth,
    pixels_per_unit,
    potential_volume,
    scale_from_reference_blocks,
    select_scale_one_shot,
)

pos = st.floats(1e-3, 1e3, allow_nan=False, allow_infinity=False)


def rect_mask(h, w, shape=None, origin=(0, 0)):
    shape = shape or (h + origin[0] + 3, w + origin[1] + 5)
    m = np.zeros(shape, dtype=bool)
    m[origin[0]:origin[0] + h, origin[1]:origin[1] + w] = True
    return BinaryMask(m)


# --- block scale -------------------------------------------------------------

def test_block_scale_benchmark_value():
    assert scale_from_reference_blocks([0.115, 0.115, 0.115], 0.012) == pytest.approx(BLOCK_SCALE, abs=1e-9)


def test_block_scale_trivial():
    assert scale_from_reference_blocks([0.012], 0.012) == 1.0
    assert scale_from_reference_blocks([0.024, 0.024], 0.012) == 0.5


@pytest.mark.parametrize("bad", [[], [0.1, 0.0], [-0.2]])
def test_block_scale_rejects(bad):
    with pytest.raises(InvalidInputError):
        scale_from_reference_blocks(bad)


@given(st.lists(pos, min_size=1, max_size=8), pos)
def test_block_scale_homogeneity(lengths, k):
    a = scale_from_reference_blocks([k * x for x in lengths])
    b = scale_from_reference_blocks(lengths) / k
    assert a == pytest.approx(b, rel=1e-12)


# --- mask extent / ppu -------------------------------------------------------

def test_single_pixel_extent():
    m = np.zeros((5, 5), dtype=bool)
    m[2, 3] = True
    w, l, bbox = mask_extent(m)
    assert (w, l) == (1, 1)
    assert bbox == (2, 3, 3, 4)


def test_rectangle_extent():
    w, l, _ = mask_extent(rect_mask(257, 238, origin=(4, 9)))
    assert (w, l) == (238, 257)


def test_extent_sorted_but_bbox_keeps_orientation():
    ext = mask_extent(rect_mask(10, 30))
    assert (ext.w, ext.l) == (10, 30)
    r0, c0, r1, c1 = ext.bbox
    assert (r1 - r0, c1 - c0) == (10, 30)


def test_l_shape_extent():
    m = np.zeros((30, 30), dtype=bool)
    m[5:25, 2:4] = True
    m[23:25, 2:12] = True
    w, l, _ = mask_extent(m)
    assert (w, l) == (10, 20)


def test_empty_mask_rejected():
    with pytest.raises(InvalidInputError):
        mask_extent(np.zeros((4, 4), dtype=bool))


@given(st.integers(0, 2**32 - 1))
def test_extent_monotone_under_added_pixels(seed):
    rng = np.random.default_rng(seed)
    m = rng.random((20, 20)) < 0.05
    m[rng.integers(20), rng.integers(20)] = True
    more = m | (rng.random((20, 20)) < 0.05)
    w0, l0, _ = mask_extent(m)
    w1, l1, _ = mask_extent(more)
    assert w1 >= w0 and l1 >= l0


def test_ppu_square_board():
    assert pixels_per_unit(rect_mask(100, 100), 0.10, 0.10) == pytest.approx(0.001, rel=1e-12)


def test_ppu_benchmark_scene_one():
    # board sized so its 320 x 360 px footprint gives 0.01786 cm/px
    ppu_m = 0.01786e-2
    board_w, board_l = ppu_m * 320, ppu_m * 360
    got = pixels_per_unit(rect_mask(360, 320), board_w, board_l)
    assert got == pytest.approx(0.0001786, rel=1e-9)
    assert got * 100 == pytest.approx(0.01786, rel=1e-9)


def test_ppu_anisotropic_mean():
    assert pixels_per_unit(rect_mask(200, 100), 0.10, 0.10) == pytest.approx(0.00075, rel=1e-12)


# --- depth -------------------------------------------------------------------

def test_masked_mean_depth_cases():
    mask = np.ones((4, 4), dtype=bool)
    assert masked_mean_depth(DepthMap(np.full((4, 4), 0.5)), mask) == pytest.approx(0.5)
    half = np.full((4, 4), 0.4)
    half[:, 2:] = 0.6
    assert masked_mean_depth(half, mask) == pytest.approx(0.5)
    assert masked_mean_depth(np.array([[0.5, 0.5, 0.0]]), np.ones((1, 3), bool)) == pytest.approx(0.5)


def test_masked_mean_depth_all_invalid():
    with pytest.raises(InvalidInputError):
        masked_mean_depth(np.zeros((3, 3)), np.ones((3, 3), bool))


def test_masked_mean_depth_shape_mismatch():
    with pytest.raises(InvalidInputError):
        masked_mean_depth(np.ones((3, 3)), np.ones((4, 3), bool))


def test_food_height():
    assert food_height(0.600, 0.577) == pytest.approx(0.023, abs=1e-12)
    assert food_height(0.577, 0.600) == pytest.approx(0.023, abs=1e-12)
    assert food_height(0.5, 0.5) == 0.0


@given(st.floats(0, 10), st.floats(0, 10))
def test_height_symmetry(a, b):
    assert food_height(a, b) == food_height(b, a) >= 0


# --- potential volume --------------------------------------------------------

@pytest.mark.parametrize("fw,fl,fh_cm,ppu_cm,expected", list(OVERHEAD_ROWS.values()))
def test_potential_volume_benchmark_rows(fw, fl, fh_cm, ppu_cm, expected):
    v = potential_volume(fw, fl, fh_cm, ppu_cm)
    assert v == pytest.approx(expected, rel=0.005)


def test_potential_volume_unit_cube():
    assert potential_volume(1, 1, 1.0, 1.0) == 1.0


def test_potential_volume_meters_vs_cm():
    v_m3 = potential_volume(238, 257, 0.02353, 0.0001786)
    assert v_m3 * 1e6 == pytest.approx(potential_volume(238, 257, 2.353, 0.01786), rel=1e-12)


@given(pos, pos, pos, pos, pos)
def test_potential_volume_homogeneity(fw, fl, fh, ppu, k):
    base = potential_volume(fw, fl, fh, ppu)
    assert potential_volume(fw, fl, k * fh, ppu) == pytest.approx(k * base, rel=1e-12)
    assert potential_volume(fw, fl, fh, k * ppu) == pytest.approx(k * k * base, rel=1e-12)


def test_potential_volume_rejects_zero():
    with pytest.raises(InvalidInputError):
        potential_volume(10, 10, 0.0, 0.001)


# --- fine tuning -------------------------------------------------------------

def test_fine_tune_exact_match():
    assert fine_tune_scale(0.1, 1000, 1.0, 0.25) == 0.1


def test_fine_tune_forced_correction():
    assert fine_tune_scale(0.2, 1000, 1.0, 0.25) == pytest.approx(0.1, rel=1e-12)


def test_fine_tune_within_tolerance():
    v = 0.105 ** 3 * 1000
    deviation = abs(v - 1.0) / 1.0
    assert v == pytest.approx(1.157625, rel=1e-12)
    assert deviation == pytest.approx(0.157625, rel=1e-9)
    assert fine_tune_scale(0.105, 1000, 1.0, 0.25) == 0.105


@pytest.mark.parametrize("args", [(0, 1, 1), (1, 0, 1), (1, 1, -1)])
def test_fine_tune_rejects_nonpositive(args):
    with pytest.raises(InvalidInputError):
        fine_tune_scale(*args)


@given(pos, pos, st.floats(0.01, 1.0))
def test_fine_tune_fixed_point(s, vu, tol):
    pot = s ** 3 * vu
    assert fine_tune_scale(s, vu, pot, tol) == s


@given(pos, pos, pos, st.floats(0.01, 1.0))
def test_fine_tune_correction_exact(s, vu, pot, tol):
    out = fine_tune_scale(s, vu, pot, tol)
    if out != s:
        assert abs(out ** 3 * vu - pot) <= 1e-12 * pot


# --- one-shot selection ------------------------------------------------------

def test_one_shot_examples():
    assert select_scale_one_shot([0.1, 0.2], 1000, 1.0) == 0.1
    assert select_scale_one_shot([0.5], 3.0, 100.0) == 0.5
    assert select_scale_one_shot([0.1, 0.1], 7.0, 2.0) == 0.1


def test_one_shot_tie_goes_small():
    # 1^3 and 3^3 straddle 14 symmetrically
    assert select_scale_one_shot([3.0, 1.0], 1.0, 14.0) == 1.0


def test_one_shot_empty():
    with pytest.raises(InvalidInputError):
        select_scale_one_shot([], 1.0, 1.0)


@given(st.lists(pos, min_size=1, max_size=10), pos, pos)
def test_one_shot_optimal(cands, vu, pot):
    best = select_scale_one_shot(cands, vu, pot)
    dev = abs(best ** 3 * vu - pot)
    assert all(dev <= abs(c ** 3 * vu - pot) for c in cands)


# --- combined estimate -------------------------------------------------------

def _overhead(height_m=0.03):
    shape = (120, 160)
    ref = np.zeros(shape, bool)
    ref[10:110, 5:85] = True
    food = np.zeros(shape, bool)
    food[30:90, 95:155] = True
    depth = np.zeros(shape)
    depth[ref] = 0.6
    depth[food] = 0.6 - height_m
    return DepthMap(depth), food, ref


def test_depth_validation_quantities():
    depth, food, ref = _overhead()
    val = depth_validation(depth, food, ref, 0.080, 0.100)
    assert val["ppu"] == pytest.approx(0.001)
    assert val["food_extent_px"] == (60, 60)
    assert val["reference_extent_px"] == (80, 100)
    assert val["food_height"] == pytest.approx(0.03)
    assert val["potential_volume"] == pytest.approx(0.06 * 0.06 * 0.03)


def test_estimate_scale_validates_or_corrects():
    depth, food, ref = _overhead()
    val = depth_validation(depth, food, ref, 0.080, 0.100)
    pot = val["potential_volume"]
    vu = pot / 0.02 ** 3
    ok = estimate_scale([0.6], vu, 0.012, val, 0.25)
    assert ok.s_initial == pytest.approx(0.02)
    assert ok.s_fine == ok.s_initial
    assert ok.method == "blocks"
    off = estimate_scale([0.3], vu, 0.012, val, 0.25)
    assert off.s_initial == pytest.approx(0.04)
    assert off.s_fine == pytest.approx(0.02, rel=1e-12)
    assert off.method == "depth-corrected"
    assert off.to_dict()["food_extent_px"] == [60, 60]
