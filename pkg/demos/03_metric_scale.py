"""Recover a mesh's metric scale from chessboard blocks, then check it against depth."""
import numpy as np

from voleta.metrology import DepthMap, depth_validation, estimate_scale

# overhead view: 80 x 100 mm board, a 60 x 60 px food footprint standing 3 cm proud of the table
ref = np.zeros((120, 160), bool)
ref[10:110, 5:85] = True
food = np.zeros((120, 160), bool)
food[30:90, 95:155] = True
depth = np.zeros((120, 160))
depth[ref] = 0.60
depth[food] = 0.57

val = depth_validation(DepthMap(depth), food, ref, 0.080, 0.100)
print("metres per pixel:", val["ppu"])
print("food height: %.3f m, box volume: %.1f cm^3" % (val["food_height"], val["potential_volume"] * 1e6))

unitless_volume = 13.5          # what the reconstruction encloses
good_blocks = [0.6, 0.6, 0.6]   # measured block edges, mesh units
bad_blocks = [0.3, 0.3, 0.3]    # a mis-measured set

for blocks in (good_blocks, bad_blocks):
    est = estimate_scale(blocks, unitless_volume, 0.012, val, tolerance=0.25)
    print("blocks %s -> initial %.4f, final %.4f (%s), volume %.1f cm^3"
          % (blocks[0], est.s_initial, est.s_fine, est.method, est.s_fine ** 3 * unitless_volume * 1e6))
