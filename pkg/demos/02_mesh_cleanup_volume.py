"""Clean a reconstructed mesh and measure what it encloses."""
import math
import tempfile
from pathlib import Path

from voleta.meshkit import (box, concatenate, connected_components, icosphere, load_mesh, mesh_volume,
                            remove_isolated_pieces, save_mesh, scale_mesh)

ball = icosphere(3, 1.0)
crumbs = [box((0.02, 0.02, 0.02), origin=(1.4 + 0.1 * i, 0.0, 0.0)) for i in range(3)]
raw = concatenate([ball] + crumbs, name="food")
print("components before:", len(connected_components(raw)))

clean = remove_isolated_pieces(raw, 0.05)
print("components after:", len(connected_components(clean)))

v = mesh_volume(clean)
print("unitless volume %.5f vs ball %.5f" % (v, 4 * math.pi / 3))

# 3 cm radius: scale by 0.03 m/unit, volume goes with the cube of the scale
metric = scale_mesh(clean, 0.03, metric=True)
print("metric volume: %.2f cm^3" % (mesh_volume(metric) * 1e6))

with tempfile.TemporaryDirectory() as d:
    p = Path(d) / "food.ply"
    save_mesh(metric, p, binary=True)
    print("round trip volume: %.2f cm^3" % (mesh_volume(load_mesh(p)) * 1e6))
