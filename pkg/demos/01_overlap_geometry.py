"""How robot coverage turns into an overlap graph.

Each robot sweeps a disc of its scan radius along its route. Coverage is
rasterized on a shared lattice and two robots overlap by
|a & b| / (|a| + |b|), which runs from 0 (disjoint) to 0.5 (identical).
"""
import math
from pathlib import Path

import numpy as np

from edgefuse import load_scenario
from edgefuse.costmodel import load_profile
from edgefuse.scene import EdgeServerSpec, RobotSpec, Scene, coverage_region, overlap_degree

RES = 0.05

# A single stationary robot covers a disc; the raster area tracks pi * r^2.
disc = coverage_region(RobotSpec(0, ((0.0, 0.0),), 1.0, 3300), RES)
print(f"disc: raster area {len(disc) * RES * RES:.4f} m^2 vs pi = {math.pi:.4f}")

# Two unit discs one meter apart overlap by the circular-lens ratio.
other = coverage_region(RobotSpec(1, ((1.0, 0.0),), 1.0, 3300), RES)
lens = 2 * math.acos(0.5) - 0.5 * math.sqrt(3)
print(f"lens: raster degree {overlap_degree(disc, other):.4f} vs closed form {lens / (2 * math.pi):.4f}")

# Three robots along a corridor: neighbors overlap, the ends do not.
robots = tuple(RobotSpec(i, ((1.5 * i, 0.0), (1.5 * i, 2.0)), 1.0, 3300) for i in range(3))
scene = Scene(robots, (EdgeServerSpec(0, 1.0, 2e6, 9000.0),), load_profile().cloud_fusion, RES)
print("corridor overlap matrix:")
print(np.array2string(scene.overlap_matrix, precision=3))

# The bundled apartment fixture has three rooms and one robot in the hallway.
apartment = load_scenario(Path(__file__).resolve().parents[1] / "fixtures" / "apartment.json")
w = apartment.scene.overlap_matrix
print(f"apartment: {len(w)} robots, {np.count_nonzero(np.triu(w, 1))} overlapping pairs")
for i, row in enumerate(w):
    print(f"  robot {i}: overlaps {np.flatnonzero(row).tolist()}")
