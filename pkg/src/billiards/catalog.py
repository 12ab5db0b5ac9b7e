"""Built-in domain catalog for the CLI.

Every entry's ``domain`` block is a ready-to-use value for the ``domain``
field of an experiment config.
"""

from __future__ import annotations

CATALOG = [
    {
        "name": "sinai_2d",
        "description": "2-d torus minus one disk (dispersing)",
        "parameters": {"d": 2, "r": "disk radius, 0 < 2r < L", "L": "torus side",
                       "centers": "list of disk centers"},
        "domain": {"kind": "sinai", "d": 2, "r": 0.25, "L": 1.0,
                   "centers": [[0.5, 0.5]]},
    },
    {
        "name": "sinai_3d",
        "description": "3-d torus minus one ball (dispersing)",
        "parameters": {"d": 3, "r": "ball radius, 0 < 2r < L", "L": "torus side",
                       "centers": "list of ball centers"},
        "domain": {"kind": "sinai", "d": 3, "r": 0.3, "L": 1.0,
                   "centers": [[0.5, 0.5, 0.5]]},
    },
    {
        "name": "cylinder_3d",
        "description": "3-d torus minus one axis-aligned cylinder (semi-dispersing)",
        "parameters": {"radius": "cylinder radius", "axis": "periodic axis direction"},
        "domain": {"kind": "custom", "d": 3,
                   "ambient": {"type": "torus", "side": 1.0},
                   "scatterers": [{"kind": "cylinder",
                                   "axis_point": [0.5, 0.5, 0.0],
                                   "axis_directions": [[0.0, 0.0, 1.0]],
                                   "radius": 0.2}]},
    },
    {
        "name": "hardball_n2_d2",
        "description": "two hard disks on the 2-torus (configuration space Tor^4)",
        "parameters": {"N": 2, "d": 2, "r": "ball radius, 0 < 2r < L/2", "L": "torus side"},
        "domain": {"kind": "hardball_gas", "N": 2, "d": 2, "r": 0.1, "L": 1.0},
    },
    {
        "name": "hardball_n3_d2",
        "description": "three hard disks on the 2-torus (configuration space Tor^6)",
        "parameters": {"N": 3, "d": 2, "r": "ball radius, 0 < 2r < L/2", "L": "torus side"},
        "domain": {"kind": "hardball_gas", "N": 3, "d": 2, "r": 0.1, "L": 1.0},
    },
    {
        "name": "pair_reduced_2d",
        "description": "two-disk system in relative coordinates: torus minus a disk of radius 2r",
        "parameters": {"d": 2, "r": "ball radius, 0 < 4r < L", "L": "torus side"},
        "domain": {"kind": "pair_reduced", "d": 2, "r": 0.1, "L": 1.0},
    },
]
