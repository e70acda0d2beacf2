"""Regenerate the frozen Brascamp-Lieb calibration table.

Run from the repository root::

    python tools/calibrate_bl.py

For every exponent triple in {1, 2, inf}^3 where the lattice
Brascamp-Lieb bound applies, the constant is the largest ratio
form / ||V||_{l^{q0}} over a seeded family of small weights, times a
safety factor.
"""

import itertools
import json
import math
import pathlib

from bilinlab import lattice

OUT = pathlib.Path(__file__).resolve().parents[1] / "src" / "bilinlab" / "data" / "bl_calibration.json"


def main():
    constants = {}
    for q1, q2, q3 in itertools.product([1.0, 2.0, math.inf], repeat=3):
        r0 = lattice.bl_q0_reciprocal(q1, q2, q3)
        if r0 is None:
            continue
        key = lattice._bl_key(q1, q2, q3)
        c = lattice.calibrate_bl_constant(q1, q2, q3)
        constants[key] = {"q0_reciprocal": r0, "c_cal": c}
        print(key, r0, c)
    payload = {
        "family_seed": lattice.CALIBRATION_FAMILY_SEED,
        "family_size": lattice.CALIBRATION_FAMILY_SIZE,
        "safety": lattice.CALIBRATION_SAFETY,
        "key": "reciprocals 1/q1,1/q2,1/q3",
        "constants": constants,
    }
    OUT.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


if __name__ == "__main__":
    main()
