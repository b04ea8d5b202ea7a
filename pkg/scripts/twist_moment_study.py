"""Lattice convergence of the twist moment ||L_y Phi||^2 on the centred unit square.

The boundary half-cells are missed by central differences, so the error
decays like h rather than h^2; a two-point Richardson step recovers the
continuum value to about a percent.
"""

import json
import os

from wgspec.cross_section import solve_vertical_grid, square_mask

HERE = os.path.dirname(os.path.abspath(__file__))

if __name__ == "__main__":
    with open(os.path.join(HERE, "..", "tests", "oracles.json")) as fh:
        exact = json.load(fh)["square_Lnorm_sq"]
    prev = None
    for n in (16, 32, 64):
        val = solve_vertical_grid(square_mask(1.0, (0.0, 0.0)), 1.0 / n, with_lambda02=False).Lnorm_sq
        line = f"h=1/{n:<3d} Lnorm_sq={val:.5f} err={exact - val:.4f}"
        if prev is not None:
            line += f"  richardson={2 * val - prev:.5f}"
        print(line)
        prev = val
    print(f"continuum  {exact:.5f}")
