"""Compute reference values by independent means (scipy special functions and quadrature).

Writes tests/oracles.json; the test-suite reads the frozen file and never
recomputes these numbers with package code.
"""

import json
import os

import numpy as np
from scipy import integrate, special

j01 = float(special.jn_zeros(0, 1)[0])


def disk_moment():
    num = integrate.quad(lambda r: r**3 * special.j0(j01 * r) ** 2, 0, 1, epsabs=1e-14, epsrel=1e-14)[0]
    den = integrate.quad(lambda r: r * special.j0(j01 * r) ** 2, 0, 1, epsabs=1e-14, epsrel=1e-14)[0]
    return num / den


def square_moments():
    # ground state 2 sin(pi a) sin(pi b) on the unit square, centre (1/2, 1/2)
    var1 = integrate.quad(lambda t: (t - 0.5) ** 2 * 2 * np.sin(np.pi * t) ** 2, 0, 1, epsabs=1e-14)[0]

    def lphi_sq(b, a):
        y1, y2 = a - 0.5, b - 0.5
        d1 = 2 * np.pi * np.cos(np.pi * a) * np.sin(np.pi * b)
        d2 = 2 * np.pi * np.sin(np.pi * a) * np.cos(np.pi * b)
        return (y1 * d2 - y2 * d1) ** 2

    lnorm = integrate.dblquad(lphi_sq, 0, 1, 0, 1, epsabs=1e-13, epsrel=1e-13)[0]
    return var1, lnorm


def main():
    msq = disk_moment()
    var1, lnorm = square_moments()
    out = {
        "j01": j01,
        "disk_lambda0": j01**2,
        "disk_mean_ysq": msq,
        "disk_c_par": 0.25 * msq,
        "disk_second_zero_m1": float(special.jn_zeros(1, 1)[0]),
        "square_lambda0": 2 * np.pi**2,
        "square_var_per_axis": var1,
        "square_closed_form_var": 1 / 12 - 1 / (2 * np.pi**2),
        "square_Lnorm_sq": lnorm,
        "hollow_c_par": 0.25,
        "helix_a1_b1_kappa_sq": 0.25,
    }
    path = os.path.join(os.path.dirname(__file__), "..", "tests", "oracles.json")
    with open(path, "w") as fh:
        json.dump(out, fh, indent=2, sort_keys=True)
    print(json.dumps(out, indent=2))


if __name__ == "__main__":
    main()
