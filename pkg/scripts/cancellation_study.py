"""Cutoff dependence of the Feynman, self-interaction and total energies.

Fits u_total(Omega) to A Omega^2/2 - B Omega + C ln Omega + D and compares B
with K2 sum w^2 d2; then tabulates the damped-route offset against the
narrow-line total for each damping ratio and sign.
"""

import argparse
import math

import numpy as np

from bethelog.constants import C_LIGHT
from bethelog.energies import cancellation_fit, delta_e_bethe, u_feynman, u_self, u_total
from bethelog.polarizability import DampingModel, Sign
from bethelog.spectrum import from_lines, single_line

SPECTRA = {"toy": single_line(1.0, 1.5), "three": from_lines([(0.4, 1.2), (1.0, 0.5), (2.5, 0.3)])}


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--spectrum", choices=SPECTRA, default="toy")
    p.add_argument("--gamma", type=float, nargs="+", default=[1e-5, 1e-4, 1e-3])
    a = p.parse_args(argv)
    s = SPECTRA[a.spectrum]
    w0 = float(np.min(s.omegas))

    Ws = np.geomspace(1e2, 1e5, 10)
    d = DampingModel.relative(s, 1e-4)
    fit = cancellation_fit(s, d, Ws)
    print(f"fit: A={fit.A:.3e} B={fit.B:.6e} (expected {fit.B_expected:.6e}, rel {fit.B_relative_error:.1e}) "
          f"C={fit.C:.4e} D={fit.D:.4e}")
    print(f"{'Omega':>10} {'u_feynman':>13} {'u_self':>13} {'u_total':>13}")
    for W in Ws[::3]:
        print(f"{W:10.3g} {u_feynman(s, W):13.6e} {u_self(s, d, W):13.6e} {u_total(s, d, W, check=False).direct:13.6e}")

    print("\noffset of the damped total from the narrow-line total")
    print(f"{'Omega':>10} {'sign':>6} {'gamma':>8} {'offset':>11} {'predicted':>11} {'delta_e_bethe':>14}")
    for W in (1e2, C_LIGHT**2):
        for sign in Sign:
            for g in a.gamma:
                dd = DampingModel.relative(s, g, sign)
                r = u_total(s, dd, W, check=False)
                # leading term for the noncausal form; the causal one is O(gamma/Omega)
                pred = 2 * g / math.pi * (math.log(W / w0) - 1.5) if sign is Sign.MINUS else 0.0
                print(f"{W:10.4g} {sign.value:>6} {g:8.0e} {r.direct / r.narrow - 1:11.3e} {pred:11.3e} "
                      f"{delta_e_bethe(s, dd, W):14.7e}")


if __name__ == "__main__":
    main()
