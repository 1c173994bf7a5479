"""Hydrogen 1s sum rules and ln(k0/Ry) against the bound-state cutoff and continuum grid.

Also prints a converged reference for ln(k0/Ry) built from the closed-form
bound oscillator strengths and the continuum density, Richardson-extrapolated
in the bound-state cutoff.
"""

import argparse
import math
import time

from scipy.integrate import quad

from bethelog.energies import bethe_log_mean
from bethelog.hydrogen import bound_oscillator_strength_1s, build_hydrogen, continuum_df_domega_1s, default_grid
from bethelog.spectrum import static_polarizability, trk_sum


def ln_k0_reference(n_max: int) -> float:
    wb = lambda n: 0.5 * (1 - 1 / n**2)
    g = lambda t: float(continuum_df_domega_1s(math.exp(t))) * math.exp(3 * t)
    kw = dict(limit=2000, epsabs=0, epsrel=1e-13)
    cn = quad(lambda t: g(t) * math.log(2 * math.exp(t)), math.log(0.5), 200, **kw)[0]
    cd = quad(g, math.log(0.5), 200, **kw)[0]

    def ratio(N):
        ns = range(2, N + 1)
        f = [bound_oscillator_strength_1s(n) * wb(n) ** 2 for n in ns]
        return (math.fsum(fi * math.log(2 * wb(n)) for fi, n in zip(f, ns)) + cn) / (math.fsum(f) + cd)

    return (4 * ratio(n_max) - ratio(n_max // 2)) / 3


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--nmax", type=int, nargs="+", default=[10, 20, 40])
    p.add_argument("--nodes", type=int, nargs="+", default=[100, 200, 400, 800])
    p.add_argument("--reference-nmax", type=int, default=4000)
    a = p.parse_args(argv)
    print(f"{'n_max':>6} {'nodes':>6} {'TRK':>10} {'alpha(0)':>10} {'ln k0':>10} {'t[s]':>6}")
    for n in a.nmax:
        for m in a.nodes:
            t0 = time.perf_counter()
            h = build_hydrogen("1s", n, default_grid("1s", m))
            row = (trk_sum(h), static_polarizability(h), bethe_log_mean(h))
            print(f"{n:6d} {m:6d} {row[0]:10.6f} {row[1]:10.5f} {row[2]:10.6f} {time.perf_counter() - t0:6.2f}")
    print(f"reference ln(k0/Ry) = {ln_k0_reference(a.reference_nmax):.10f}")


if __name__ == "__main__":
    main()
