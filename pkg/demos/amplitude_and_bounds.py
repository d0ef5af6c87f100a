"""Eigenvector amplitude of absorbing chains, and four ways to bound it.

The running examples are the two-state unit-rate chain (whose eigenvector
ratio is the golden ratio) and the drifted chain on 1..N with up-rate rho.
For each we compute the first Dirichlet eigenpair, the amplitude
max(phi)/min(phi), and then compare every bound the library offers:

* path bound: best product of rate/(exit - lambda0) factors per path,
* rough bound: the eigenvalue-free variant,
* degree-diameter bound (R d / r)^D,
* spectral bound from the full Dirichlet spectrum (reversible case),
* the exact birth-death product, which is not a bound but an identity.
"""

import numpy as np

from qsamp import (
    amplitude,
    build_general,
    build_rho_chain,
    dirichlet_eigenpair,
    exact_bd_amplitude,
    full_spectrum,
    graph_bound,
    graph_parameters,
    path_bound,
    spectral_bound,
)


def report(name, gen):
    pair = dirichlet_eigenpair(gen)
    amp = amplitude(pair)
    print(f"--- {name} (N = {gen.n_states}) ---")
    print(f"lambda0   = {pair.lambda0:.12g}")
    print(f"amplitude = {amp:.12g}")
    pb = path_bound(gen, pair.lambda0)
    print(f"path bound          = {pb.bound:.6g}   (rough variant {pb.rough_bound:.6g})")
    d, diam, r, big_r = graph_parameters(gen)
    print(f"degree-diameter     = {graph_bound(d, diam, r, big_r):.6g}   "
          f"with d={d}, D={diam}, r={r:.3g}, R={big_r:.3g}")
    rep = full_spectrum(gen)
    sb = spectral_bound(rep)
    print(f"spectral bound      = {sb.bound:.6g}")
    if gen.is_birth_death:
        print(f"exact BD identity   = {exact_bd_amplitude(gen):.12g}")
    print()


def main():
    golden = build_general(2, [(1, 2, 1.0), (2, 1, 1.0)], {1: 1.0})
    report("two-state unit-rate chain", golden)
    print("note: here the path bound is exact and the spectral bound is not.\n")

    for rho, n in ((1.0, 20), (1.0, 100), (2.0, 30), (0.8, 30)):
        gen = build_rho_chain(n, rho)
        report(f"drifted chain, rho = {rho}", gen)

    print("asymptotics: with rho = 1 the amplitude grows like 2N/pi;")
    for n in (50, 100, 200, 400):
        amp = amplitude(dirichlet_eigenpair(build_rho_chain(n, 1.0)))
        print(f"  N = {n:4d}: amplitude * pi / (2N) = {amp * np.pi / (2 * n):.8f}")
    print("with rho > 1 it converges to rho/(rho-1); the degree-diameter bound")
    print("explodes exponentially in N, which is the right order only for rho < 1.")


if __name__ == "__main__":
    main()
