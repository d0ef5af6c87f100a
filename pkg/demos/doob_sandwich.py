"""Conditioned evolution versus the Doob-transformed ergodic chain.

Conditioning an absorbing chain on survival gives a time-inhomogeneous
object that converges to the quasi-stationary law; twisting the generator
by the first Dirichlet eigenvector gives an honest ergodic chain.  The two
convergences control each other through a two-sided inequality whose
constants involve only the eigenvector amplitude.  This script prints the
two distances and the flanks on a grid of times, so the sandwich can be
seen numerically, together with its exponential decay.
"""

import numpy as np

from qsamp import (
    amplitude,
    build_rho_chain,
    dirichlet_eigenpair,
    doob_stationary,
    doob_transform,
    sandwich_experiment,
)


def main():
    gen = build_rho_chain(10, 1.0)
    pair = dirichlet_eigenpair(gen)
    print(f"chain: drifted walk, N = 10, lambda0 = {pair.lambda0:.6f}, "
          f"amplitude = {amplitude(pair):.4f}")

    tilde = doob_transform(gen, pair)
    eta = doob_stationary(gen, pair)
    print(f"Doob transform rows sum to zero: max |row sum| = "
          f"{np.abs(tilde.sum(axis=1)).max():.2e}")
    print(f"stationarity residual of nu*phi: {np.abs(eta @ tilde).max():.2e}\n")

    mu0 = np.zeros(gen.n_states)
    mu0[-1] = 1.0  # start at the far end
    times = [0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 40.0]
    rows = sandwich_experiment(gen, mu0, times, eigenpair=pair)
    print(f"{'t':>6} {'lower':>12} {'conditioned':>12} {'upper':>12} {'doob':>12}")
    for r in rows:
        print(f"{r.t:6.1f} {r.lower:12.3e} {r.dist_conditioned:12.3e} "
              f"{r.upper:12.3e} {r.dist_doob:12.3e}")
    print("\nboth distances decay at the same exponential rate; the flanks")
    print("(amplitude-dependent multiples of the Doob distance) always bracket")
    print("the conditioned distance, which is what makes amplitude control")
    print("transfer ergodic convergence rates to quasi-stationary ones.")


if __name__ == "__main__":
    main()
