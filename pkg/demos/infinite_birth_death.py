"""Birth-death chains on the whole of the positive integers, absorbed at 0.

Whether infinity acts as an entrance boundary is decided by two series in
the product weights pi: the explosion series must diverge and the
return-from-infinity series must converge.  The raw unit-birth rates with
death rate n fail the second condition; multiplying both rates by matched
squared-logarithm factors fixes it without changing pi.

Under the entrance condition, reflecting truncations give eigenvalues that
decrease monotonically to the infinite-chain spectrum, the eigenvector is
increasing and bounded, and its amplitude obeys a spectral-product bound
with a controlled infinite tail.
"""

import numpy as np

from qsamp import (
    accelerated_poisson_family,
    eigen_convergence,
    entrance_check,
    gap_identity_check,
    hitting_time_from,
    poisson_family,
    tail_sum_estimate,
    theorem_bound,
)


def main():
    print("=== entrance-boundary diagnostics ===")
    for name, fam in (("poisson rates (b=1, d=n)", poisson_family()),
                      ("accelerated rates", accelerated_poisson_family())):
        v = entrance_check(fam, 20_000)
        print(f"{name}:")
        print(f"  explosion series diverges: {v.r_series_diverges}")
        print(f"  return series converges:   {v.s_series_converges}")
        print(f"  entrance boundary:         {v.is_entrance_boundary}")
    print()

    fam = accelerated_poisson_family()
    print("=== truncation pipeline for the accelerated rates ===")
    schedule = [2 ** k for k in range(6, 13)]
    series = eigen_convergence(fam, 4, schedule, tol=1e-8)
    print(f"{'N':>6} {'lambda_N0':>16} {'lambda_N0_prime':>16} "
          f"{'amplitude':>12} {'gap residual':>13}")
    for i, n in enumerate(series.ns):
        resid = gap_identity_check(fam, n)
        amp = series.phi_list[i].max() / series.phi_list[i].min()
        print(f"{n:6d} {series.lambda_table[i, 0]:16.12f} "
              f"{series.lambda0_prime_table[i]:16.12f} {amp:12.8f} {resid:13.2e}")
    print(f"declared limits: lambda0 = {series.lambda0_limit:.12f}, "
          f"lambda0' = {series.lambda0_prime_limit:.12f}")
    print(f"eigenvalue tables monotone: {series.lambda_monotone and series.lambda0_prime_monotone}")
    print(f"eigenvectors nondecreasing: {series.phi_nondecreasing}\n")

    tail = tail_sum_estimate(fam, 4096, 4)
    rep = theorem_bound(series, tail_bound=tail)
    print(f"tail estimate (sum of inverse eigenvalues beyond index 4): {tail:.4f}")
    print(f"amplitude bound: {rep.bound:.6f}  "
          f"(base factors {[f'{f:.4f}' for f in rep.base_factors]}, "
          f"tail factor {rep.tail_factor:.4f})")
    amps = series.amplitudes()
    print(f"largest truncation amplitude: {amps.max():.6f} <= bound: "
          f"{bool(amps.max() <= rep.bound)}\n")

    print("=== mean hitting times of state 1 (reflected truncations) ===")
    for x in (10, 100, 1000, 4000):
        print(f"  from {x:5d}: {hitting_time_from(fam, x):.6f}")
    print("the values converge to the return series, the quantity whose")
    print("finiteness defines the entrance boundary.")


if __name__ == "__main__":
    main()
