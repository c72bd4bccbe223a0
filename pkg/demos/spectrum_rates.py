"""Truncated Dirichlet eigenvalues and how fast they converge.

Shows the alpha = 1, n = 2 radial mode against the Bessel limit j_{1,k}^2 / 4,
then local log-log slopes of lambda_j(eps) - lambda_j along the eps ladder
for a few (n, alpha).  The slopes approach gamma_+ = alpha (n/2 - 1) + 1
from below: at eps = 2^-4 .. 2^-7 higher-order terms still bend the curve, so
a whole-ladder fit from 2^-4 underestimates the rate while a fit from 2^-8 down
to 2^-18 recovers it.

    python demos/spectrum_rates.py
"""

import numpy as np

from gasgiant.spectral import bessel_oracle, eigen_table


def main():
    eps = 2.0 ** -np.arange(4, 19)
    tab = eigen_table(1.0, 2, 0.0, eps, k=3)
    print("limit eigenvalues  ", np.round(tab.limit, 8))
    print("j_{1,k}^2 / 4      ", np.round(bessel_oracle(3), 8))

    for n, a in ((2, 1.0), (3, 0.5), (4, 1.0)):
        tab = eigen_table(a, n, 0.0, eps, k=2)
        gp = a * (n / 2 - 1) + 1
        err = tab.values - tab.limit[None, :]
        local = np.diff(np.log(err), axis=0) / np.diff(np.log(eps))[:, None]
        print(f"\nn={n} alpha={a}: gamma_+ = {gp}")
        for j in range(local.shape[1]):
            print(f"  j={j + 1} local slopes " + " ".join(f"{s:.3f}" for s in local[-5:, j]))


if __name__ == "__main__":
    main()
