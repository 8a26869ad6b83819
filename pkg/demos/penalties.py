"""
The four pair penalties and their closed forms
==============================================

Each off-diagonal entry of the precision matrix carries one of four
penalties. This script tabulates them on a grid, shows where each proximal
operator sends an input, and checks the Fenchel-Young inequality.
"""

import numpy as np

from l0ggm.regularizers import (conj_psi, prox_l0l2, prox_phi, prox_psi,
                                psi_value, zero_threshold)

lam0, lam2, M = 1.0, 1.0, 3.0

# psi is linear near zero, then quadratic, and infinite outside the box
print("theta    psi     l0l2")
for theta in np.linspace(0, 3, 7):
    l0l2 = (lam0 if theta else 0.0) + lam2 * theta ** 2
    print(f"{theta:5.2f} {psi_value(theta, lam0, lam2, M):7.3f} {l0l2:7.3f}")

# Inputs below the zero threshold are mapped to zero by the relaxed prox.
c = zero_threshold(lam0, lam2, M)
print(f"\nzero threshold c = {c}")
print("x        prox_psi  prox_phi(z=1)  prox_l0l2")
for x in (0.5, 2.0, 2.5, 4.0, 8.0):
    print(f"{x:4.1f} {prox_psi(x, lam0, lam2, M):10.4f} "
          f"{prox_phi(x, 1, lam0, lam2, M):10.4f}     "
          f"{prox_l0l2(x, lam0, lam2, M)}")

# the l0l2 prox can be set-valued exactly at its threshold
print("\ntie:", prox_l0l2(1.0, 0.5, 0.0, np.inf))

# Fenchel-Young: psi(t) + psi*(a) >= a*t, with equality at the prox pairs
rng = np.random.default_rng(0)
worst = min(psi_value(t, lam0, lam2, M) + conj_psi(a, lam0, lam2, M) - a * t
            for t, a in rng.uniform(-3, 3, (1000, 2)))
print(f"smallest Fenchel-Young slack over 1000 draws: {worst:.3e}")
