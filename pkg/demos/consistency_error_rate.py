"""Consistency error of the tensorized mean-field state: the 1/N rate.

The amount by which F*rho(x_1) differs from the empirical force
(1/N) sum_k F(x_1 - x_k) for iid x_k ~ rho is what the mean-field argument
pays per particle.  Monte-Carlo with a quadrature convolution reference
measures E|difference|^p directly; the closed-form constants bound it by
(p/N)(2||F||_inf)^p for even p and by the slightly larger general-p constant.
The index-map count (N-1)^p behind those constants is checked against brute
enumeration.
"""
import numpy as np
from scipy import stats

from mflab import combineq_mc, combineq_rhs, combineq_rhs_even, count_S_Np, make_gaussian_potential
from mflab.bounds import count_S_Np_enumerate

V = make_gaussian_potential(1.0, 1.0, 1)
p = 2.0
rho = stats.norm()

def force(z):
    return V.grad(np.asarray(z, dtype=float)[:, None])[:, 0]

print("== E|F*rho(x1) - empirical force|^p, p = 2, F = grad V (unit Gaussian)")
means = []
N_list = [4, 16, 64]
for N in N_list:
    mean, se = combineq_mc(force, rho, p, N, n_mc=40_000, seed=10 + N)
    even_c = combineq_rhs_even(V.sup_grad, p, N)
    gen_c = combineq_rhs(V.sup_grad, p, N)
    means.append(mean)
    print(
        f"   N={N:3d}   measured={mean:.5e} +- {se:.1e}   "
        f"even-p bound={even_c:.5e}   general bound={gen_c:.5e}"
    )

slope = np.polyfit(np.log(N_list), np.log(means), 1)[0]
print(f"   fitted slope of the measured error: {slope:+.3f}   (theory: -1)")

print("== index-map count (N-1)^p vs enumeration")
for N in range(2, 6):
    for pp in (2, 4):
        closed, brute = count_S_Np(N, pp), count_S_Np_enumerate(N, pp)
        print(f"   N={N} p={pp}:  {closed} vs {brute}  {'ok' if closed == brute else 'MISMATCH'}")
