"""Wigner / Husimi / Toeplitz calculus on a guarded grid, against closed forms.

A coherent state has the Gaussian Wigner function (pi*eps)^{-1}
exp(-((x-q)^2 + (xi-p)^2)/eps); a two-lobe superposition drives the Wigner
function negative while its Husimi smoothing stays nonnegative; and Toeplitz
quantisation satisfies trace identities tying the three pictures together.
"""
import numpy as np

from mflab.quantum import (
    GridSpec,
    SymbolMeasure,
    WaveFunction,
    coherent_state,
    husimi_transform,
    state_density_matrix,
    toeplitz_operator,
    toeplitz_trace_against,
    trace_product,
    wigner_transform,
)

grid = GridSpec(d=1, n_particles=1, points_per_axis=256, box_half_width=6.0, epsilon=0.25)
eps = grid.epsilon
q0, p0 = 0.8, -0.5

psi = coherent_state(grid, q0, p0)
W = wigner_transform(state_density_matrix(psi))
X, XI = np.meshgrid(W.x_nodes, W.xi_nodes, indexing="ij")
closed = np.exp(-((X - q0) ** 2 + (XI - p0) ** 2) / eps) / (np.pi * eps)
print(f"coherent-state Wigner vs closed form:  max|err| = {np.abs(W.values - closed).max():.2e}")
print(f"Wigner integral (= trace)            : {W.integral():.12f}")

# an even superposition of two separated lobes: interference fringes push the
# Wigner function below zero, the Husimi transform smooths them away
lobe = coherent_state(grid, -1.5, 0.0).values + coherent_state(grid, 1.5, 0.0).values
lobe = lobe / np.sqrt(np.sum(np.abs(lobe) ** 2) * grid.h)
rho_cat = state_density_matrix(WaveFunction(grid, lobe))
W_cat = wigner_transform(rho_cat)
H_cat = husimi_transform(rho_cat)
print(f"cat state: min Wigner = {W_cat.values.min():+.4f}   min Husimi = {H_cat.values.min():+.2e}")

# Toeplitz trace identity for a random 3-atom symbol, both routes:
# assemble OP_T(mu) and trace against rho, or integrate rho's coherent-state
# diagonal against the symbol
rng = np.random.default_rng(4)
mu = SymbolMeasure(rng.normal(size=(3, 2)), rng.dirichlet(np.ones(3)))
lhs = trace_product(toeplitz_operator(grid, mu), rho_cat)
rhs = toeplitz_trace_against(mu, rho_cat)
print(f"Toeplitz trace identity: operator route {lhs:.10f} vs diagonal route {rhs:.10f}")

# quadratic-symbol expectation against the Husimi function of a coherent
# state: int q^2 dHusimi = q0^2 + eps (state variance eps/2 + smoothing eps/2)
H = husimi_transform(state_density_matrix(psi))
q_marg = H.values.sum(axis=1) * H.dxi
q2 = float((H.x_nodes**2 * q_marg).sum() * H.dx)
print(f"int q^2 dHusimi = {q2:.6f}   closed form q0^2 + eps = {q0**2 + eps:.6f}")
