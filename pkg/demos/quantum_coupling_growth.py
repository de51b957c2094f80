"""Quantum coupling cost under the semiclassical Gronwall envelope.

Evolves a coupling of two single-particle states on a doubled grid: the X
factor under the Hartree flow of a reference state, the Y factor under the
bare potential, both by the same split-step propagator.  The trace coupling
cost D_eps(t) starts at the Heisenberg floor 2*eps (diagonal coherent
coupling) and may grow at most like

    (2 eps + 4 ||grad V||^2 (1 - e^{-Lambda t}) / Lambda) e^{Lambda t}.

The Husimi picture gives an independent lower rail: W2(Husimi marginals)^2
- 2 eps can never exceed the trace cost.
"""
from mflab import make_gaussian_potential
from mflab.bounds import quantum_rhs
from mflab.quantum import (
    GridSpec,
    coherent_product_state,
    coherent_state,
    coupled_quantum_advance,
    doubled_grid,
    mk_eps_lower,
    qp_cost_trace,
    reduced_density,
    state_density_matrix,
)

eps = 0.25
V = make_gaussian_potential(1.0, 1.0, 1)
base = GridSpec(1, 1, 64, 8.0, eps)
dbl = doubled_grid(base, 1)

q0, p0 = 0.3, -0.2
psi = coherent_product_state(dbl, [q0, q0, p0, p0])  # diagonal coupling
ref = coherent_state(base, q0, p0)
dt, legs, steps_per_leg = 0.02, 5, 5

print(f"eps = {eps}   initial cost (Heisenberg floor 2*eps) = {qp_cost_trace(psi, eps):.6f}")
t = 0.0
for _ in range(legs):
    for _ in range(steps_per_leg):
        psi, ref = coupled_quantum_advance(psi, ref, V, dt)
    t += dt * steps_per_leg
    D = qp_cost_trace(psi, eps)
    env = quantum_rhs("factorized", V, eps, 1, 1, t)
    rho_x = reduced_density([(1.0, psi)], [0])
    rho_y = reduced_density([(1.0, psi)], [1])
    rail = mk_eps_lower(rho_x, rho_y, eps)
    print(
        f"t={t:4.2f}   D={D:.6f}   envelope={env:.6f}   husimi rail={rail:+.6f}   "
        f"{'ok' if rail <= D <= env else 'VIOLATION'}"
    )
print(f"norm drift after {legs * steps_per_leg} steps: {abs(psi.norm() - 1.0):.2e}")
