"""Closed-form right-hand sides of the convergence inequalities, the
Monte-Carlo consistency estimator they control, and the BoundReport record
that ties a measured quantity to its bound.

Every formula here is a direct transcription; nothing is fitted.  Each RHS
has a 50-digit twin (suffix `_hp`) evaluated with mpmath so transcription
errors cannot hide behind floating-point agreement.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from itertools import product as iter_product

import numpy as np

from .potentials import Potential

__all__ = [
    "BoundReport",
    "classical_rhs",
    "classical_rhs_hp",
    "combineq_mc",
    "combineq_rhs",
    "combineq_rhs_even",
    "combineq_rhs_hp",
    "count_S_Np",
    "count_S_Np_enumerate",
    "dobrushin_rhs",
    "k_constant",
    "lambda_constant",
    "lambda_p_constant",
    "make_report",
    "moment_rhs",
    "moment_rhs_hp",
    "quantum_rhs",
    "quantum_rhs_hp",
    "read_reports_jsonl",
    "write_reports_jsonl",
]


# ---------------------------------------------------------------------------
# growth-rate constants


def k_constant(p: float) -> float:
    """K_p = max(1, p-1)."""
    return max(1.0, p - 1.0)


def lambda_p_constant(p: float, lip_grad: float) -> float:
    """Lambda_p = 2 K_p (1 + 2^{p-1} Lip(grad V)^p)."""
    return 2.0 * k_constant(p) * (1.0 + 2.0 ** (p - 1.0) * lip_grad**p)


def lambda_constant(lip_grad: float) -> float:
    """Lambda = 3 + 4 Lip(grad V)^2 (the squared-cost growth rate)."""
    return 3.0 + 4.0 * lip_grad**2


def _expm1_over(x: float) -> float:
    """(e^x - 1)/x, continuous at 0."""
    if x == 0.0:
        return 1.0
    return math.expm1(x) / x


# ---------------------------------------------------------------------------
# classical mean-field bound


def classical_rhs(V: Potential, p: float, N: int, n: int, t: float) -> float:
    """Bound on dist_p(marginal pair)^p:

        n * 2^p K_p ||grad V||_inf^p ([p/2]+1) / N^{min(p/2,1)}
          * (e^{Lambda_p t} - 1)/Lambda_p.
    """
    if p < 1:
        raise ValueError("exponent p must be >= 1")
    if not 1 <= n <= N:
        raise ValueError("need 1 <= n <= N")
    if t < 0:
        raise ValueError("t must be >= 0")
    lam = lambda_p_constant(p, V.lip_grad)
    return (
        n
        * 2.0**p
        * k_constant(p)
        * V.sup_grad**p
        * (math.floor(p / 2) + 1)
        / N ** min(p / 2.0, 1.0)
        * t
        * _expm1_over(lam * t)
    )


def dobrushin_rhs(V: Potential, p: float, N: int, t: float, initial: float = 0.0) -> float:
    """Gronwall row for the per-particle functional D^p_N itself:
    e^{Lambda_p t} * D(0) + classical_rhs with n = 1."""
    lam = lambda_p_constant(p, V.lip_grad)
    return math.exp(lam * t) * initial + classical_rhs(V, p, N, 1, t)


def classical_rhs_hp(sup_grad, lip_grad, p, N, n, t) -> float:
    """50-digit transcription check of classical_rhs (raw constants in)."""
    from mpmath import mp, mpf

    with mp.workdps(50):
        p_, s, l, t_ = mpf(p), mpf(sup_grad), mpf(lip_grad), mpf(t)
        kp = max(mpf(1), p_ - 1)
        lam = 2 * kp * (1 + 2 ** (p_ - 1) * l**p_)
        val = (
            mpf(n)
            * 2**p_
            * kp
            * s**p_
            * (math.floor(p / 2) + 1)
            / mpf(N) ** min(p / 2.0, 1.0)
            * (mp.e ** (lam * t_) - 1)
            / lam
        )
        return float(val)


# ---------------------------------------------------------------------------
# quantum mean-field bounds (squared-cost functional, three variants)

QUANTUM_VARIANTS = ("general", "toeplitz", "factorized")


def quantum_rhs(
    variant: str,
    V: Potential,
    eps: float,
    N: int,
    n: int,
    t: float,
    init_term: float = 0.0,
) -> float:
    """Bound on the n-particle squared coupling cost.

    variant 'general':    n[(8/N)||grad V||^2 (e^{Lt}-1)/L + (e^{Lt}/N) init]
    variant 'toeplitz':   n[(2 d eps + init/N) e^{Lt} + (8n/N)||grad V||^2 (e^{Lt}-1)/L]
    variant 'factorized': n (2 d eps + (8/N)||grad V||^2 (1-e^{-Lt})/L) e^{Lt}

    with L = 3 + 4 Lip(grad V)^2; `init_term` is the squared initial coupling
    cost ('general'), the squared symbol distance ('toeplitz'), and unused for
    'factorized' (product coherent data start at exactly 2 d eps).
    """
    if t < 0:
        raise ValueError("t must be >= 0")
    if not 1 <= n <= N:
        raise ValueError("need 1 <= n <= N")
    d = V.dim
    sup2 = V.sup_grad**2
    lam = lambda_constant(V.lip_grad)
    growth = math.exp(lam * t)
    if variant == "general":
        return n * ((8.0 / N) * sup2 * t * _expm1_over(lam * t) + growth / N * init_term)
    if variant == "toeplitz":
        return n * (
            (2.0 * d * eps + init_term / N) * growth
            + (8.0 * n / N) * sup2 * t * _expm1_over(lam * t)
        )
    if variant == "factorized":
        decay = -math.expm1(-lam * t) / lam if lam > 0 else t
        return n * (2.0 * d * eps + (8.0 / N) * sup2 * decay) * growth
    raise ValueError(f"unknown variant {variant!r}; expected one of {QUANTUM_VARIANTS}")


def quantum_rhs_hp(variant, sup_grad, lip_grad, d, eps, N, n, t, init_term=0.0) -> float:
    """50-digit transcription check of quantum_rhs (raw constants in)."""
    from mpmath import mp, mpf

    with mp.workdps(50):
        s2 = mpf(sup_grad) ** 2
        lam = 3 + 4 * mpf(lip_grad) ** 2
        t_ = mpf(t)
        growth = mp.e ** (lam * t_)
        if variant == "general":
            val = n * ((8 * s2 / N) * (growth - 1) / lam + growth / N * mpf(init_term))
        elif variant == "toeplitz":
            val = n * (
                (2 * d * mpf(eps) + mpf(init_term) / N) * growth
                + (8 * n * s2 / N) * (growth - 1) / lam
            )
        elif variant == "factorized":
            val = n * (2 * d * mpf(eps) + (8 * s2 / N) * (1 - mp.e ** (-lam * t_)) / lam) * growth
        else:
            raise ValueError(f"unknown variant {variant!r}")
        return float(val)


# ---------------------------------------------------------------------------
# consistency estimate (empirical mean-field force vs convolved force)


def combineq_rhs(F_sup: float, p: float, N: int) -> float:
    """General constant (2 [p/2] + 2) / N^{min(p/2,1)} * (2 F_sup)^p."""
    if F_sup < 0:
        raise ValueError("F_sup must be >= 0")
    return (2.0 * math.floor(p / 2) + 2.0) / N ** min(p / 2.0, 1.0) * (2.0 * F_sup) ** p


def combineq_rhs_even(F_sup: float, p: float, N: int) -> float:
    """Sharper even-exponent constant p/N * (2 F_sup)^p (p a positive even
    integer); p = 2 gives the 8 ||grad V||^2 / N used by the squared-cost
    differential inequality."""
    if not (p == int(p) and int(p) % 2 == 0 and p > 0):
        raise ValueError("even-exponent constant needs positive even integer p")
    return p / N * (2.0 * F_sup) ** p


def combineq_rhs_hp(F_sup, p, N) -> float:
    from mpmath import mp, mpf

    with mp.workdps(50):
        return float(
            (2 * math.floor(p / 2) + 2) / mpf(N) ** min(p / 2.0, 1.0) * (2 * mpf(F_sup)) ** p
        )


def combineq_mc(
    field,
    dist,
    p: float,
    N: int,
    n_mc: int,
    seed: int,
    quad_span: float = 12.0,
    quad_points: int = 4097,
):
    """Monte-Carlo mean of |F*rho(x_1) - (1/N) sum_k F(x_1 - x_k)|^p with
    x_1..x_N i.i.d. ~ rho; returns (mean, stderr).

    `field` maps a 1-D array of offsets to field values; `dist` is a frozen
    one-dimensional distribution exposing .pdf and .rvs (scipy.stats style).
    The convolution F*rho is evaluated by trapezoid quadrature on
    [-quad_span, quad_span]; samples falling outside get the same quadrature
    treatment, only the grid of integration stays fixed.  The estimate is
    chunked with independent child streams, so results do not depend on chunk
    scheduling.
    """
    y = np.linspace(-quad_span, quad_span, quad_points)
    dy = y[1] - y[0]
    quad_w = np.full(quad_points, dy)
    quad_w[0] = quad_w[-1] = dy / 2.0
    rho_w = dist.pdf(y) * quad_w

    children = np.random.SeedSequence(seed).spawn(max(1, (n_mc + 4095) // 4096))
    values = np.empty(n_mc)
    done = 0
    for ss in children:
        size = min(4096, n_mc - done)
        rng = np.random.default_rng(ss)
        X = dist.rvs(size=(size, N), random_state=rng)
        emp = field((X[:, :1] - X).ravel()).reshape(size, N).mean(axis=1)
        conv = field((X[:, 0][:, None] - y[None, :]).ravel()).reshape(size, -1) @ rho_w
        values[done : done + size] = np.abs(conv - emp) ** p
        done += size
    mean = float(values.mean())
    stderr = float(values.std(ddof=1) / math.sqrt(n_mc)) if n_mc > 1 else 0.0
    return mean, stderr


def count_S_Np(N: int, p: int) -> int:
    """(N-1)^p: the number of index maps g: {1..p} -> {1..N} whose value at
    the first slot is >= 2 and is hit exactly once."""
    if N < 1 or p < 1:
        raise ValueError("need N >= 1 and p >= 1")
    return (N - 1) ** p


def count_S_Np_enumerate(N: int, p: int) -> int:
    """Exhaustive oracle for count_S_Np (N^p <= 10^7)."""
    if N**p > 10**7:
        raise ValueError("enumeration capped at N^p <= 10^7")
    count = 0
    for g in iter_product(range(1, N + 1), repeat=p):
        if g[0] >= 2 and g.count(g[0]) == 1:
            count += 1
    return count


# ---------------------------------------------------------------------------
# moment growth


def moment_rhs(M0: float, p: float, lip: float, t: float) -> float:
    """M0 * e^{(p-1)(1 + 2 lip) t}."""
    if p < 1 or t < 0 or M0 < 0 or lip < 0:
        raise ValueError("need p >= 1, t >= 0, M0 >= 0, lip >= 0")
    return M0 * math.exp((p - 1.0) * (1.0 + 2.0 * lip) * t)


def moment_rhs_hp(M0, p, lip, t) -> float:
    from mpmath import mp, mpf

    with mp.workdps(50):
        return float(mpf(M0) * mp.e ** ((mpf(p) - 1) * (1 + 2 * mpf(lip)) * mpf(t)))


# ---------------------------------------------------------------------------
# reports


@dataclass(frozen=True)
class BoundReport:
    """One measured quantity against one bound at one time.

    passed <=> lhs_measured <= rhs + 3 * lhs_stderr + tolerance; margin is the
    slack of that comparison (negative means failure by that much)."""

    inequality_id: str
    time: float
    lhs_measured: float
    lhs_stderr: float
    rhs: float
    tolerance: float
    constants: dict = field(default_factory=dict)
    passed: bool = False
    margin: float = 0.0

    def to_json(self) -> str:
        payload = {
            "inequality_id": self.inequality_id,
            "time": self.time,
            "lhs_measured": self.lhs_measured,
            "lhs_stderr": self.lhs_stderr,
            "rhs": self.rhs,
            "tolerance": self.tolerance,
            "constants": {k: self.constants[k] for k in sorted(self.constants)},
            "pass": self.passed,
            "margin": self.margin,
        }
        return json.dumps(payload, sort_keys=True, allow_nan=False)


def make_report(
    inequality_id: str,
    time: float,
    lhs_measured: float,
    rhs: float,
    lhs_stderr: float = 0.0,
    tolerance: float = 0.0,
    constants: dict | None = None,
) -> BoundReport:
    slack = rhs + 3.0 * lhs_stderr + tolerance - lhs_measured
    return BoundReport(
        inequality_id=inequality_id,
        time=float(time),
        lhs_measured=float(lhs_measured),
        lhs_stderr=float(lhs_stderr),
        rhs=float(rhs),
        tolerance=float(tolerance),
        constants=dict(constants or {}),
        passed=bool(slack >= 0.0),
        margin=float(slack),
    )


def write_reports_jsonl(reports, path) -> None:
    with open(path, "w") as fh:
        for r in reports:
            fh.write(r.to_json() + "\n")


def read_reports_jsonl(path) -> list:
    out = []
    with open(path) as fh:
        for line in fh:
            if not line.strip():
                continue
            d = json.loads(line)
            out.append(
                BoundReport(
                    inequality_id=d["inequality_id"],
                    time=d["time"],
                    lhs_measured=d["lhs_measured"],
                    lhs_stderr=d["lhs_stderr"],
                    rhs=d["rhs"],
                    tolerance=d["tolerance"],
                    constants=d["constants"],
                    passed=d["pass"],
                    margin=d["margin"],
                )
            )
    return out
