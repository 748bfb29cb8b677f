"""Comparisons of the solvers against the independent references in
:mod:`fracsob.oracles`.  Each entry is ``(name, passed, detail)``."""
from __future__ import annotations

import math

import numpy as np

from . import oracles
from .extremal import solve_extremal
from .geometry import Interval, build_domain
from .limit import minimize_holder_quotient
from .nonlocal_ops import SeminormParams, frac_p_laplacian, gagliardo_seminorm_log, holder_seminorm, linf_minus
from .weights import coarea_check_1d, geometric_mean_k, omega_distribution, weight_from_spec


def _rel(a, b):
    return abs(a - b) / abs(b)


def check_seminorm():
    d = build_domain(Interval(0.0, 1.0), 9)
    u = np.sin(np.pi * d.interior[:, 0]) + 0.3 * d.interior[:, 0]
    worst = 0.0
    for p in (2.0, 3.0, 5.0):
        ours = math.exp(gagliardo_seminorm_log(u, d, SeminormParams(0.5, p)))
        ref = oracles.direct_seminorm_power_1d(list(u), 0.0, 1.0, 0.5, p) ** (1 / p)
        worst = max(worst, _rel(ours, ref))
    return "seminorm vs double loop (n=9)", worst <= 1e-12, f"max rel err {worst:.2e}"


def check_laplacian():
    d = build_domain(Interval(0.0, 1.0), 9)
    u = np.cos(3 * d.interior[:, 0]) * d.delta
    prm = SeminormParams(0.5, 3.0)
    ours = frac_p_laplacian(u, d, prm)
    ref = np.array([oracles.direct_frac_laplacian_1d(list(u), 0.0, 1.0, 0.5, 3.0, i) for i in range(d.n)])
    err = float(np.max(np.abs(ours - ref)) / np.max(np.abs(ref)))
    return "fractional p-Laplacian vs direct sum (n=9)", err <= 1e-10, f"rel err {err:.2e}"


def check_extremal_tiny():
    d = build_domain(Interval(0.0, 1.0), 3)
    w = weight_from_spec("uniform", d)
    sol = solve_extremal(d, w, SeminormParams(0.5, 2.0))
    lam, u = oracles.extremal_oracle_1d(3, 0.0, 1.0, 0.5, 2.0, w.values)
    err_l = _rel(math.exp(sol.log_lambda), lam)
    err_u = float(np.max(np.abs(sol.u_p - u)))
    ok = err_l <= 1e-4 and err_u <= 1e-3
    return "Lambda_2 on 3 nodes vs lattice search", ok, f"rel err {err_l:.2e}, sup err u {err_u:.2e}"


def check_limit_tiny():
    d = build_domain(Interval(0.0, 1.0), 5)
    w = weight_from_spec("uniform", d)
    lim = minimize_holder_quotient(d, w, 0.5)
    mu, _ = oracles.holder_quotient_oracle_1d(5, 0.0, 1.0, 0.5, w.values)
    err = _rel(lim.mu, mu)
    return "mu_s on 5 nodes vs lattice search", err <= 1e-3, f"rel err {err:.2e}"


def check_closed_forms():
    out = []
    d = build_domain(Interval(0.0, 1.0), 101)
    h = d.h
    w = weight_from_spec("uniform", d)
    hd = holder_seminorm(d.delta, d, 0.5).value
    out.append(("|delta|_0.5 = 2^-0.5", abs(hd - 2**-0.5) <= math.sqrt(h), f"err {abs(hd - 2**-0.5):.2e}"))
    lm = linf_minus(d.delta**0.5, d, 0.5)
    err = float(np.max(np.abs(lm + 1)))
    out.append(("linf_minus(delta^0.5) = -1", err <= math.sqrt(h), f"err {err:.2e}"))
    kd = geometric_mean_k(d.delta, w)
    err = abs(kd - oracles.k_delta_closed_form())
    # O(h log 1/h), not O(h^2): the log singularity at the boundary limits the rule
    out.append(("k(delta) = e^-1/2", err <= h * math.log(1 / h), f"err {err:.2e}"))
    sg = omega_distribution(w, d.delta, 0.25)
    out.append(("sigma(0.25) = 0.5", abs(sg - 0.5) <= 2 * h, f"err {abs(sg - 0.5):.2e}"))
    g = np.exp(d.interior[:, 0])
    err = coarea_check_1d(g, d)
    out.append(("co-area identity", err <= h * h, f"discrepancy {err:.2e}"))
    lim = minimize_holder_quotient(d, w, 0.5)
    mu_h = 1.0 / geometric_mean_k(d.delta**0.5, w)
    err = _rel(lim.mu, mu_h)
    out.append(("mu_s = 1/k(delta^s) on 101 nodes", err <= 1e-8, f"rel err {err:.2e}"))
    return out


def run_selftest():
    results = [check_seminorm(), check_laplacian(), check_extremal_tiny(), check_limit_tiny()]
    results.extend(check_closed_forms())
    return results
