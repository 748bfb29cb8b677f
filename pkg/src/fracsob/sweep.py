"""Experiment configs, warm-started p-sweeps, inequality audits and flat-file
reporting."""
from __future__ import annotations

import csv
import json
import logging
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .extremal import ExtremalOptions, solve_extremal
from .geometry import Domain, Interval, InvalidSpecError, Rectangle, build_domain
from .limit import LimitOptions, LimitSolution, minimize_holder_quotient
from .nonlocal_ops import SeminormParams, holder_seminorm, seminorm_power_log
from .weights import InvalidWeightError, Weight, log_geometric_mean, weight_from_spec

log = logging.getLogger(__name__)

CSV_COLUMNS = ("p", "lambda_root", "holder_of_up", "el_residual", "sup_dist_to_prev")
AUDIT_TOL = 1e-8


class ConfigError(ValueError):
    pass


class SweepError(RuntimeError):
    pass


@dataclass
class ExperimentConfig:
    domain: dict
    weight: object = "uniform"
    s: float = 0.5
    p_list: list = field(default_factory=lambda: [4, 8, 16, 32, 64, 128])
    solver: dict = field(default_factory=dict)
    limit: dict = field(default_factory=dict)
    xi: dict = field(default_factory=dict)
    output: dict = field(default_factory=dict)
    n_random: int = 200
    seed: int = 0
    deterministic: bool = False

    def __post_init__(self):
        if not isinstance(self.domain, dict) or "type" not in self.domain:
            raise ConfigError("domain must be an object with a 'type' key")
        try:
            self.s = float(self.s)
            self.p_list = [float(p) for p in self.p_list]
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad numeric field: {exc}") from None
        if not 0 < self.s < 1:
            raise ConfigError(f"s must lie in (0, 1), got {self.s}")
        if not self.p_list:
            raise ConfigError("p_list is empty")
        if any(p <= 1 for p in self.p_list):
            raise ConfigError(f"every p must exceed 1, got {self.p_list}")
        if any(b <= a for a, b in zip(self.p_list, self.p_list[1:])):
            raise ConfigError(f"p_list must be strictly increasing, got {self.p_list}")
        unknown = set(self.solver) - {"init", "grad_tol", "max_iter", "armijo_c", "backtrack", "history"}
        if unknown:
            raise ConfigError(f"unknown solver options {sorted(unknown)}")
        unknown = set(self.limit) - {"init", "q_ladder", "grad_tol", "max_iter"}
        if unknown:
            raise ConfigError(f"unknown limit options {sorted(unknown)}")
        if int(self.n_random) < 0:
            raise ConfigError("n_random must be nonnegative")
        self.n_random = int(self.n_random)
        self.seed = int(self.seed)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys {sorted(unknown)}")
        if "domain" not in data:
            raise ConfigError("config is missing 'domain'")
        return cls(**data)

    def build(self) -> tuple[Domain, Weight]:
        """Lattice and normalized weight described by this config."""
        spec = dict(self.domain)
        kind = spec.pop("type")
        n = spec.pop("n", 101)
        cw = spec.pop("collar_width", None)
        bounds = spec.pop("bounds", None)
        if spec:
            raise ConfigError(f"unknown domain keys {sorted(spec)}")
        try:
            if kind == "interval":
                geom = Interval(*(bounds or (0.0, 1.0)))
            elif kind == "rectangle":
                geom = Rectangle(*(bounds or (0.0, 1.0, 0.0, 1.0)))
            else:
                raise ConfigError(f"unknown domain type {kind!r}")
            d = build_domain(geom, n, cw)
            return d, weight_from_spec(self.weight, d)
        except (InvalidSpecError, InvalidWeightError, TypeError) as exc:
            raise ConfigError(str(exc)) from None

    def extremal_options(self, init=None) -> ExtremalOptions:
        opts = ExtremalOptions(**self.solver)
        if init is not None:
            opts.init = init
        elif opts.init == "warm":
            # nothing to warm-start from yet
            opts.init = "xi"
        return opts

    def limit_options(self) -> LimitOptions:
        kw = {k: v for k, v in self.limit.items() if k != "init"}
        if "q_ladder" in kw:
            kw["q_ladder"] = tuple(float(q) for q in kw["q_ladder"])
        return LimitOptions(**kw)

    def output_path(self, key: str, default: str) -> str:
        return os.path.join(self.output.get("dir", "."), self.output.get(key, default))


def load_config(path) -> ExperimentConfig:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    return ExperimentConfig.from_dict(data)


@dataclass
class SweepRecord:
    p: float
    lambda_root: float
    holder_of_up: float
    el_residual: float
    sup_dist_to_prev: float
    converged: bool = True

    def row(self):
        return tuple(getattr(self, c) for c in CSV_COLUMNS)


@dataclass
class SweepResult:
    records: list
    u_last: np.ndarray = field(repr=False)
    k_last: float
    limit: LimitSolution = field(repr=False)
    solutions: list = field(default_factory=list, repr=False)
    domain: Domain | None = field(default=None, repr=False)
    weight: Weight | None = field(default=None, repr=False)

    @property
    def gaps(self):
        """``|lambda_root - holder_of_up|`` per record."""
        return [abs(r.lambda_root - r.holder_of_up) for r in self.records]

    @property
    def proxy_distance(self) -> float:
        """Sup-node distance between ``v * k_last`` and ``u_last``."""
        return float(np.max(np.abs(self.limit.v * self.k_last - self.u_last)))

    def summary(self) -> dict:
        return {
            "p": [r.p for r in self.records],
            "converged": [r.converged for r in self.records],
            "gap": self.gaps,
            "sup_dist_to_prev": [r.sup_dist_to_prev for r in self.records],
            "mu": self.limit.mu,
            "k_last": self.k_last,
            "proxy_distance": self.proxy_distance,
            "residual_minus_sup": self.limit.residual_minus_sup,
            "sup_check_max": self.limit.sup_check_max,
            "q_ladder_trace": [list(t) for t in self.limit.q_ladder_trace],
            "limit_converged": self.limit.converged,
        }


def run_p_sweep(cfg: ExperimentConfig) -> SweepResult:
    """Solve the extremal problem along ``cfg.p_list``, each solve warm-started
    from the previous one, then the limit problem seeded by the last iterate."""
    d, w = cfg.build()
    records, solutions = [], []
    prev = None
    for p in cfg.p_list:
        prm = SeminormParams(cfg.s, p)
        init = prev.u_p if prev is not None else None
        sol = solve_extremal(d, w, prm, cfg.extremal_options(init))
        dist = math.nan if prev is None else float(np.max(np.abs(sol.u_p - prev.u_p)))
        records.append(SweepRecord(
            p=p,
            lambda_root=sol.lambda_root,
            holder_of_up=holder_seminorm(sol.u_p, d, cfg.s).value,
            el_residual=sol.el_residual,
            sup_dist_to_prev=dist,
            converged=sol.converged,
        ))
        solutions.append(sol)
        log.info("p=%g lambda_root=%.8g el_residual=%.2e converged=%s",
                 p, sol.lambda_root, sol.el_residual, sol.converged)
        # a diverged iterate is a poor seed; keep warm-starting from the last good one
        if sol.converged or prev is None:
            prev = sol
    if not any(r.converged for r in records):
        raise SweepError("no solve in the sweep converged")
    u_last = solutions[-1].u_p
    init = cfg.limit.get("init", "u_p_final")
    lim = minimize_holder_quotient(d, w, cfg.s, u_last if init == "u_p_final" else init, cfg.limit_options())
    k_last = math.exp(float(np.sum(np.log(u_last / lim.v) * w.quad)))
    return SweepResult(records, u_last, k_last, lim, solutions, d, w)


def random_fields(d: Domain, n_fields: int, seed: int, s: float):
    """Seeded smooth positive fields: Gaussian bump superpositions times delta^beta."""
    rng = np.random.default_rng(seed)
    nodes = d.interior
    lo, hi = nodes.min(axis=0), nodes.max(axis=0)
    out = []
    for _ in range(n_fields):
        m = int(rng.integers(1, 5))
        u = np.zeros(d.n)
        for _ in range(m):
            c = rng.uniform(lo, hi)
            width = rng.uniform(0.05, 0.5) * d.diameter
            r2 = np.sum((nodes - c) ** 2, axis=1)
            u += rng.uniform(0.2, 1.0) * np.exp(-r2 / (2 * width**2))
        out.append(u * d.delta ** rng.uniform(s, 1.0))
    return out


@dataclass
class AuditCheck:
    max_violation: float = 0.0
    tolerance: float = AUDIT_TOL
    count: int = 0

    @property
    def passed(self) -> bool:
        return self.max_violation <= self.tolerance

    def update(self, violation: float):
        self.max_violation = max(self.max_violation, float(violation))
        self.count += 1


@dataclass
class AuditReport:
    checks: dict

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks.values())

    def violations(self) -> dict:
        return {
            name: {"max_violation": c.max_violation, "tolerance": c.tolerance, "count": c.count}
            for name, c in self.checks.items()
        }


def _log_mean(x, w: Weight) -> float:
    return math.log(float(np.sum(x * w.quad)))


def audit_tolerances(sweep: SweepResult, s: float) -> dict:
    """Per-check tolerances: 1e-8 plus the slack each check inherits from the
    solvers.  All checks are measured as log-ratios."""
    d, w, lim = sweep.domain, sweep.weight, sweep.limit
    tol = {}
    for sol in sweep.solutions:
        tol[f"sobolev[p={sol.p:g}]"] = AUDIT_TOL + sol.el_residual + sol.p * abs(log_geometric_mean(sol.u_p, w))
    tol["jensen"] = AUDIT_TOL
    chain_slack = abs(log_geometric_mean(lim.v, w)) + lim.residual_minus_sup / lim.mu
    tol["limit_chain_lower"] = AUDIT_TOL + chain_slack
    tol["limit_chain_upper"] = AUDIT_TOL + chain_slack
    tol["proxy_chain_lower"] = AUDIT_TOL
    # u_last only approximates k_last * v; the right inequality inherits that gap
    h_last = holder_seminorm(sweep.u_last, d, s).value
    proxy = math.log(float(np.max(sweep.k_last * lim.v / sweep.u_last)))
    proxy += max(0.0, math.log(h_last / (sweep.k_last * lim.mu)))
    tol["proxy_chain_upper"] = AUDIT_TOL + max(proxy, 0.0) + chain_slack
    return tol


def audit_field(u, sweep: SweepResult, s: float) -> dict:
    """Violations (positive log-excess, zero when satisfied) of each inequality
    for one field.  Only ``|u|`` enters."""
    d, w, lim = sweep.domain, sweep.weight, sweep.limit
    u = np.abs(np.asarray(u, dtype=float))
    out = {}
    lk = log_geometric_mean(u, w)
    if lk == -math.inf:
        return {}
    for sol in sweep.solutions:
        prm = SeminormParams(s, sol.p)
        out[f"sobolev[p={sol.p:g}]"] = sol.log_lambda + sol.p * lk - seminorm_power_log(u, d, prm)
    out["jensen"] = lk - _log_mean(u, w)
    hu = holder_seminorm(u, d, s).value
    mid = _log_mean(u / lim.v, w)
    out["limit_chain_lower"] = lk - mid
    out["limit_chain_upper"] = mid - math.log(hu / lim.mu)
    un = u * math.exp(-lk)
    h_last = holder_seminorm(sweep.u_last, d, s).value
    mid = _log_mean(un / sweep.u_last, w)
    out["proxy_chain_lower"] = -math.log(sweep.k_last) - mid
    out["proxy_chain_upper"] = mid - math.log(hu * math.exp(-lk) / h_last)
    return {k: max(v, 0.0) for k, v in out.items()}


def audit_inequalities(cfg: ExperimentConfig, sweep: SweepResult, n_random: int | None = None, extra_fields=()) -> AuditReport:
    n_random = cfg.n_random if n_random is None else n_random
    tol = audit_tolerances(sweep, cfg.s)
    checks = {name: AuditCheck(tolerance=t) for name, t in tol.items()}
    fields = list(random_fields(sweep.domain, n_random, cfg.seed, cfg.s)) + list(extra_fields)
    for u in fields:
        for name, viol in audit_field(u, sweep, cfg.s).items():
            checks[name].update(viol)
    return AuditReport(checks)


def write_csv(records, path):
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(CSV_COLUMNS)
        for r in records:
            wr.writerow([repr(float(x)) for x in r.row()])


def read_csv(path):
    """Records back from :func:`write_csv`; the converged flag is not stored."""
    with open(path, newline="") as fh:
        rd = csv.reader(fh)
        header = tuple(next(rd))
        if header != CSV_COLUMNS:
            raise ValueError(f"unexpected CSV header {header}")
        return [SweepRecord(*(float(x) for x in row)) for row in rd]


def write_json(data: dict, path):
    with open(path, "w") as fh:
        json.dump(data, fh, indent=2, sort_keys=True)
        fh.write("\n")
