"""Angle optimization, certification verdicts, noise thresholds and parameter scans.

All searches maximize over the ``2N`` real-plane measurement angles with a
seeded multistart Nelder-Mead.  Angles are reported modulo pi, which leaves
every probability unchanged.
"""

from __future__ import annotations

import math
import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence, Union

import numpy as np
from scipy.optimize import minimize

from .errors import InvalidArgument, NoViolationError
from .inequalities import (
    Family,
    Inequality,
    SvetlichnyFunctional,
    all_cuts,
    theorem1_set,
    wlr_full_set,
    wlr_inequality,
    wlr_variants,
)
from .qcore import (
    AngleTable,
    PureState,
    State,
    StateName,
    as_ensemble,
    born_table,
    named_state,
    parity_signs,
    white_noise_mix,
)

VIOLATION_EPSILON = 1e-7
GRADIENT_STEP = 1e-5
GRADIENT_LIMIT = 1e-4
HIT_TOLERANCE = 1e-6

Target = Union[Inequality, SvetlichnyFunctional]


@dataclass(frozen=True)
class OptimizerOptions:
    restarts: int = 64
    max_iterations: int = 2000
    simplex_tolerance: float = 1e-8
    rng_seed: int = 0
    angle_domain: tuple[float, float] = (0.0, math.pi)

    def __post_init__(self):
        if int(self.restarts) < 1:
            raise InvalidArgument(f"restarts must be >= 1, got {self.restarts!r}")
        if int(self.max_iterations) < 1:
            raise InvalidArgument(f"max_iterations must be >= 1, got {self.max_iterations!r}")
        if not self.simplex_tolerance > 0:
            raise InvalidArgument(f"simplex_tolerance must be positive, got {self.simplex_tolerance!r}")
        lo, hi = self.angle_domain
        if not hi > lo:
            raise InvalidArgument(f"empty angle domain {self.angle_domain!r}")

    def with_(self, **changes) -> "OptimizerOptions":
        return replace(self, **changes)


def worker_count() -> int:
    """Parallelism cap from ``WLR_THREADS`` (default 1)."""
    raw = os.environ.get("WLR_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise InvalidArgument(f"WLR_THREADS must be an integer, got {raw!r}") from None


def target_name(target: Target) -> str:
    if isinstance(target, SvetlichnyFunctional):
        return f"SVETLICHNY({target.num_parties})"
    return target.name


def make_objective(state: State, target: Target) -> Callable[[np.ndarray], float]:
    """Flat-angle-vector objective to maximize: the inequality value, or ``|S|``."""
    n, w, v = as_ensemble(state)
    if target.num_parties != n:
        raise InvalidArgument(f"{target_name(target)} has {target.num_parties} parties, state has {n}")
    if isinstance(target, SvetlichnyFunctional):
        signs = parity_signs(n)
        coeffs = target.coefficients

        def svet(x):
            return abs(float(coeffs @ (born_table(w, v, x.reshape(n, 2)) @ signs)))

        return svet
    s_idx, o_idx, c = target.compiled

    def ineq(x):
        return float(c @ born_table(w, v, x.reshape(n, 2))[s_idx, o_idx])

    return ineq


def gradient_norm(f: Callable[[np.ndarray], float], x: np.ndarray, step: float = GRADIENT_STEP) -> float:
    g = np.empty_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = step
        g[i] = (f(x + e) - f(x - e)) / (2 * step)
    return float(np.linalg.norm(g))


@dataclass(frozen=True)
class ViolationReport:
    inequality: str
    best_value: float
    best_angles: AngleTable
    restarts_hitting_best: int
    gradient_norm_at_best: float
    restarts: int = 0
    evaluations: int = 0

    def to_dict(self) -> dict:
        return {
            "inequality": self.inequality,
            "best_value": self.best_value,
            "best_angles": self.best_angles.tolist(),
            "restarts": self.restarts,
            "restarts_hitting_best": self.restarts_hitting_best,
            "gradient_norm_at_best": self.gradient_norm_at_best,
            "evaluations": self.evaluations,
        }


def _nelder_mead(neg, x0, opts: OptimizerOptions, initial_step: Optional[float] = None):
    nm = {
        "maxiter": int(opts.max_iterations),
        "maxfev": 4 * int(opts.max_iterations),
        "xatol": opts.simplex_tolerance,
        "fatol": opts.simplex_tolerance,
    }
    if initial_step is not None:
        nm["initial_simplex"] = np.vstack([x0] + [x0 + initial_step * e for e in np.eye(x0.size)])
    return minimize(neg, x0, method="Nelder-Mead", options=nm)


def maximize_angles(
    objective: Callable[[np.ndarray], float],
    num_parties: int,
    opts: OptimizerOptions,
    warm_starts: Sequence[np.ndarray] = (),
    stop_above: Optional[float] = None,
    name: str = "",
) -> ViolationReport:
    """Seeded multistart Nelder-Mead over ``2N`` angles, then polish the best point.

    Warm starts run first, followed by ``opts.restarts`` uniform random starts.
    With ``stop_above`` set, restarts stop once the best value reaches it.
    """
    dim = 2 * num_parties
    rng = np.random.default_rng(opts.rng_seed)
    lo, hi = opts.angle_domain
    starts = [np.asarray(x, dtype=float).reshape(dim) for x in warm_starts]
    starts += [rng.uniform(lo, hi, dim) for _ in range(int(opts.restarts))]

    def neg(x):
        return -objective(x)

    finals: list[float] = []
    best_x, best_val, evals = None, -math.inf, 0
    for x0 in starts:
        res = _nelder_mead(neg, x0, opts)
        evals += res.nfev
        val = -float(res.fun)
        finals.append(val)
        if val > best_val:
            best_val, best_x = val, np.asarray(res.x)
        if stop_above is not None and best_val >= stop_above:
            break

    # polish: a fresh small simplex escapes premature collapse
    for _ in range(3):
        res = _nelder_mead(neg, best_x, opts, initial_step=1e-2)
        evals += res.nfev
        if -res.fun >= best_val:
            best_val, best_x = -float(res.fun), np.asarray(res.x)
        grad = gradient_norm(objective, best_x)
        if grad < GRADIENT_LIMIT * 1e-2:
            break
    grad = gradient_norm(objective, best_x)
    if grad >= GRADIENT_LIMIT:
        res = minimize(neg, best_x, method="BFGS", options={"gtol": 1e-9})
        evals += res.nfev
        if -res.fun >= best_val - 1e-12:
            best_x = np.asarray(res.x)
        grad = gradient_norm(objective, best_x)

    angles = AngleTable(num_parties, _reduce(best_x.reshape(num_parties, 2)))
    value = objective(angles.alpha.ravel())
    hits = sum(1 for f in finals if f >= value - HIT_TOLERANCE)
    return ViolationReport(name, float(value), angles, hits, grad, len(finals), int(evals))


def _reduce(alpha: np.ndarray) -> np.ndarray:
    out = np.mod(alpha, math.pi)
    out[out >= math.pi] = 0.0
    return out


def optimize_violation(
    state: State,
    ineq: Target,
    opts: OptimizerOptions = OptimizerOptions(),
    warm_starts: Sequence[np.ndarray] = (),
    stop_above: Optional[float] = None,
) -> ViolationReport:
    """Best value of ``ineq`` over measurement angles for ``state``."""
    objective = make_objective(state, ineq)
    return maximize_angles(objective, ineq.num_parties, opts, warm_starts, stop_above, target_name(ineq))


def optimize_svetlichny(state: State, functional: SvetlichnyFunctional, opts: OptimizerOptions = OptimizerOptions()) -> ViolationReport:
    """Largest ``|S|`` found; compare with ``functional.hybrid_bound``."""
    return optimize_violation(state, functional, opts)


# ---------------------------------------------------------------------------
# certification
# ---------------------------------------------------------------------------


def family_set(n: int, family: Union[Family, str]) -> list[Inequality]:
    family = Family(str(family).upper()) if not isinstance(family, Family) else family
    if family is Family.THM1:
        if n != 3:
            raise InvalidArgument(f"the THM1 family is tripartite, got N={n}")
        return theorem1_set()
    if family is Family.WLR:
        return wlr_full_set(n)
    raise InvalidArgument(f"certification supports THM1 and WLR families, got {family.value}")


@dataclass(frozen=True)
class CertificationReport:
    state: str
    family: Family
    reports: tuple[ViolationReport, ...]
    cuts: tuple[str, ...]
    verdict: bool
    variant_reports: tuple[tuple[ViolationReport, ...], ...] = ()

    @property
    def values(self) -> dict[str, float]:
        return {c: r.best_value for c, r in zip(self.cuts, self.reports)}

    def to_dict(self) -> dict:
        out = {
            "state": self.state,
            "family": self.family.value,
            "verdict": self.verdict,
            "violation_epsilon": VIOLATION_EPSILON,
            "cuts": [dict(cut=c, **r.to_dict()) for c, r in zip(self.cuts, self.reports)],
        }
        if self.variant_reports:
            out["labelling_variants"] = [
                {"cut": c, "reports": [r.to_dict() for r in reps]} for c, reps in zip(self.cuts, self.variant_reports)
            ]
        return out


def _state_label(state: State) -> str:
    return getattr(state, "label", "") or type(state).__name__


def certify(
    state: State,
    n: int,
    family: Union[Family, str],
    opts: OptimizerOptions = OptimizerOptions(),
    include_variants: bool = False,
) -> CertificationReport:
    """Optimize every cut's inequality independently; the verdict needs all of them violated.

    With ``include_variants`` the other labellings of each cut (which side is
    ``r``, and the choice of ``r_1``, ``s_1``) are optimized too and reported
    separately; they do not affect the verdict.
    """
    ineqs = family_set(n, family)
    fam = ineqs[0].family
    if as_ensemble(state)[0] != n:
        raise InvalidArgument(f"state does not have {n} parties")
    reports = tuple(optimize_violation(state, ineq, opts) for ineq in ineqs)
    cuts = tuple(ineq.bipartition.label for ineq in ineqs)
    verdict = all(r.best_value > VIOLATION_EPSILON for r in reports)
    variants: tuple = ()
    if include_variants and fam is Family.WLR:
        variants = tuple(
            tuple(optimize_violation(state, v, opts) for v in wlr_variants(ineq.bipartition)) for ineq in ineqs
        )
    return CertificationReport(_state_label(state), fam, reports, cuts, verdict, variants)


# ---------------------------------------------------------------------------
# generalised-W closed forms
# ---------------------------------------------------------------------------


def theorem3_closed_form(theta: float) -> tuple[float, float]:
    """Maximal violations ``(A|BC, C|AB)`` for ``WPRIME3(theta)``; ``B|AC`` equals ``A|BC``."""
    if not 0.0 <= theta <= math.pi:
        raise InvalidArgument(f"theta must lie in [0, pi], got {theta!r}")
    s2 = math.sin(2 * theta) ** 2
    c = math.cos(theta) ** 2
    first = 0.25 * (math.sqrt(1 + s2) - 1)
    second = c / ((1 + c) * (1 + math.sqrt(1 + 4 * c / (1 + c) ** 2)))
    return first, second


def _a_bc_reduced(x11: float, x02: float, theta: float) -> float:
    return -0.25 * (2 * math.sin(x02) ** 2 + math.sin(2 * x02) * math.sin(2 * x11) * math.sin(2 * theta))


def _pattern_angles(x11: float, x02: float, x13: float) -> np.ndarray:
    """A|BC pattern: alpha_0^1 = pi/2, alpha_0^2 + alpha_1^2 = pi, alpha_0^3 = 0."""
    return np.array([[math.pi / 2, x11], [x02, math.pi - x02], [0.0, x13]])


def _equivalent_mod_symmetry(found: tuple[float, float], expected: tuple[float, float], tol: float) -> bool:
    """Compare ``(alpha_1^1, alpha_0^2)`` modulo the symmetries of the reduced A|BC form.

    The reduced form depends on ``sin^2 y`` and ``sin 2x sin 2y``, so it is
    unchanged by ``x, y -> x + pi, y + pi``, ``(x, y) -> (-x, -y)`` and
    ``(x, y) -> (x + pi/2, -y)``.
    """
    ex, ey = expected
    images = [(ex, ey), (-ex, -ey), (ex + math.pi / 2, -ey), (-ex + math.pi / 2, ey)]

    def dist(a, b):
        d = (a - b) % math.pi
        return min(d, math.pi - d)

    return any(dist(found[0], x) < tol and dist(found[1], y) < tol for x, y in images)


@dataclass(frozen=True)
class Theorem3Check:
    theta: float
    a_bc_value: float
    a_bc_closed_form: float
    c_ab_value: float
    c_ab_closed_form: float
    reduced_form_error: float
    pattern_value: float
    alpha_1_1: float
    alpha_0_2: float
    expected_alpha_1_1: float
    expected_alpha_0_2: float
    value_matches: bool
    pattern_matches: bool

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def theorem3_constraints_check(theta: float, opts: OptimizerOptions = OptimizerOptions(), tol: float = 1e-3) -> Theorem3Check:
    """Compare optimized violations of ``WPRIME3(theta)`` with the closed forms.

    Also optimizes the A|BC inequality restricted to the reference angle
    pattern and checks that the remaining free angles sit at the stationary
    point ``alpha_1^1 = pi/4``, ``alpha_0^2 = atan(-sin 2theta)/2`` up to symmetry.
    """
    closed_a, closed_c = theorem3_closed_form(theta)
    psi = named_state(StateName.WPRIME3, (theta,))
    a_bc = wlr_inequality(3, all_cuts(3)[0])
    c_ab = wlr_inequality(3, all_cuts(3)[2])
    rep_a = optimize_violation(psi, a_bc, opts)
    rep_c = optimize_violation(psi, c_ab, opts)

    full = make_objective(psi, a_bc)
    rng = np.random.default_rng(opts.rng_seed)
    samples = rng.uniform(0, math.pi, (16, 3))
    reduced_err = max(abs(full(_pattern_angles(*s).ravel()) - _a_bc_reduced(s[0], s[1], theta)) for s in samples)

    def pattern_obj(z):
        return full(_pattern_angles(z[0], z[1], z[2]).ravel())

    best = None
    for z0 in samples[: max(4, min(16, int(opts.restarts)))]:
        res = minimize(lambda z: -pattern_obj(z), z0, method="Nelder-Mead",
                       options={"xatol": 1e-10, "fatol": 1e-12, "maxiter": 4000})
        if best is None or res.fun < best.fun:
            best = res
    x11, x02 = float(best.x[0]) % math.pi, float(best.x[1]) % math.pi
    ex = (math.pi / 4, 0.5 * math.atan(-math.sin(2 * theta)))
    value_ok = abs(rep_a.best_value - closed_a) < 1e-5 and abs(rep_c.best_value - closed_c) < 1e-5
    return Theorem3Check(
        theta=float(theta),
        a_bc_value=rep_a.best_value,
        a_bc_closed_form=closed_a,
        c_ab_value=rep_c.best_value,
        c_ab_closed_form=closed_c,
        reduced_form_error=float(reduced_err),
        pattern_value=-float(best.fun),
        alpha_1_1=x11,
        alpha_0_2=x02,
        expected_alpha_1_1=ex[0],
        expected_alpha_0_2=ex[1],
        value_matches=value_ok,
        pattern_matches=_equivalent_mod_symmetry((x11, x02), ex, tol),
    )


# ---------------------------------------------------------------------------
# noise thresholds
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ThresholdReport:
    p_star: float
    per_inequality: dict[str, float]
    monotone: bool
    prescan: dict[str, list[tuple[float, float]]]
    warnings: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {
            "p_star": self.p_star,
            "per_inequality": self.per_inequality,
            "monotone": self.monotone,
            "warnings": list(self.warnings),
        }


def _targets_for(psi: PureState, target) -> list[Inequality]:
    if isinstance(target, Inequality):
        return [target]
    if isinstance(target, (Family, str)):
        return family_set(psi.num_parties, target)
    out = list(target)
    if not out or not all(isinstance(t, Inequality) for t in out):
        raise InvalidArgument("threshold target must be an inequality, a family, or a list of inequalities")
    return out


def _single_threshold(psi: PureState, ineq: Inequality, opts: OptimizerOptions, probe_restarts: int,
                      tol: float, grid_step: float):
    top = optimize_violation(psi, ineq, opts)
    if top.best_value <= VIOLATION_EPSILON:
        raise NoViolationError(f"{ineq.name}: no violation at unit visibility (best {top.best_value:.3g})")
    warm = [top.best_angles.alpha.ravel()]
    probe_opts = opts.with_(restarts=probe_restarts)
    cache = {1.0: top.best_value}

    def f(p: float) -> float:
        p = round(p, 12)
        if p not in cache:
            rep = optimize_violation(white_noise_mix(psi, p), ineq, probe_opts, warm_starts=warm)
            cache[p] = rep.best_value
        return cache[p]

    steps = int(round(1 / grid_step))
    grid = [k / steps for k in range(steps + 1)]
    scan = [(p, f(p)) for p in grid]
    monotone = all(b[1] >= a[1] - 1e-6 for a, b in zip(scan, scan[1:]))
    # largest crossing
    lo_idx = max(k for k, (_, v) in enumerate(scan) if v <= VIOLATION_EPSILON) if any(
        v <= VIOLATION_EPSILON for _, v in scan) else None
    if lo_idx is None:
        return 0.0, monotone, scan
    lo, hi = scan[lo_idx][0], scan[lo_idx + 1][0]
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if f(mid) > VIOLATION_EPSILON:
            hi = mid
        else:
            lo = mid
    return hi, monotone, scan


def threshold_analysis(
    psi: PureState,
    target,
    opts: OptimizerOptions = OptimizerOptions(),
    probe_restarts: int = 4,
    tol: float = 1e-4,
    grid_step: float = 0.05,
) -> ThresholdReport:
    """Smallest visibility at which every target inequality is violated.

    Each probe re-optimizes the angles for ``white_noise_mix(psi, p)``, warm
    started from the unit-visibility optimum.
    """
    if not isinstance(psi, PureState):
        raise InvalidArgument("visibility thresholds need a pure state")
    per, scans, warns, monotone = {}, {}, [], True
    for ineq in _targets_for(psi, target):
        p, mono, scan = _single_threshold(psi, ineq, opts, probe_restarts, tol, grid_step)
        per[ineq.name] = p
        scans[ineq.name] = scan
        if not mono:
            monotone = False
            msg = f"{ineq.name}: optimized violation is not monotone in p; bracketed the largest crossing"
            warns.append(msg)
            warnings.warn(msg, RuntimeWarning, stacklevel=2)
    return ThresholdReport(max(per.values()), per, monotone, scans, tuple(warns))


def visibility_threshold(psi: PureState, target, opts: OptimizerOptions = OptimizerOptions(), **kwargs) -> float:
    return threshold_analysis(psi, target, opts, **kwargs).p_star


# ---------------------------------------------------------------------------
# parameter scans
# ---------------------------------------------------------------------------

SCAN_FAMILIES = (StateName.GENW3, StateName.GENW4)
CSV_HEADER = "theta,mu,min_violation,argmin_cut"


@dataclass(frozen=True)
class ScanRow:
    theta: float
    mu: float
    min_violation: float
    argmin_cut: str


@dataclass(frozen=True)
class ScanTable:
    family: StateName
    rows: tuple[ScanRow, ...]
    nu: Optional[float] = None
    metadata: dict = field(default_factory=dict)

    def to_csv(self) -> str:
        lines = [CSV_HEADER]
        for r in self.rows:
            lines.append(f"{r.theta:.12g},{r.mu:.12g},{r.min_violation:.12g},{r.argmin_cut}")
        return "\n".join(lines) + "\n"

    def lookup(self, theta: float, mu: float, tol: float = 1e-9) -> ScanRow:
        for r in self.rows:
            if abs(r.theta - theta) < tol and abs(r.mu - mu) < tol:
                return r
        raise KeyError((theta, mu))


def grid_axis(count: int, step: float = math.pi / 28) -> list[float]:
    """``k * step`` for ``k = 0..count-1``; the default step hits pi/4, pi/2 and pi exactly."""
    return [k * step for k in range(count)]


def product_grid(thetas: Sequence[float], mus: Sequence[float]) -> list[tuple[float, float]]:
    """Row-major ``(theta, mu)`` pairs."""
    return [(t, m) for t in thetas for m in mus]


def _scan_state(family: StateName, theta: float, mu: float, nu: float) -> PureState:
    if family is StateName.GENW3:
        return named_state(family, (mu, theta))
    return named_state(family, (theta, mu, nu))


def _scan_row_block(args) -> list[tuple[int, ScanRow]]:
    family, points, nu, opts, seed = args
    n = 3 if family is StateName.GENW3 else 4
    ineqs = wlr_full_set(n)
    warm: dict[str, np.ndarray] = {}
    out = []
    for k, (idx, theta, mu) in enumerate(points):
        psi = _scan_state(family, theta, mu, nu)
        best_val, best_cut = math.inf, ""
        point_opts = opts.with_(rng_seed=seed + k)
        for ineq in ineqs:
            starts = [warm[ineq.name]] if ineq.name in warm else []
            rep = optimize_violation(psi, ineq, point_opts, warm_starts=starts,
                                     stop_above=best_val if math.isfinite(best_val) else None)
            warm[ineq.name] = rep.best_angles.alpha.ravel()
            if rep.best_value < best_val:
                best_val, best_cut = rep.best_value, ineq.bipartition.label
        out.append((idx, ScanRow(float(theta), float(mu), float(best_val), best_cut)))
    return out


def scan_min_violation(
    family_id: Union[StateName, str],
    grid: Sequence[tuple[float, float]],
    opts: OptimizerOptions = OptimizerOptions(restarts=6),
    nu: float = math.pi / 4,
    workers: Optional[int] = None,
) -> ScanTable:
    """Minimum over cuts of the optimized WLR violation at each ``(theta, mu)`` point.

    Points sharing a theta form one block; inside a block each cut is warm
    started from the previous point, so results do not depend on ``workers``.
    """
    family = StateName(str(family_id.value if isinstance(family_id, StateName) else family_id).upper())
    if family not in SCAN_FAMILIES:
        raise InvalidArgument(f"scans support GENW3 and GENW4, got {family.value}")
    grid = [(float(t), float(m)) for t, m in grid]
    if not grid:
        raise InvalidArgument("scan grid is empty")

    blocks: dict[float, list] = {}
    for idx, (t, m) in enumerate(grid):
        blocks.setdefault(t, []).append((idx, t, m))
    seeds = np.random.SeedSequence(opts.rng_seed).generate_state(len(blocks))
    tasks = [(family, pts, nu, opts, int(seed)) for pts, seed in zip(blocks.values(), seeds)]

    workers = worker_count() if workers is None else max(1, int(workers))
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_scan_row_block, tasks))
    else:
        results = [_scan_row_block(t) for t in tasks]
    rows = sorted((item for block in results for item in block), key=lambda it: it[0])
    meta = {"rng_seed": opts.rng_seed, "restarts": opts.restarts}
    return ScanTable(family, tuple(r for _, r in rows), nu if family is StateName.GENW4 else None, meta)
