"""Subsolution verification and the explicit epsilon-dichotomy machinery.

Given a level sigma, a center mu and margins (delta, R) certifying that
(mu - 2 delta 1 + positive orthant) meets the level set only inside the ball
B_R(0), the dichotomy context computes the explicit constant

    eps = min{ delta0/(2 R0), delta (1-eps1)/(2 R0), eps1/(2 R0),
               delta0/(2 (1+eps1)),  delta/2,  eps1/(2 (1+eps1)) }

from the auxiliary quantities R0 (axis clearance), eps1 (scaling slack) and
delta0 (worst level margin).  For every lambda on the level set at least one
of the two dichotomy inequalities then holds with this eps:

    case 1:  sum f_i(lambda)(mu_i - lambda_i) >= eps * W(lambda)
    case 2:  min_i f_i(lambda)            >= eps * W(lambda)

with the weight W = 1 + sum f_i + |sum f_i lambda_i|.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DomainError,
    HypothesisError,
    LemmaViolationError,
    RangeError,
)
from .symfunc import (
    LADDER_T_MAX,
    FuncFamily,
    boundary_sup,
    eval_f,
    grad_f,
    in_cone,
    lambda_tuple,
)

__all__ = [
    "DichotomyContext",
    "DichotomyOutcome",
    "CSubVerdict",
    "level_set_point",
    "sample_level_set",
    "certify_bounded_intersection",
    "build_context",
    "dichotomy_check",
    "is_c_subsolution",
]

_R0_MARGIN = 1.2  # multiplicative safety on the smallest admissible clearance
_LEVEL_TOL = 1e-10


def _cone_entry(family: FuncFamily, base: np.ndarray, direction: np.ndarray) -> float:
    """Smallest t >= 0 with base + t*direction in Gamma, by doubling + bisection.

    Requires the ray to enter the cone eventually (direction with positive
    entries always does).
    """
    if in_cone(base, family.k):
        return 0.0
    hi = 1.0
    while not in_cone(base + hi * direction, family.k):
        hi *= 2.0
        if hi > 1e15:
            raise RangeError("ray never enters the cone")
    lo = 0.0
    for _ in range(200):
        if hi - lo <= 1e-13 * (1.0 + hi):
            break
        mid = 0.5 * (lo + hi)
        if in_cone(base + mid * direction, family.k):
            hi = mid
        else:
            lo = mid
    return hi


def _bisect_level(family, sigma, base, direction, t_lo, t_hi) -> float:
    """t with f(base + t dir) = sigma, assuming f increasing on [t_lo, t_hi]."""
    for _ in range(200):
        mid = 0.5 * (t_lo + t_hi)
        if eval_f(family, base + mid * direction) < sigma:
            t_lo = mid
        else:
            t_hi = mid
        if abs(eval_f(family, base + t_hi * direction) - sigma) <= _LEVEL_TOL * (
            1.0 + abs(sigma)
        ):
            break
    return t_hi


def level_set_point(
    family: FuncFamily, sigma: float, direction, mode: str = "ray"
) -> np.ndarray:
    """A point lambda with f(lambda) = sigma to 1e-10 * (1 + |sigma|).

    mode="ray": scales t*direction with direction in Gamma (f must attain
    sigma along the ray).  mode="shift": walks base + t*1 from the given base
    point; f is strictly increasing there by ellipticity, so bisection is
    well-posed.
    """
    direction = lambda_tuple(direction)
    ones = np.ones(family.n)
    if mode == "shift":
        base = direction
        t_enter = _cone_entry(family, base, ones)
        t_lo = t_enter + 1e-9 * (1.0 + abs(t_enter))
        t_hi = max(1.0, 2.0 * t_lo)
        for _ in range(200):
            if eval_f(family, base + t_hi * ones) > sigma:
                break
            t_hi *= 2.0
        else:
            raise RangeError(f"level {sigma} not attained on the shifted ray")
        if eval_f(family, base + t_lo * ones) > sigma:
            # entry value already above the level: the ray misses the level set
            raise RangeError(f"level {sigma} below the ray's attained range")
        t = _bisect_level(family, sigma, base, ones, t_lo, t_hi)
        point = base + t * ones
    else:
        if not in_cone(direction, family.k):
            raise DomainError("ray mode needs a direction inside Gamma")
        t_lo, t_hi = 1.0, 1.0
        for _ in range(200):
            if eval_f(family, t_lo * direction) < sigma:
                break
            t_lo *= 0.5
        else:
            raise RangeError(f"level {sigma} below the attained range on the ray")
        for _ in range(200):
            if eval_f(family, t_hi * direction) > sigma:
                break
            t_hi *= 2.0
        else:
            raise RangeError(f"level {sigma} above the attained range on the ray")
        t = _bisect_level(family, sigma, np.zeros(family.n), direction, t_lo, t_hi)
        point = t * direction
    val = eval_f(family, point)
    if abs(val - sigma) > 1e-8 * (1.0 + abs(sigma)):
        raise RangeError(f"bisection stalled at f={val} for level {sigma}")
    return point


def sample_level_set(
    family: FuncFamily, sigma: float, count: int, seed: int, spread: float = 2.0
) -> np.ndarray:
    """Fan of level-set points from 1-shift rays through quasi-random bases."""
    rng = np.random.default_rng(seed)
    pts = np.empty((count, family.n))
    got = 0
    while got < count:
        base = rng.normal(0.0, spread, family.n)
        try:
            pts[got] = level_set_point(family, sigma, base, mode="shift")
        except RangeError:
            continue
        got += 1
    return pts


def certify_bounded_intersection(
    family: FuncFamily,
    sigma: float,
    mu,
    delta: float,
    radius: float,
    rays: int = 200,
    seed: int = 0,
) -> float:
    """Sample (mu - 2 delta 1 + orthant) against the level set; return the max
    crossing norm.  Raises when a sampled crossing escapes B_radius(0).

    A certificate is a report, not a proof: rays are quasi-random orthant
    directions from the shifted base point.
    """
    mu = lambda_tuple(mu)
    rng = np.random.default_rng(seed)
    base = mu - 2.0 * delta * np.ones(family.n)
    worst = 0.0
    for _ in range(rays):
        e = np.abs(rng.normal(0.0, 1.0, family.n)) + 1e-12
        e /= np.linalg.norm(e)
        t0 = _cone_entry(family, base, e)
        t_lo = t0 + 1e-9 * (1.0 + t0)
        if eval_f(family, base + t_lo * e) >= sigma:
            crossing = base + t_lo * e  # level reached at the cone entrance
        else:
            t_hi = max(1.0, 2.0 * t_lo)
            for _ in range(200):
                if eval_f(family, base + t_hi * e) > sigma:
                    break
                t_hi *= 2.0
            else:
                continue  # level never attained along this ray
            t = _bisect_level(family, sigma, base, e, t_lo, t_hi)
            crossing = base + t * e
        worst = max(worst, float(np.linalg.norm(crossing)))
        if worst > radius:
            raise HypothesisError(
                f"level-set crossing at norm {worst:.6g} escapes B_{radius}"
            )
    return worst


@dataclass(frozen=True)
class DichotomyContext:
    """All constants entering the two-case inequality at level sigma."""

    family: FuncFamily
    sigma: float
    mu: tuple[float, ...]
    delta: float
    radius: float
    r0: float
    eps1: float
    delta0: float
    epsilon: float
    fan_norm: float  # largest sampled crossing norm from the certificate


def build_context(
    family: FuncFamily,
    sigma: float,
    mu,
    delta: float,
    radius: float,
    rays: int = 200,
    seed: int = 0,
) -> DichotomyContext:
    """Derive (R0, eps1, delta0, eps) for the dichotomy at level sigma.

    R0 is 1.2x the smallest clearance such that mu - delta 1 + R0 e_i clears
    the ball radius, stays in Gamma and has f > sigma on every axis; eps1 is
    the first value in 1/2, 1/4, ... keeping f((1 +- eps1)(mu - delta 1) +
    R0 e_i) > sigma; delta0 is the worst of those margins; eps is the
    six-term minimum.  eps depends only on (sigma, mu, delta, radius, f).
    """
    mu = lambda_tuple(mu)
    if delta <= 0.0 or radius <= 0.0:
        raise DomainError("delta and radius must be positive")
    if not in_cone(mu, family.k):
        raise DomainError("mu must lie in Gamma")
    sup_bd = boundary_sup(family)
    if not sigma > sup_bd:
        raise DomainError("level sigma must exceed the boundary sup of f")
    fan_norm = certify_bounded_intersection(
        family, sigma, mu, delta, radius, rays=rays, seed=seed
    )

    n = family.n
    mu_t = mu - delta * np.ones(n)

    def clear_ok(r0: float) -> bool:
        if np.min(mu_t) + r0 <= radius:
            return False
        for i in range(n):
            p = mu_t + r0 * _axis(n, i)
            if not in_cone(p, family.k) or eval_f(family, p) <= sigma:
                return False
        return True

    hi = max(1.0, radius - float(np.min(mu_t)) + 1.0)
    while not clear_ok(hi):
        hi *= 2.0
        if hi > 1e12:
            raise HypothesisError("no axis clearance R0 found")
    lo = 0.0
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if clear_ok(mid):
            hi = mid
        else:
            lo = mid
    r0 = _R0_MARGIN * hi

    eps1 = 0.5
    while eps1 > 1e-12:
        if _scaled_ok(family, mu_t, r0, eps1, sigma):
            break
        eps1 *= 0.5
    else:
        raise HypothesisError("no scaling slack eps1 found")

    margins = []
    for i in range(n):
        e = _axis(n, i)
        for s in (1.0 + eps1, 1.0 - eps1):
            margins.append(eval_f(family, s * mu_t + r0 * e) - sigma)
    delta0 = float(min(margins))

    eps = min(
        delta0 / (2.0 * r0),
        delta * (1.0 - eps1) / (2.0 * r0),
        eps1 / (2.0 * r0),
        delta0 / (2.0 * (1.0 + eps1)),
        delta / 2.0,
        eps1 / (2.0 * (1.0 + eps1)),
    )
    if eps <= 0.0:
        raise HypothesisError("derived epsilon not positive; margins degenerate")
    return DichotomyContext(
        family=family,
        sigma=float(sigma),
        mu=tuple(float(x) for x in mu),
        delta=float(delta),
        radius=float(radius),
        r0=float(r0),
        eps1=float(eps1),
        delta0=delta0,
        epsilon=float(eps),
        fan_norm=fan_norm,
    )


def _axis(n: int, i: int) -> np.ndarray:
    e = np.zeros(n)
    e[i] = 1.0
    return e


def _scaled_ok(family, mu_t, r0, eps1, sigma) -> bool:
    n = mu_t.shape[-1]
    for i in range(n):
        e = _axis(n, i)
        for s in (1.0 + eps1, 1.0 - eps1):
            p = s * mu_t + r0 * e
            if not in_cone(p, family.k) or eval_f(family, p) <= sigma:
                return False
    return True


@dataclass(frozen=True)
class DichotomyOutcome:
    """Which of the two case inequalities hold at a boundary point."""

    case1: bool
    case2: bool
    weight: float  # 1 + sum f_i + |sum f_i lambda_i|
    margin1: float  # lhs1 - eps * weight
    margin2: float  # lhs2 - eps * weight

    @property
    def label(self) -> str:
        if self.case1 and self.case2:
            return "Both"
        return "Case1" if self.case1 else "Case2"


def dichotomy_check(ctx: DichotomyContext, lam) -> DichotomyOutcome:
    """Evaluate both case inequalities at a level-set point.

    At exact sum f_i lambda_i = 0 the weight's absolute value is hit from the
    nonnegative side; no branch choice is needed since the two scaling
    branches only enter the proof, not the computed inequalities.  Raises
    when neither case holds beyond tolerance.
    """
    lam = lambda_tuple(lam)
    fam = ctx.family
    val = eval_f(fam, lam)
    if abs(val - ctx.sigma) > 1e-6 * (1.0 + abs(ctx.sigma)):
        raise DomainError(f"point is not on the level set: f={val} vs {ctx.sigma}")
    f = grad_f(fam, lam)
    mu = np.asarray(ctx.mu)
    weight = 1.0 + float(np.sum(f)) + abs(float(np.sum(f * lam)))
    lhs1 = float(np.sum(f * (mu - lam)))
    lhs2 = float(np.min(f))
    tol = 1e-10 * weight
    case1 = lhs1 >= ctx.epsilon * weight - tol
    case2 = lhs2 >= ctx.epsilon * weight - tol
    if not (case1 or case2):
        raise LemmaViolationError(
            f"neither dichotomy case at lambda={lam.tolist()}: "
            f"lhs1={lhs1:.6g}, lhs2={lhs2:.6g}, eps*W={ctx.epsilon * weight:.6g}"
        )
    return DichotomyOutcome(
        case1=case1,
        case2=case2,
        weight=weight,
        margin1=lhs1 - ctx.epsilon * weight,
        margin2=lhs2 - ctx.epsilon * weight,
    )


@dataclass(frozen=True)
class CSubVerdict:
    """Axis-limit test outcome; truthy iff the point certifies a subsolution."""

    is_subsolution: bool
    indeterminate: bool
    axis_sups: tuple[float, ...]

    def __bool__(self) -> bool:
        return self.is_subsolution


def is_c_subsolution(
    family: FuncFamily, lam_sub, psi_val: float, t_max: float = LADDER_T_MAX
) -> CSubVerdict:
    """Truncated axis-limit surrogate for boundedness of the level-set slice.

    True iff along every coordinate direction the truncated sup of
    f(lam_sub + t e_i) over the geometric ladder t <= t_max exceeds psi_val.
    When an axis value is still rising at t_max yet below psi_val the verdict
    is false with the indeterminate flag set.
    """
    lam_sub = lambda_tuple(lam_sub)
    if not in_cone(lam_sub, family.k):
        raise DomainError("base point must lie in Gamma")
    n = family.n
    rungs = 2.0 ** np.arange(0, int(np.log2(max(t_max, 2.0))) + 1)
    sups = np.empty(n)
    exceeded = np.zeros(n, dtype=bool)
    rising = np.zeros(n, dtype=bool)
    for i in range(n):
        e = _axis(n, i)
        vals = [eval_f(family, lam_sub)]
        for t in rungs:
            vals.append(eval_f(family, lam_sub + t * e))
            if vals[-1] > psi_val:
                exceeded[i] = True
                break
        sups[i] = max(vals)
        if not exceeded[i]:
            rise_tol = 1e-9 * (1.0 + abs(vals[-1]))
            rising[i] = (vals[-1] - vals[-2]) > rise_tol
    ok = bool(np.all(exceeded))
    return CSubVerdict(
        is_subsolution=ok,
        indeterminate=bool((~exceeded & rising).any()) and not ok,
        axis_sups=tuple(float(s) for s in sups),
    )
