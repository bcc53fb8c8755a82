"""Symmetric function families f on Garding cones.

Implements the five operator families

    log-det          f = sum_i log(lambda_i)                    on Gamma_n
    sigma-root(k)    f = sigma_k^(1/k)                          on Gamma_k
    log-sigma(k)     f = log sigma_k                            on Gamma_k
    sigma-quotient   f = (sigma_k / sigma_l)^(1/(k-l)), l < k   on Gamma_k
    quotient-log     f = sigma_{k+1}/sigma_k
                         + sum_{j<=k} beta_j log sigma_j        on Gamma_k

together with cone membership, analytic gradients, structural-condition
verifiers (ellipticity, concavity, the chord inequality), membership in the
sub-cone where f stays bounded below along outward rays, and the empirical
coercivity floor of |lambda| * sum_i f_i(lambda).

All evaluators are vectorized over leading axes: `lam` may have shape
(..., n).  Everything is pure and deterministic given (seed, samples).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import AdmissibilityError, DomainError, EmptyBandError

__all__ = [
    "FuncFamily",
    "ConeVerdict",
    "StructureReport",
    "lambda_tuple",
    "sigma_k",
    "elementary_all",
    "in_cone",
    "cone_margin",
    "eval_f",
    "grad_f",
    "hess_f",
    "boundary_sup",
    "check_structure",
    "well_conditioned",
    "in_gamma_g",
    "gamma_g_criteria",
    "coercivity_floor",
    "sample_cone",
]

LADDER_T_MAX = float(2 ** 20)


def lambda_tuple(values) -> np.ndarray:
    """Validate an eigenvalue tuple: length >= 2, all entries finite."""
    lam = np.asarray(values, dtype=float)
    if lam.shape[-1] < 2:
        raise DomainError("eigenvalue tuple needs at least 2 entries")
    if not np.all(np.isfinite(lam)):
        raise DomainError("eigenvalue tuple contains non-finite entries")
    return lam


def elementary_all(lam) -> np.ndarray:
    """All elementary symmetric values sigma_0..sigma_n of lam, shape (..., n+1).

    Uses the coefficient recurrence of prod_i (x + lambda_i); no subset
    enumeration, stable for moderate n.
    """
    lam = np.asarray(lam, dtype=float)
    n = lam.shape[-1]
    e = np.zeros(lam.shape[:-1] + (n + 1,))
    e[..., 0] = 1.0
    for i in range(n):
        x = lam[..., i : i + 1]
        e[..., 1:] = e[..., 1:] + x * e[..., :-1]
    return e


def sigma_k(lam, k: int) -> np.ndarray | float:
    """k-th elementary symmetric polynomial, sigma_0 := 1."""
    lam = np.asarray(lam, dtype=float)
    n = lam.shape[-1]
    if not 0 <= k <= n:
        raise DomainError(f"sigma_k needs 0 <= k <= {n}, got k={k}")
    out = elementary_all(lam)[..., k]
    return float(out) if out.ndim == 0 else out


def _sigma_all_excluding(lam) -> np.ndarray:
    """sigma_j(lam with entry i removed) for all i, j; shape (..., n, n)."""
    lam = np.asarray(lam, dtype=float)
    n = lam.shape[-1]
    out = np.zeros(lam.shape[:-1] + (n, n))
    idx = np.arange(n)
    for i in range(n):
        out[..., i, :] = elementary_all(lam[..., idx != i])
    return out


def in_cone(lam, k: int):
    """True iff sigma_j(lam) > 0 for all 1 <= j <= k (Gamma_k membership)."""
    lam = np.asarray(lam, dtype=float)
    n = lam.shape[-1]
    if not 1 <= k <= n:
        raise DomainError(f"cone index needs 1 <= k <= {n}, got {k}")
    e = elementary_all(lam)
    ok = np.all(e[..., 1 : k + 1] > 0.0, axis=-1)
    return bool(ok) if ok.ndim == 0 else ok


def cone_margin(lam, k: int):
    """min over the defining sigma_j values, a signed distance proxy."""
    e = elementary_all(np.asarray(lam, dtype=float))
    m = np.min(e[..., 1 : k + 1], axis=-1)
    return float(m) if m.ndim == 0 else m


@dataclass(frozen=True)
class FuncFamily:
    """Tagged specification of a pair (f, Gamma).

    `kind` selects the formula, `n` the ambient dimension and `k` the index of
    the natural cone Gamma_k (k = n for log-det).  `l` is the denominator
    degree of the quotient family; `betas` the log weights of the
    quotient-log family.
    """

    kind: str
    n: int
    k: int
    l: int = 0
    betas: tuple[float, ...] = field(default=())

    def __post_init__(self):
        if self.n < 2:
            raise DomainError("dimension n must be >= 2")
        if not 1 <= self.k <= self.n:
            raise DomainError("cone index k must satisfy 1 <= k <= n")
        if self.kind == "log-det" and self.k != self.n:
            raise DomainError("log-det lives on Gamma_n")
        if self.kind == "sigma-quotient" and not 0 <= self.l < self.k:
            raise DomainError("sigma-quotient needs 0 <= l < k")
        if self.kind == "quotient-log":
            b = np.asarray(self.betas, dtype=float)
            if b.shape != (self.k,) or np.any(b < 0) or b.sum() <= 0:
                raise DomainError(
                    "quotient-log needs k weights beta_j >= 0 with positive sum"
                )

    @classmethod
    def log_det(cls, n: int) -> "FuncFamily":
        return cls("log-det", n, n)

    @classmethod
    def sigma_root(cls, k: int, n: int) -> "FuncFamily":
        return cls("sigma-root", n, k)

    @classmethod
    def log_sigma(cls, k: int, n: int) -> "FuncFamily":
        return cls("log-sigma", n, k)

    @classmethod
    def sigma_quotient(cls, k: int, l: int, n: int) -> "FuncFamily":
        return cls("sigma-quotient", n, k, l=l)

    @classmethod
    def quotient_log(cls, k: int, betas, n: int) -> "FuncFamily":
        return cls("quotient-log", n, k, betas=tuple(float(b) for b in betas))

    def label(self) -> str:
        if self.kind == "sigma-root":
            return f"sigma_{self.k}^(1/{self.k})[n={self.n}]"
        if self.kind == "log-sigma":
            return f"log sigma_{self.k}[n={self.n}]"
        if self.kind == "sigma-quotient":
            return f"(sigma_{self.k}/sigma_{self.l})^(1/{self.k - self.l})[n={self.n}]"
        if self.kind == "quotient-log":
            return f"sigma_{self.k + 1}/sigma_{self.k}+sum beta_j log sigma_j[n={self.n}]"
        return f"log-det[n={self.n}]"


@dataclass(frozen=True)
class ConeVerdict:
    """Cone membership plus membership in the ray-bounded sub-cone."""

    in_gamma: bool
    in_gamma_g: bool
    margin: float
    indeterminate: bool = False

    def __post_init__(self):
        if self.in_gamma_g and not self.in_gamma:
            raise DomainError("ray-bounded sub-cone is contained in Gamma")


def _require_admissible(family: FuncFamily, lam: np.ndarray) -> None:
    ok = in_cone(lam, family.k)
    if not np.all(ok):
        raise AdmissibilityError(
            f"eigenvalues outside Gamma_{family.k} for {family.label()}"
        )


def eval_f(family: FuncFamily, lam) -> np.ndarray | float:
    """f(lambda) for the selected family; raises outside the cone."""
    lam = lambda_tuple(lam)
    if lam.shape[-1] != family.n:
        raise DomainError("eigenvalue tuple length does not match family dimension")
    _require_admissible(family, lam)
    e = elementary_all(lam)
    k = family.k
    if family.kind == "log-det":
        val = np.sum(np.log(lam), axis=-1)
    elif family.kind == "sigma-root":
        val = e[..., k] ** (1.0 / k)
    elif family.kind == "log-sigma":
        val = np.log(e[..., k])
    elif family.kind == "sigma-quotient":
        l, m = family.l, family.k - family.l
        val = (e[..., k] / e[..., l]) ** (1.0 / m)
    else:  # quotient-log
        skp1 = e[..., k + 1] if k + 1 <= family.n else np.zeros(lam.shape[:-1])
        val = skp1 / e[..., k]
        for j, beta in enumerate(family.betas, start=1):
            if beta:
                val = val + beta * np.log(e[..., j])
    return float(val) if np.ndim(val) == 0 else val


def grad_f(family: FuncFamily, lam) -> np.ndarray:
    """Gradient (f_1, ..., f_n); strictly positive on the cone (ellipticity)."""
    lam = lambda_tuple(lam)
    _require_admissible(family, lam)
    n, k = family.n, family.k
    if family.kind == "log-det":
        return 1.0 / lam
    e = elementary_all(lam)
    ex = _sigma_all_excluding(lam)  # ex[..., i, j] = sigma_j(lam | i)
    if family.kind == "sigma-root":
        sk = e[..., k : k + 1]
        return (1.0 / k) * sk ** (1.0 / k - 1.0) * ex[..., k - 1]
    if family.kind == "log-sigma":
        return ex[..., k - 1] / e[..., k : k + 1]
    if family.kind == "sigma-quotient":
        l, m = family.l, family.k - family.l
        sk, sl = e[..., k : k + 1], e[..., l : l + 1]
        dk = ex[..., k - 1]
        dl = ex[..., l - 1] if l >= 1 else np.zeros_like(dk)
        q = sk / sl
        return (1.0 / m) * q ** (1.0 / m - 1.0) * (dk * sl - sk * dl) / sl**2
    # quotient-log
    sk = e[..., k : k + 1]
    skp1 = e[..., k + 1 : k + 2] if k + 1 <= n else np.zeros_like(sk)
    dkp1 = ex[..., k] if k + 1 <= n else np.zeros_like(ex[..., 0])
    g = (dkp1 * sk - skp1 * ex[..., k - 1]) / sk**2
    for j, beta in enumerate(family.betas, start=1):
        if beta:
            g = g + beta * ex[..., j - 1] / e[..., j : j + 1]
    return g


def _sigma_pair_excluding(lam: np.ndarray) -> np.ndarray:
    """sigma_m(lam with entries i and j removed); shape (n, n, n-1)."""
    n = lam.shape[-1]
    out = np.zeros((n, n, n))
    idx = np.arange(n)
    for i in range(n):
        for j in range(i + 1, n):
            e = elementary_all(lam[(idx != i) & (idx != j)])
            out[i, j, : n - 1] = e
            out[j, i, : n - 1] = e
    return out


def _sigma_derivatives(lam: np.ndarray, top: int):
    """First and second derivatives of sigma_m for m <= top.

    d1[m, i] = sigma_{m-1}(lam | i); d2[m, i, j] = sigma_{m-2}(lam | i, j)
    for i != j and zero on the diagonal.
    """
    n = lam.shape[-1]
    ex = _sigma_all_excluding(lam)  # (n, n) -> sigma_j(lam | i)
    pair = _sigma_pair_excluding(lam)  # (n, n, n)
    d1 = np.zeros((top + 1, n))
    d2 = np.zeros((top + 1, n, n))
    for m in range(1, top + 1):
        d1[m] = ex[:, m - 1]
        if m >= 2:
            d2[m] = pair[:, :, m - 2]
            np.fill_diagonal(d2[m], 0.0)
    return d1, d2


def hess_f(family: FuncFamily, lam, method: str = "analytic",
           step: float = 1e-4) -> np.ndarray:
    """n x n second-derivative matrix of f.

    Analytic by the chain rule through the elementary symmetric polynomials;
    method="fd" gives the second-order central-difference alternative used as
    an independent cross-check on well-conditioned points.
    """
    lam = lambda_tuple(lam)
    if lam.ndim != 1:
        raise DomainError("hess_f expects a single eigenvalue tuple")
    n, k = family.n, family.k
    if method == "fd":
        h = step * (1.0 + np.abs(lam))
        hess = np.zeros((n, n))
        f0 = eval_f(family, lam)
        for i in range(n):
            ei = np.zeros(n)
            ei[i] = h[i]
            hess[i, i] = (
                eval_f(family, lam + ei) - 2.0 * f0 + eval_f(family, lam - ei)
            ) / h[i] ** 2
            for j in range(i + 1, n):
                ej = np.zeros(n)
                ej[j] = h[j]
                mixed = (
                    eval_f(family, lam + ei + ej)
                    - eval_f(family, lam + ei - ej)
                    - eval_f(family, lam - ei + ej)
                    + eval_f(family, lam - ei - ej)
                ) / (4.0 * h[i] * h[j])
                hess[i, j] = hess[j, i] = mixed
        return hess

    _require_admissible(family, lam)
    if family.kind == "log-det":
        return np.diag(-1.0 / lam**2)
    e = elementary_all(lam)

    def quotient_parts(num: int, den: int):
        """Value, gradient and Hessian of sigma_num / sigma_den."""
        d1, d2 = _sigma_derivatives(lam, num)
        sn, sd = e[num], e[den]
        gn, gd = d1[num], d1[den]
        hn, hd = d2[num], d2[den]
        q = sn / sd
        dq = gn / sd - sn * gd / sd**2
        outer_nd = np.outer(gn, gd)
        hq = (
            hn / sd
            - (outer_nd + outer_nd.T) / sd**2
            - sn * hd / sd**2
            + 2.0 * sn * np.outer(gd, gd) / sd**3
        )
        return q, dq, hq

    if family.kind == "sigma-root":
        d1, d2 = _sigma_derivatives(lam, k)
        s, g, h2 = e[k], d1[k], d2[k]
        a = 1.0 / k
        return a * s ** (a - 1.0) * h2 + a * (a - 1.0) * s ** (a - 2.0) * np.outer(g, g)
    if family.kind == "log-sigma":
        d1, d2 = _sigma_derivatives(lam, k)
        s, g, h2 = e[k], d1[k], d2[k]
        return h2 / s - np.outer(g, g) / s**2
    if family.kind == "sigma-quotient":
        m = k - family.l
        q, dq, hq = quotient_parts(k, family.l)
        a = 1.0 / m
        return a * q ** (a - 1.0) * hq + a * (a - 1.0) * q ** (a - 2.0) * np.outer(dq, dq)
    # quotient-log
    if k + 1 <= n:
        _, _, hess = quotient_parts(k + 1, k)
    else:
        # sigma_{n+1} vanishes identically: the quotient term is zero
        hess = np.zeros((n, n))
    d1, d2 = _sigma_derivatives(lam, k)
    for j, beta in enumerate(family.betas, start=1):
        if beta:
            s, g, h2 = e[j], d1[j], d2[j]
            hess = hess + beta * (h2 / s - np.outer(g, g) / s**2)
    return hess


def boundary_sup(family: FuncFamily) -> float:
    """sup of f approaching the cone boundary.

    -inf for the families carrying a log term (any sigma_j -> 0+ sends the
    value to -inf; faces where several sigma_j vanish at different rates are
    not classified more sharply), 0 for the homogeneous sigma families.
    """
    if family.kind in ("log-det", "log-sigma", "quotient-log"):
        return -np.inf
    return 0.0


def sample_cone(
    family: FuncFamily,
    count: int,
    seed: int,
    spread: float = 1.0,
    shear_limit: float = 0.95,
) -> np.ndarray:
    """Quasi-random points of Gamma, shape (count, n).

    Draws positive-orthant points from exponentials, then shears each toward
    the cone boundary by subtracting a random multiple of the all-ones vector
    while membership holds.  Deterministic given the seed.
    """
    rng = np.random.default_rng(seed)
    n, k = family.n, family.k
    pts = np.empty((count, n))
    for m in range(count):
        lam = rng.exponential(spread, n)
        # largest shift of -1 keeping the point in the cone, by doubling + bisection
        lo, hi = 0.0, 1.0
        while in_cone(lam - hi, k) and hi < 1e12:
            lo, hi = hi, 2.0 * hi
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if in_cone(lam - mid, k):
                lo = mid
            else:
                hi = mid
        pts[m] = lam - rng.uniform(0.0, shear_limit) * lo
    return pts


@dataclass(frozen=True)
class StructureReport:
    """Worst violations of the structural conditions over a sample of Gamma."""

    family: FuncFamily
    samples: int
    min_gradient: float
    max_hessian_eigenvalue: float
    hessian_scale: float
    worst_chord_violation: float
    worst_fd_gradient_mismatch: float

    @property
    def gradient_positive(self) -> bool:
        return self.min_gradient > 0.0

    @property
    def concave(self) -> bool:
        return self.max_hessian_eigenvalue <= 1e-7 * (1.0 + self.hessian_scale)

    @property
    def chord_ok(self) -> bool:
        return self.worst_chord_violation <= 1e-8

    @property
    def violations(self) -> int:
        return int(not self.gradient_positive) + int(not self.concave) + int(
            not self.chord_ok
        )


def well_conditioned(family: FuncFamily, pts: np.ndarray,
                     margin_floor: float = 0.1,
                     size_cap: float = 10.0) -> np.ndarray:
    """Mask of points far enough from the cone boundary for finite-difference
    cross-checks at the pinned steps to stay within their tolerances."""
    margins = cone_margin(pts, family.k)
    return (margins >= margin_floor) & (np.max(np.abs(pts), axis=-1) <= size_cap)


def check_structure(family: FuncFamily, samples: int, seed: int) -> StructureReport:
    """Verify ellipticity, concavity and the chord inequality on sampled points.

    Concavity is certified by negative semidefiniteness of the analytic
    Hessian up to 1e-7 * (1 + |H|); the chord inequality
    sum_i f_i(lam)(mu_i - lam_i) >= f(mu) - f(lam) is tested pairwise.  The
    central-difference gradient cross-check runs on the well-conditioned
    subsample, where the pinned step 1e-5 resolves the curvature.
    """
    if samples < 1:
        raise DomainError("samples must be >= 1")
    pts = sample_cone(family, samples, seed)
    vals = eval_f(family, pts)
    grads = grad_f(family, pts)
    min_grad = float(np.min(grads))

    max_eig, scale = -np.inf, 0.0
    for lam in pts:
        hess = hess_f(family, lam)
        scale = max(scale, float(np.linalg.norm(hess)))
        max_eig = max(max_eig, float(np.linalg.eigvalsh(hess)[-1]))

    # chord inequality over cyclically shifted pairs
    mu = np.roll(pts, 1, axis=0)
    mu_vals = np.roll(vals, 1)
    lhs = np.sum(grads * (mu - pts), axis=-1)
    chord_viol = float(np.max((mu_vals - vals) - lhs, initial=-np.inf))

    # analytic gradient vs central finite differences, conditioned subsample
    good = np.flatnonzero(well_conditioned(family, pts))
    if good.size == 0:
        good = np.array([int(np.argmax(cone_margin(pts, family.k)))])
    worst_fd = 0.0
    h = 1e-5
    for idx in good[:25]:
        lam, g = pts[idx], grads[idx]
        fd = np.empty(family.n)
        for i in range(family.n):
            ei = np.zeros(family.n)
            ei[i] = h * (1.0 + abs(lam[i]))
            fd[i] = (eval_f(family, lam + ei) - eval_f(family, lam - ei)) / (2 * ei[i])
        worst_fd = max(
            worst_fd, float(np.max(np.abs(fd - g) / (1.0 + np.abs(g))))
        )

    return StructureReport(
        family=family,
        samples=samples,
        min_gradient=min_grad,
        max_hessian_eigenvalue=max_eig,
        hessian_scale=scale,
        worst_chord_violation=max(chord_viol, 0.0),
        worst_fd_gradient_mismatch=worst_fd,
    )


def _ladder(t_max: float) -> np.ndarray:
    rungs = int(np.floor(np.log2(max(t_max, 2.0))))
    return 2.0 ** np.arange(0, rungs + 1)


def _ray_tail_bounded(family: FuncFamily, lam: np.ndarray, t_max: float) -> bool:
    """True iff f(t*lam) looks bounded below on the geometric t-ladder."""
    ladder = _ladder(t_max)
    vals = np.array([eval_f(family, t * lam) for t in ladder])
    tol = 1e-9 * (1.0 + abs(vals[0]))
    tail = np.diff(vals[len(vals) // 2 :])
    return bool(np.all(tail >= -tol))


def gamma_g_criteria(
    family: FuncFamily,
    lam,
    t_max: float = LADDER_T_MAX,
    probes: int = 32,
    seed: int = 0,
) -> tuple[bool, bool, bool]:
    """The three equivalent ray-boundedness criteria, evaluated numerically.

    (1) f(t*lam) bounded below on the ladder;
    (2) limsup_t f(t*lam)/t >= 0, the limsup approximated on the ladder tail;
    (3) sum_i f_i(mu) lam_i >= 0 for sampled mu in Gamma, where the probe set
        contains quasi-random cone points at several scales and far-out points
        of the tested ray itself (where the pairing degenerates first).
    """
    lam = lambda_tuple(lam)
    ladder = _ladder(t_max)
    vals = np.array([eval_f(family, t * lam) for t in ladder])
    scale = 1.0 + abs(float(vals[0]))
    crit1 = bool(np.all(np.diff(vals[len(vals) // 2 :]) >= -1e-9 * scale))
    slopes = vals[-4:] / ladder[-4:]
    crit2 = bool(np.max(slopes) >= -1e-7 * scale)
    mus = [sample_cone(family, probes, seed)]
    for t_big in (2.0 ** 8, 2.0 ** 14, 2.0 ** 20):
        mus.append(t_big * mus[0][: max(probes // 4, 1)])
        mus.append(t_big * lam[None, :])
    mus = np.vstack(mus)
    pairings = np.sum(grad_f(family, mus) * lam, axis=-1)
    crit3 = bool(np.min(pairings) >= -1e-9 * (1.0 + np.max(np.abs(pairings))))
    return crit1, crit2, crit3


def in_gamma_g(
    family: FuncFamily,
    lam,
    t_max: float = LADDER_T_MAX,
    probes: int = 32,
    seed: int = 0,
) -> ConeVerdict:
    """Membership in the sub-cone where f stays bounded below along the ray t*lam.

    Analytic where possible: always true for the log-det, sigma-root,
    log-sigma and sigma-quotient families (f(t*lam) -> +inf on their cones);
    for quotient-log true iff sigma_{k+1}(lam) >= 0, since the quotient term
    scales linearly in t and dominates the logarithms.  The numeric ladder and
    the pairing criterion cross-check the verdict; a conflict within tolerance
    is flagged indeterminate.
    """
    lam = lambda_tuple(lam)
    if t_max <= 1.0:
        raise DomainError("t_max must exceed 1")
    if not in_cone(lam, family.k):
        raise AdmissibilityError("point outside Gamma")
    margin = cone_margin(lam, family.k)

    if family.kind == "quotient-log":
        if family.k + 1 <= family.n:
            analytic = bool(sigma_k(lam, family.k + 1) >= 0.0)
        else:
            analytic = True  # sigma_{n+1} vanishes identically
    else:
        analytic = True

    crit1, _crit2, crit3 = gamma_g_criteria(family, lam, t_max, probes, seed)
    indeterminate = False
    if analytic != crit1 or analytic != crit3:
        # re-examine: trust the analytic verdict unless both numerics disagree
        if crit1 == crit3 and crit1 != analytic:
            indeterminate = True
    return ConeVerdict(
        in_gamma=True,
        in_gamma_g=analytic,
        margin=float(margin),
        indeterminate=indeterminate,
    )


def coercivity_floor(
    family: FuncFamily,
    sigma_lo: float,
    sigma_hi: float,
    r1: float,
    samples: int,
    seed: int = 0,
) -> float:
    """Empirical minimum of |lambda| * sum_i f_i over the band sigma_lo <= f <= sigma_hi.

    Samples cone directions, sweeps a geometric radius ladder starting exactly
    at |lambda| = r1, and keeps points inside the band.  Raises when the band
    catches no sample.
    """
    if sigma_lo > sigma_hi:
        raise DomainError("sigma_lo must not exceed sigma_hi")
    if r1 <= 0:
        raise DomainError("radius floor must be positive")
    dirs = sample_cone(family, samples, seed)
    dirs = dirs / np.linalg.norm(dirs, axis=-1, keepdims=True)
    radii = r1 * 2.0 ** np.arange(0, 24)
    best = np.inf
    for mu in dirs:
        for r in radii:
            lam = r * mu
            if not in_cone(lam, family.k):
                continue
            val = eval_f(family, lam)
            if sigma_lo <= val <= sigma_hi:
                best = min(best, r * float(np.sum(grad_f(family, lam))))
    if not np.isfinite(best):
        raise EmptyBandError(
            f"no sample with f in [{sigma_lo}, {sigma_hi}] and |lambda| >= {r1}"
        )
    return float(best)
