"""Discrete flat geometries and complex finite-difference operators.

Two domain kinds are supported, both with flat metric (torsion and curvature
vanish identically by design):

    Torus      all 2n real axes periodic, no boundary nodes;
    ProductXS  the first 2(n-1) axes periodic (factor X, a flat torus) and the
               last two axes carrying the one-complex-variable factor S with a
               marked boundary (rectangle, or annulus via one periodic axis).

Complex second derivatives use second-order centered stencils on the real
axis pairs (x^j, y^j):

    u_{j kbar} = 1/4 (D_{x^j x^k} + D_{y^j y^k}) u
                 + i/4 (D_{x^j y^k} - D_{y^j x^k}) u,

which is Hermitian by construction.  The trace is the Chern Laplacian,
1/4 of the Euclidean Laplacian per complex axis.  Dirichlet values populate a
one-node ghost ring by quadratic extrapolation through the boundary value, so
centered stencils at boundary nodes reduce to the second-order one-sided
forms.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, ResolutionError, StencilError

__all__ = [
    "INTERIOR",
    "BOUNDARY",
    "EXTERIOR",
    "GridDomain",
    "ScalarField",
    "HermitianField",
    "complex_hessian",
    "chern_laplacian",
    "gradient_sup",
    "boundary_normal_derivatives",
    "identity_chi",
    "constant_chi",
]

INTERIOR, BOUNDARY, EXTERIOR = 0, 1, 2


@dataclass(frozen=True)
class GridDomain:
    """Structured lattice over [0, L_1) x ... with per-axis periodicity."""

    n: int  # complex dimension
    shape: tuple[int, ...]  # node counts, 2n axes
    lengths: tuple[float, ...]
    periodic: tuple[bool, ...]
    kind: str
    roles: np.ndarray = field(repr=False, compare=False)  # INTERIOR/BOUNDARY/EXTERIOR

    @classmethod
    def torus(cls, n: int, shape, lengths=None) -> "GridDomain":
        shape = tuple(int(s) for s in shape)
        if len(shape) != 2 * n:
            raise DomainError("torus needs 2n node counts")
        lengths = tuple(float(x) for x in (lengths or (2.0 * np.pi,) * (2 * n)))
        roles = np.zeros(shape, dtype=np.uint8)
        return cls(n, shape, lengths, (True,) * (2 * n), "torus", roles)

    @classmethod
    def product(
        cls,
        n: int,
        x_shape=(),
        s_shape=(17, 17),
        x_lengths=None,
        s_lengths=(1.0, 1.0),
        s_periodic=(False, False),
    ) -> "GridDomain":
        """X (flat torus of complex dimension n-1) times S (one complex variable
        with boundary).  An annulus is a rectangle with the angular axis
        periodic."""
        x_shape = tuple(int(s) for s in x_shape)
        if len(x_shape) != 2 * (n - 1):
            raise DomainError("product needs 2(n-1) node counts for the X factor")
        s_shape = tuple(int(s) for s in s_shape)
        if len(s_shape) != 2:
            raise DomainError("S factor is one complex variable: 2 axes")
        if all(s_periodic):
            raise DomainError("S needs at least one non-periodic axis")
        shape = x_shape + s_shape
        x_lengths = tuple(
            float(x) for x in (x_lengths or (2.0 * np.pi,) * (2 * (n - 1)))
        )
        lengths = x_lengths + tuple(float(x) for x in s_lengths)
        periodic = (True,) * (2 * (n - 1)) + tuple(bool(p) for p in s_periodic)
        roles = np.zeros(shape, dtype=np.uint8)
        for ax in range(2 * (n - 1), 2 * n):
            if not periodic[ax]:
                sl = [slice(None)] * (2 * n)
                sl[ax] = 0
                roles[tuple(sl)] = BOUNDARY
                sl[ax] = -1
                roles[tuple(sl)] = BOUNDARY
        return cls(n, shape, lengths, periodic, "product", roles)

    @property
    def spacings(self) -> tuple[float, ...]:
        return tuple(
            L / N if p else L / (N - 1)
            for L, N, p in zip(self.lengths, self.shape, self.periodic)
        )

    def axis_coords(self, ax: int) -> np.ndarray:
        N, L, p = self.shape[ax], self.lengths[ax], self.periodic[ax]
        return np.arange(N) * (L / N) if p else np.linspace(0.0, L, N)

    def meshgrid(self) -> list[np.ndarray]:
        return list(
            np.meshgrid(*[self.axis_coords(a) for a in range(len(self.shape))],
                        indexing="ij")
        )

    @property
    def interior(self) -> np.ndarray:
        return self.roles == INTERIOR

    @property
    def boundary(self) -> np.ndarray:
        return self.roles == BOUNDARY

    @property
    def exterior(self) -> np.ndarray:
        return self.roles == EXTERIOR

    def restrict(self, keep: np.ndarray, min_width: int = 3) -> "GridDomain":
        """Sub-domain carried by a node mask (True = kept).

        Kept nodes adjacent (including diagonally, along the S axes) to a
        dropped node become boundary nodes; kept original-boundary nodes stay
        boundary.  Raises when the kept S cross-section is thinner than
        min_width nodes.
        """
        keep = np.asarray(keep, dtype=bool)
        if keep.shape != self.shape:
            raise DomainError("mask shape mismatch")
        if not keep.any():
            raise ResolutionError("empty sub-domain")
        d = len(self.shape)
        edge = np.zeros(self.shape, dtype=bool)
        s_axes = [d - 2, d - 1]
        for da in (-1, 0, 1):
            for db in (-1, 0, 1):
                if da == 0 and db == 0:
                    continue
                nb = np.roll(np.roll(keep, da, axis=s_axes[0]), db, axis=s_axes[1])
                # a roll across a non-periodic lattice edge wraps; mark those
                # positions as outside by treating the physical edge as dropped
                edge |= keep & ~nb
        for ax in s_axes:
            if not self.periodic[ax]:
                sl = [slice(None)] * d
                sl[ax] = 0
                edge[tuple(sl)] |= keep[tuple(sl)]
                sl[ax] = -1
                edge[tuple(sl)] |= keep[tuple(sl)]
        roles = np.full(self.shape, EXTERIOR, dtype=np.uint8)
        roles[keep] = INTERIOR
        roles[keep & (edge | (self.roles == BOUNDARY))] = BOUNDARY
        if not (roles == INTERIOR).any():
            raise ResolutionError("sub-domain has no interior nodes")
        # thinnest run of kept nodes along each S axis must carry the stencils
        for ax in s_axes:
            runs = keep.any(axis=tuple(i for i in range(d) if i != ax))
            if int(np.count_nonzero(runs)) < min_width:
                raise ResolutionError(
                    f"sub-domain thinner than {min_width} nodes along axis {ax}"
                )
        return GridDomain(self.n, self.shape, self.lengths, self.periodic,
                          self.kind, roles)


@dataclass
class ScalarField:
    """One real value per node; boundary nodes carry the Dirichlet datum."""

    domain: GridDomain
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.domain.shape:
            raise DomainError("field shape does not match its domain")
        if not np.all(np.isfinite(self.values)):
            raise DomainError("field values must be finite everywhere")

    @classmethod
    def zeros(cls, domain: GridDomain) -> "ScalarField":
        return cls(domain, np.zeros(domain.shape))

    @classmethod
    def full(cls, domain: GridDomain, value: float) -> "ScalarField":
        return cls(domain, np.full(domain.shape, float(value)))

    @classmethod
    def from_function(cls, domain: GridDomain, fn) -> "ScalarField":
        return cls(domain, fn(*domain.meshgrid()))

    def copy(self) -> "ScalarField":
        return ScalarField(self.domain, self.values.copy())


@dataclass
class HermitianField:
    """One n x n complex matrix per node; conjugate symmetry is enforced by
    symmetrization on construction."""

    domain: GridDomain
    values: np.ndarray  # (*shape, n, n) complex

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        n = self.domain.n
        if self.values.shape != self.domain.shape + (n, n):
            raise DomainError("hermitian field shape mismatch")
        self.values = 0.5 * (
            self.values + np.conj(np.swapaxes(self.values, -1, -2))
        )


def identity_chi(domain: GridDomain) -> HermitianField:
    n = domain.n
    v = np.zeros(domain.shape + (n, n), dtype=complex)
    v[..., np.arange(n), np.arange(n)] = 1.0
    return HermitianField(domain, v)


def constant_chi(domain: GridDomain, matrix) -> HermitianField:
    m = np.asarray(matrix, dtype=complex)
    n = domain.n
    if m.shape != (n, n):
        raise DomainError("background form must be n x n")
    m = 0.5 * (m + m.conj().T)
    v = np.broadcast_to(m, domain.shape + (n, n)).copy()
    return HermitianField(domain, v)


def _padded(u: np.ndarray, domain: GridDomain) -> np.ndarray:
    """One ghost node per axis: wrap on periodic axes, quadratic extrapolation
    through the boundary value on the others."""
    p = u
    for ax, per in enumerate(domain.periodic):
        if per:
            p = np.pad(p, [(1, 1) if a == ax else (0, 0) for a in range(p.ndim)],
                       mode="wrap")
        else:
            if domain.shape[ax] < 3:
                raise StencilError(
                    f"non-periodic axis {ax} needs at least 3 nodes"
                )
            lo = [slice(None)] * p.ndim
            lo[ax] = slice(0, 3)
            head = p[tuple(lo)]
            hi = [slice(None)] * p.ndim
            hi[ax] = slice(-3, None)
            tail = p[tuple(hi)]
            w = np.array([3.0, -3.0, 1.0])
            wshape = [1] * p.ndim
            wshape[ax] = 3
            w = w.reshape(wshape)
            ghost_lo = np.sum(head * w, axis=ax, keepdims=True)
            ghost_hi = np.sum(tail * np.flip(w, axis=ax), axis=ax, keepdims=True)
            p = np.concatenate([ghost_lo, p, ghost_hi], axis=ax)
    return p


def _shift(p: np.ndarray, ax: int, step: int, ndim: int) -> np.ndarray:
    """View of the padded array shifted by step in {-1, 0, +1} along ax."""
    sl = [slice(1, -1)] * ndim
    sl[ax] = slice(1 + step, p.shape[ax] - 1 + step)
    return p[tuple(sl)]


def _second_same(p, ax, h, ndim):
    return (_shift(p, ax, +1, ndim) - 2.0 * _shift(p, ax, 0, ndim)
            + _shift(p, ax, -1, ndim)) / h**2


def _second_mixed(p, ax_a, ax_b, ha, hb, ndim):
    sl = [slice(1, -1)] * ndim

    def sh(da, db):
        s = list(sl)
        s[ax_a] = slice(1 + da, p.shape[ax_a] - 1 + da)
        s[ax_b] = slice(1 + db, p.shape[ax_b] - 1 + db)
        return p[tuple(s)]

    return (sh(+1, +1) - sh(+1, -1) - sh(-1, +1) + sh(-1, -1)) / (4.0 * ha * hb)


def complex_hessian(u: ScalarField) -> HermitianField:
    """Per-node matrix of mixed complex second derivatives of u.

    Second-order centered stencils on the real axis pairs; exact on
    quadratics.  Values at boundary nodes use the extrapolated ghost ring and
    are meaningful for reporting only; exterior nodes are zeroed.
    """
    dom = u.domain
    n, d = dom.n, 2 * dom.n
    h = dom.spacings
    p = _padded(u.values, dom)
    out = np.zeros(dom.shape + (n, n), dtype=complex)
    for j in range(n):
        xj, yj = 2 * j, 2 * j + 1
        for k in range(j, n):
            xk, yk = 2 * k, 2 * k + 1
            if j == k:
                re = 0.25 * (_second_same(p, xj, h[xj], d)
                             + _second_same(p, yj, h[yj], d))
                out[..., j, j] = re
            else:
                re = 0.25 * (_second_mixed(p, xj, xk, h[xj], h[xk], d)
                             + _second_mixed(p, yj, yk, h[yj], h[yk], d))
                im = 0.25 * (_second_mixed(p, xj, yk, h[xj], h[yk], d)
                             - _second_mixed(p, yj, xk, h[yj], h[xk], d))
                out[..., j, k] = re + 1j * im
                out[..., k, j] = re - 1j * im
    out[dom.exterior] = 0.0
    return HermitianField(dom, out)


def chern_laplacian(u: ScalarField) -> ScalarField:
    """Trace of the complex Hessian: 1/4 of the Euclidean Laplacian per axis pair."""
    dom = u.domain
    d = 2 * dom.n
    h = dom.spacings
    p = _padded(u.values, dom)
    out = np.zeros(dom.shape)
    for j in range(dom.n):
        xj, yj = 2 * j, 2 * j + 1
        out += 0.25 * (_second_same(p, xj, h[xj], d)
                       + _second_same(p, yj, h[yj], d))
    out[dom.exterior] = 0.0
    return ScalarField(dom, out)


def gradient_sup(u: ScalarField) -> float:
    """sup over nodes of sum_j (u_{x^j}^2 + u_{y^j}^2), centered differences.

    At boundary nodes the extrapolated ghost makes the centered stencil equal
    the second-order one-sided form.
    """
    dom = u.domain
    d = 2 * dom.n
    h = dom.spacings
    p = _padded(u.values, dom)
    g2 = np.zeros(dom.shape)
    for ax in range(d):
        g2 += ((_shift(p, ax, +1, d) - _shift(p, ax, -1, d)) / (2.0 * h[ax])) ** 2
    live = ~dom.exterior
    return float(np.max(g2[live]))


def boundary_normal_derivatives(u: ScalarField):
    """Inward one-sided 3-point normal derivatives on each non-periodic face.

    Yields (axis, side, face_index_tuple, derivative_slice) where side is 0
    for the low face and -1 for the high face; the derivative points into the
    domain.
    """
    dom = u.domain
    d = len(dom.shape)
    out = []
    for ax in range(d):
        if dom.periodic[ax]:
            continue
        if dom.shape[ax] < 3:
            raise StencilError("one-sided stencil needs 3 nodes across")
        h = dom.spacings[ax]

        def take(i):
            sl = [slice(None)] * d
            sl[ax] = i
            return u.values[tuple(sl)]

        low = (-3.0 * take(0) + 4.0 * take(1) - take(2)) / (2.0 * h)
        high = (-3.0 * take(-1) + 4.0 * take(-2) - take(-3)) / (2.0 * h)
        out.append((ax, 0, low))
        out.append((ax, -1, high))
    return out
