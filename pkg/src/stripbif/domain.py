"""Reference strip, perturbed strips and their spectral discretization.

Fields on the strip ``(-pi, pi) x (-pi_m, pi_m)`` with ``pi_m = (2m+1) pi`` are
stored as truncated cosine series in ``x`` whose coefficients are sampled at
Chebyshev-extrema nodes on ``[0, pi_m]``.  Only ``t >= 0`` is stored; the
negative half is obtained by odd reflection, so evenness in ``x`` and oddness
in ``t`` hold by construction.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial import chebyshev as cheb
from scipy.linalg import toeplitz


class ParameterError(ValueError):
    """Invalid strip or discretization parameters."""


class DomainError(ValueError):
    """A profile that does not define a valid perturbed strip."""


class DimensionError(ValueError):
    """Objects living on incompatible discretizations."""


#: Strict positivity threshold for profiles used as domain maps.
MIN_PROFILE = 0.1


@dataclass(frozen=True)
class StripParams:
    m: int
    ell: int

    @property
    def pi_m(self) -> float:
        return (2 * self.m + 1) * math.pi


def make_strip(m: int, ell: int) -> StripParams:
    if int(m) != m or m < 0:
        raise ParameterError(f"m must be a non-negative integer, got {m!r}")
    if int(ell) != ell or not 0 <= ell <= 2 * m:
        raise ParameterError(f"ell must satisfy 0 <= ell <= 2m = {2 * m}, got {ell!r}")
    return StripParams(int(m), int(ell))


# --------------------------------------------------------------------------
# boundary profiles


def _readonly(a) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


def _reduce_x(x):
    """Map x into [0, pi] using 2pi-periodicity and evenness; also return the sign."""
    x = np.asarray(x, dtype=float)
    r = np.remainder(np.abs(x), 2 * np.pi)
    flip = r > np.pi
    r = np.where(flip, 2 * np.pi - r, r)
    return r, np.where(x < 0, -1.0, 1.0) * np.where(flip, -1.0, 1.0)


def cos_basis(n: int, x, order: int = 0) -> np.ndarray:
    """``d^order/dx^order cos(kx)`` for k < n, stacked on a trailing axis."""
    ax, sgn = _reduce_x(x)
    k = np.arange(n)
    phase = ax[..., None] * k
    if order % 4 == 0:
        basis = np.cos(phase)
    elif order % 4 == 1:
        basis = -np.sin(phase)
    elif order % 4 == 2:
        basis = -np.cos(phase)
    else:
        basis = np.sin(phase)
    basis = basis * k.astype(float) ** order
    return basis * sgn[..., None] if order % 2 else basis


def cos_series(coeffs, x, order: int = 0):
    """Evaluate the ``order``-th derivative of ``sum_k c_k cos(kx)``."""
    c = np.asarray(coeffs)
    return cos_basis(c.size, x, order) @ c


@dataclass(frozen=True, eq=False)
class BoundaryProfile:
    """Even, 2pi-periodic profile ``h(x) = sum_k h_k cos(kx)``."""

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.coeffs))
        if c.ndim != 1 or c.size == 0:
            raise DimensionError("profile coefficients must be a non-empty vector")
        object.__setattr__(self, "coeffs", _readonly(c))

    @classmethod
    def constant(cls, value: float, K: int = 0) -> BoundaryProfile:
        c = np.zeros(K + 1)
        c[0] = value
        return cls(c)

    @classmethod
    def cosine(cls, k: int = 1, amplitude: float = 1.0, K: int | None = None) -> BoundaryProfile:
        c = np.zeros(max(k, K or 0) + 1)
        c[k] = amplitude
        return cls(c)

    @property
    def K(self) -> int:
        return self.coeffs.size - 1

    def __call__(self, x, order: int = 0):
        return cos_series(self.coeffs, x, order)

    def padded(self, n: int) -> np.ndarray:
        if self.coeffs.size > n:
            if np.any(self.coeffs[n:] != 0):
                raise DimensionError(f"profile with {self.coeffs.size} modes does not fit in {n}")
            return self.coeffs[:n]
        return np.concatenate([self.coeffs, np.zeros(n - self.coeffs.size, dtype=self.coeffs.dtype)])

    def shifted(self, c: float = 1.0) -> BoundaryProfile:
        """The profile ``c + h``; the domain map built from a perturbation ``h``."""
        out = np.array(self.coeffs)
        out[0] += c
        return BoundaryProfile(out)

    def __add__(self, other: BoundaryProfile) -> BoundaryProfile:
        n = max(self.coeffs.size, other.coeffs.size)
        return BoundaryProfile(self.padded(n) + other.padded(n))

    def __sub__(self, other: BoundaryProfile) -> BoundaryProfile:
        return self + (-1.0) * other

    def __mul__(self, a: float) -> BoundaryProfile:
        return BoundaryProfile(a * self.coeffs)

    __rmul__ = __mul__

    def __neg__(self) -> BoundaryProfile:
        return (-1.0) * self


def eval_profile(h: BoundaryProfile, x, order: int = 0):
    """``h(x)`` or its term-wise derivative of the given order."""
    return h(x, order)


def profile_minimum(h: BoundaryProfile, samples: int = 512) -> float:
    x = np.linspace(0.0, np.pi, samples)
    return float(np.min(np.real(h(x))))


def check_positive(h: BoundaryProfile, threshold: float = MIN_PROFILE) -> None:
    lo = profile_minimum(h)
    if not lo >= threshold:
        raise DomainError(f"profile minimum {lo:.6g} is below the positivity guard {threshold}")


def _require_positive(h: BoundaryProfile) -> None:
    if not profile_minimum(h) > 0:
        raise DomainError("profile must be strictly positive to define a strip")


def map_to_physical(h: BoundaryProfile, x, tau):
    """``(x, tau) -> (x, tau / h(x))``, the parametrization of the perturbed strip."""
    _require_positive(h)
    return np.asarray(x), np.asarray(tau) / h(x)


def map_to_reference(h: BoundaryProfile, x, t):
    """Inverse of :func:`map_to_physical`."""
    _require_positive(h)
    return np.asarray(x), h(x) * np.asarray(t)


# --------------------------------------------------------------------------
# collocation grid


def chebdif(n: int, order: int, dtype=np.longdouble):
    """Chebyshev differentiation matrices on ``n`` extrema nodes (Weideman & Reddy).

    Nodes run from +1 down to -1.  Differences use trigonometric identities and
    the flipping trick; the recursion runs in extended precision so that the
    float64 entries are correctly rounded.
    """
    eye = np.eye(n, dtype=bool)
    n1, n2 = n // 2, int(math.ceil(n / 2))
    k = np.arange(n)
    pi = np.arccos(dtype(-1))
    th = k.astype(dtype) * pi / (n - 1)
    x = np.sin(pi * np.arange(n - 1, -n, -2).astype(dtype) / (2 * (n - 1)))
    T = np.tile(th / 2, (n, 1))
    DX = 2 * np.sin(T.T + T) * np.sin(T - T.T)
    DX[n1:, :] = -np.flipud(np.fliplr(DX[0:n2, :]))
    DX[eye] = 1
    C = toeplitz((-1.0) ** k).astype(dtype)
    C[0, :] *= 2
    C[-1, :] *= 2
    C[:, 0] *= 0.5
    C[:, -1] *= 0.5
    Z = 1 / DX
    Z[eye] = 0
    D = np.eye(n, dtype=dtype)
    out = []
    for ell in range(order):
        D = (ell + 1) * Z * (C * np.tile(np.diag(D), (n, 1)).T - D)
        D[eye] = -D.sum(axis=1)
        out.append(D)
    return x, out


def clenshaw_curtis(n: int) -> np.ndarray:
    """Clenshaw-Curtis weights on ``x_j = cos(j pi / n)``, j = 0..n."""
    theta = np.pi * np.arange(n + 1) / n
    w = np.zeros(n + 1)
    v = np.ones(n - 1)
    if n % 2 == 0:
        w[0] = w[n] = 1.0 / (n**2 - 1)
        for k in range(1, n // 2):
            v -= 2 * np.cos(2 * k * theta[1:-1]) / (4 * k**2 - 1)
        v -= np.cos(n * theta[1:-1]) / (n**2 - 1)
    else:
        w[0] = w[n] = 1.0 / n**2
        for k in range(1, (n - 1) // 2 + 1):
            v -= 2 * np.cos(2 * k * theta[1:-1]) / (4 * k**2 - 1)
    w[1:-1] = 2 * v / n
    return w


class StripGrid:
    """Collocation grid and the spectral operators built on it.

    ``x`` holds the ``Nx`` midpoint nodes ``pi (2i+1) / (2Nx)`` of ``(0, pi)``;
    reflected to ``[0, 2pi)`` they form the uniform ``2Nx``-point grid.  ``t``
    holds the ``Nt`` positive Chebyshev-extrema nodes ``pi_m sin(pi j / (2Nt))``,
    ``j = 1..Nt``, ascending, so ``t[-1] = pi_m`` is the top boundary.
    """

    def __init__(self, m: int, Nx: int, Nt: int):
        if Nx < 2 or Nt < 4:
            raise ParameterError(f"grid too small: Nx={Nx} (>=2), Nt={Nt} (>=4)")
        self.m, self.Nx, self.Nt = m, Nx, Nt
        self.pi_m = pi_m = (2 * m + 1) * math.pi

        k = np.arange(Nx)
        self.k = k
        self.x = np.pi * (2 * np.arange(Nx) + 1) / (2 * Nx)
        self.Cx = np.cos(np.outer(self.x, k))
        self.Sx = -np.sin(np.outer(self.x, k)) * k
        self.Cx_inv = np.linalg.inv(self.Cx)
        # exact x-integrals over (-pi, pi) of products of cosine modes
        self.wx = np.where(k == 0, 2 * np.pi, np.pi)

        N = 2 * Nt
        s_full, (D1f, D2f) = chebdif(N + 1, 2)
        pos = np.arange(Nt - 1, -1, -1)  # full-grid indices of s = sin(pi j/2Nt), ascending
        neg = N - pos
        pm_ext = (2 * m + 1) * np.arccos(np.longdouble(-1))
        self.s = s_full[pos].astype(float)
        self.t = (pm_ext * s_full[pos]).astype(float)
        self.D1 = ((D1f[np.ix_(pos, pos)] - D1f[np.ix_(pos, neg)]) / pm_ext).astype(float)
        self.D2_ext = (D2f[np.ix_(pos, pos)] - D2f[np.ix_(pos, neg)]) / pm_ext**2
        self.D2 = self.D2_ext.astype(float)
        self.t_ext = pm_ext * s_full[pos]

        # nodal values -> coefficients of T_1, T_3, ..., T_{2Nt-1}: discrete
        # orthogonality on the extrema grid, evaluated in extended precision
        n = 2 * np.arange(Nt) + 1
        j = Nt - 1 - np.arange(Nt)  # full-grid index of each positive node
        cj = np.where(j == 0, 0.5, 1.0).astype(np.longdouble)
        pi_ext = np.arccos(np.longdouble(-1))
        V_inv = (4 / np.longdouble(N)) * cj * np.cos(np.outer(n, j).astype(np.longdouble) * pi_ext / N)
        self.V_inv = V_inv.astype(float)

        # Gram matrix of the nodal basis, int_{-pi_m}^{pi_m} p_i p_j dt, in closed form
        def _int_T(q):
            return np.where(q % 2 == 0, 2 / (1 - q.astype(np.longdouble) ** 2), 0)

        a, b = np.meshgrid(n, n, indexing="ij")
        M = pm_ext * (_int_T(a + b) + _int_T(np.abs(a - b))) / 2
        self.W = (V_inv.T @ M @ V_inv).astype(float)

        # Gauss-Legendre on [0, pi_m] for moments against known weights
        g, gw = np.polynomial.legendre.leggauss(2 * (2 * Nt + 8))
        keep = g > 0
        self.tg = pi_m * g[keep]
        self.wg = 2 * pi_m * gw[keep]  # doubled: integrands are even in t
        self.E = self.interp_matrix(self.tg)

        # Clenshaw-Curtis on the full t-grid for generic integrands
        self.t_full = pi_m * np.cos(np.pi * np.arange(N + 1) / N)
        self.wt_full = pi_m * clenshaw_curtis(N)
        self.x_full = np.pi * (2 * np.arange(2 * Nx) + 1) / (2 * Nx)
        self.wx_full = np.full(2 * Nx, np.pi / Nx)

    @property
    def key(self):
        return (self.m, self.Nx, self.Nt)

    def __eq__(self, other):
        return isinstance(other, StripGrid) and self.key == other.key

    def __hash__(self):
        return hash(self.key)

    def __repr__(self):
        return f"StripGrid(m={self.m}, Nx={self.Nx}, Nt={self.Nt})"

    @property
    def interior(self) -> slice:
        return slice(0, self.Nt - 1)

    def interp_matrix(self, t) -> np.ndarray:
        """Matrix taking nodal values to values of the interpolant at ``0 <= t <= pi_m``."""
        s = np.clip(np.asarray(t, dtype=float) / self.pi_m, -1.0, 1.0)
        return np.cos(np.outer(np.arccos(s), 2 * np.arange(self.Nt) + 1)) @ self.V_inv

    def cheb_coeffs(self, values) -> np.ndarray:
        """Full Chebyshev coefficient arrays (last axis) of the odd interpolants."""
        a = np.asarray(values) @ self.V_inv.T
        c = np.zeros(a.shape[:-1] + (2 * self.Nt,), dtype=a.dtype)
        c[..., 1::2] = a
        return c

    def integrate(self, f) -> float:
        """Quadrature of ``f(x, t)`` over ``(-pi, pi) x (-pi_m, pi_m)``.

        Uniform midpoint rule in ``x`` (exact for trigonometric polynomials of
        degree < 2Nx) and Clenshaw-Curtis in ``t``.
        """
        X, T = np.meshgrid(self.x_full, self.t_full, indexing="ij")
        vals = np.asarray(f(X, T), dtype=float)
        return float(self.wx_full @ vals @ self.wt_full)


@lru_cache(maxsize=32)
def _grid(m: int, Nx: int, Nt: int) -> StripGrid:
    return StripGrid(m, Nx, Nt)


def collocation_grid(params: StripParams, Nx: int = 8, Nt: int = 64) -> StripGrid:
    return _grid(params.m, int(Nx), int(Nt))


# --------------------------------------------------------------------------
# fields


@dataclass(frozen=True, eq=False)
class StripField:
    """``u(x, t) = sum_k U_k(t) cos(kx)`` with ``modes[k, j] = U_k(t_j)``."""

    grid: StripGrid
    modes: np.ndarray
    dirichlet: bool = False

    def __post_init__(self):
        a = np.asarray(self.modes)
        if a.shape != (self.grid.Nx, self.grid.Nt):
            raise DimensionError(f"modes shape {a.shape} != ({self.grid.Nx}, {self.grid.Nt})")
        if self.dirichlet:
            a = np.array(a)
            a[:, -1] = 0.0
        object.__setattr__(self, "modes", _readonly(a))

    @classmethod
    def zeros(cls, grid: StripGrid, dirichlet: bool = True) -> StripField:
        return cls(grid, np.zeros((grid.Nx, grid.Nt)), dirichlet)

    @classmethod
    def from_function(cls, grid: StripGrid, f, dirichlet: bool = False) -> StripField:
        """Sample ``f(x, t)`` (even in x, odd in t) and project onto cosine modes."""
        X, T = np.meshgrid(grid.x, grid.t, indexing="ij")
        return cls.from_values(grid, f(X, T), dirichlet)

    @classmethod
    def from_values(cls, grid: StripGrid, values, dirichlet: bool = False) -> StripField:
        return cls(grid, grid.Cx_inv @ np.asarray(values), dirichlet)

    @classmethod
    def separable(cls, grid: StripGrid, profile_t, k: int = 1, dirichlet: bool = False) -> StripField:
        """The field ``w(t) cos(kx)``."""
        modes = np.zeros((grid.Nx, grid.Nt))
        modes[k] = profile_t(grid.t)
        return cls(grid, modes, dirichlet)

    @classmethod
    def random(cls, grid: StripGrid, rng: np.random.Generator, dirichlet: bool = False,
               kmax: int = 3, jmax: int = 3) -> StripField:
        """Smooth random field: ``sum c_kj sin(a_j t) cos(kx)`` over a few modes.

        ``a_j = j pi / pi_m`` when ``dirichlet`` (vanishing on the boundary),
        ``(j - 1/2) pi / pi_m`` otherwise.
        """
        j = np.arange(1, jmax + 1) - (0.0 if dirichlet else 0.5)
        basis = np.sin(np.outer(j * np.pi / grid.pi_m, grid.t))
        modes = np.zeros((grid.Nx, grid.Nt))
        kmax = min(kmax, grid.Nx)
        modes[:kmax] = rng.standard_normal((kmax, jmax)) @ basis
        return cls(grid, modes, dirichlet)

    @property
    def Nx(self) -> int:
        return self.grid.Nx

    @property
    def Nt(self) -> int:
        return self.grid.Nt

    def values(self) -> np.ndarray:
        """Values at the (x-node, t-node) collocation points."""
        return self.grid.Cx @ self.modes

    def _compatible(self, other: StripField):
        if self.grid != other.grid:
            raise DimensionError(f"fields on {self.grid} and {other.grid}")

    def __add__(self, other: StripField) -> StripField:
        self._compatible(other)
        return StripField(self.grid, self.modes + other.modes, self.dirichlet and other.dirichlet)

    def __sub__(self, other: StripField) -> StripField:
        return self + (-1.0) * other

    def __mul__(self, a: float) -> StripField:
        return StripField(self.grid, a * self.modes, self.dirichlet)

    __rmul__ = __mul__

    def __neg__(self) -> StripField:
        return (-1.0) * self

    def top_trace(self, dt: int = 0) -> np.ndarray:
        """Cosine coefficients of ``d^dt u / dt^dt`` at ``t = pi_m``."""
        if dt == 0:
            return np.array(self.modes[:, -1])
        D = self.grid.D1 if dt == 1 else self.grid.D2
        return self.modes @ D[-1]

    def evaluate(self, x, t, dx: int = 0, dt: int = 0):
        """Evaluate a partial derivative of the field at arbitrary points.

        The interpolant in ``t`` is the odd Chebyshev series through the
        nodes, reflected exactly for ``t < 0``.
        """
        x, t = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(t, dtype=float))
        g = self.grid
        coef = g.cheb_coeffs(self.modes)
        if dt:
            coef = cheb.chebder(coef, dt, axis=-1) / g.pi_m**dt
        s = np.abs(t) / g.pi_m
        # T-series per mode evaluated at |t|
        tv = cheb.chebval(s.ravel(), coef.T).reshape((g.Nx,) + s.shape)
        if dt % 2 == 0:
            tv = tv * np.where(t < 0, -1.0, 1.0)
        return np.einsum("...k,k...->...", cos_basis(g.Nx, x, dx), tv)

    def __call__(self, x, t):
        return self.evaluate(x, t)


@dataclass(frozen=True, eq=False)
class LinearPair:
    """A (field, profile) pair; kernel and cokernel elements live here."""

    field: StripField
    profile: BoundaryProfile

    def __post_init__(self):
        self.profile.padded(self.field.Nx)

    def __add__(self, other: LinearPair) -> LinearPair:
        return LinearPair(self.field + other.field, self.profile + other.profile)

    def __mul__(self, a: float) -> LinearPair:
        return LinearPair(a * self.field, a * self.profile)

    __rmul__ = __mul__


def field_inner(a: StripField, b: StripField) -> float:
    """``int int a b dx dt`` over the full strip cell, exact for the interpolants."""
    a._compatible(b)
    g = a.grid
    return float(np.sum(g.wx * np.einsum("kj,jl,kl->k", a.modes, g.W, b.modes)))


def profile_inner(g: BoundaryProfile, h: BoundaryProfile, n: int | None = None) -> float:
    """``int_{-pi}^{pi} g h dx`` for cosine series."""
    n = n or max(g.coeffs.size, h.coeffs.size)
    k = np.arange(n)
    w = np.where(k == 0, 2 * np.pi, np.pi)
    return float(np.sum(w * g.padded(n) * h.padded(n)))


def inner_product(a: LinearPair, b: LinearPair) -> float:
    """Scalar product ``<(v,g),(w,h)> = int int v w + int g h``."""
    if a.field.grid != b.field.grid:
        raise DimensionError(f"pairs on {a.field.grid} and {b.field.grid}")
    return field_inner(a.field, b.field) + profile_inner(a.profile, b.profile, a.field.Nx)


def pair_norm(a: LinearPair) -> float:
    return math.sqrt(inner_product(a, a))
