"""Closed-form linear analysis at the trivial branch.

Exact eigenvalues, the Fourier-mode ODE, kernel and cokernel elements, the
integrals behind the cokernel uniqueness argument and the transversality
pairing.  These serve as oracles for the discrete operators.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq

from stripbif.domain import (
    BoundaryProfile,
    LinearPair,
    ParameterError,
    StripField,
    StripGrid,
    StripParams,
    collocation_grid,
    inner_product,
    make_strip,
)
from stripbif.operators import linearization_at_origin


@dataclass(frozen=True)
class EigenvalueEntry:
    ell: int
    mu: Fraction
    sqrt_one_minus_mu: Fraction

    def __float__(self) -> float:
        return float(self.mu)


def mu_exact(m: int, ell: int) -> Fraction:
    """``1 - ((1 + 2 ell) / (1 + 2m))^2 / 4`` as a rational."""
    return 1 - Fraction(1 + 2 * ell, 1 + 2 * m) ** 2 / 4


@lru_cache(maxsize=None)
def _sequence(m: int) -> tuple[EigenvalueEntry, ...]:
    return tuple(EigenvalueEntry(ell, mu_exact(m, ell), Fraction(1 + 2 * ell, 2 * (2 * m + 1)))
                 for ell in range(2 * m + 1))


def eigenvalue_sequence(m: int) -> list[EigenvalueEntry]:
    """Bifurcation values ``mu_0(m) > ... > mu_{2m}(m)`` in exact arithmetic."""
    if m < 0:
        raise ParameterError(f"m must be non-negative, got {m}")
    return list(_sequence(int(m)))


def eigenvalue(params: StripParams) -> Fraction:
    return mu_exact(params.m, params.ell)


def _xi(params: StripParams) -> float:
    return (params.ell + 0.5) / (2 * params.m + 1)


# --------------------------------------------------------------------------
# Fourier-mode ODE


@dataclass(frozen=True)
class ModeSolution:
    """Odd solution of ``u'' + (1 - mu) u = 0``, ``u(pi_m) = -pi_m``.

    ``sub``: ``amplitude * sin(frequency t)``; ``critical``: ``-t``;
    ``super``: ``amplitude * sinh(frequency t)``.
    """

    regime: str
    mu: float
    amplitude: float
    frequency: float
    boundary_derivative: float

    @property
    def solves_neumann(self) -> bool:
        """Whether the extra condition ``u'(pi_m) = 0`` holds as well."""
        return abs(self.boundary_derivative) <= 1e-12 * max(1.0, abs(self.amplitude))

    def __call__(self, t, order: int = 0):
        t = np.asarray(t, dtype=float)
        a, f = self.amplitude, self.frequency
        if self.regime == "critical":
            return [-t, -np.ones_like(t), np.zeros_like(t)][order]
        if self.regime == "sub":
            return a * f**order * [np.sin, np.cos, lambda s: -np.sin(s)][order](f * t)
        return a * f**order * [np.sinh, np.cosh, np.sinh][order](f * t)


@dataclass(frozen=True)
class NoSolution:
    regime: str
    mu: float
    reason: str


def _is_resonant_dirichlet(mu, pi_m: float, m: int) -> bool:
    """``sin(sqrt(1 - mu) pi_m) = 0``, i.e. ``sqrt(1 - mu)(2m+1)`` is an integer."""
    if isinstance(mu, Fraction):
        q = (1 - mu) * (2 * m + 1) ** 2
        return q.denominator == 1 and math.isqrt(q.numerator) ** 2 == q.numerator
    n = math.sqrt(1 - mu) * (2 * m + 1)
    return abs(n - round(n)) < 1e-13


def mode_ode_solution(mu, params: StripParams) -> ModeSolution | NoSolution:
    """Closed-form solution of the Fourier-mode problem, or a no-solution verdict."""
    if mu < 0:
        raise ParameterError(f"mu must be non-negative, got {mu}")
    pm = params.pi_m
    if mu == 1:
        return ModeSolution("critical", 1.0, -1.0, 0.0, -1.0)
    if mu > 1:
        kappa = math.sqrt(float(mu) - 1)
        amp = -pm / math.sinh(kappa * pm)
        return ModeSolution("super", float(mu), amp, kappa, -pm * kappa / math.tanh(kappa * pm))
    if _is_resonant_dirichlet(mu, pm, params.m):
        regime = "zero" if mu == 0 else "sub"
        return NoSolution(regime, float(mu),
                          "sin(sqrt(1-mu) pi_m) = 0: the Dirichlet data -pi_m cannot be met")
    xi = math.sqrt(1 - float(mu))
    amp = -pm / math.sin(xi * pm)
    return ModeSolution("sub", float(mu), amp, xi, amp * xi * math.cos(xi * pm))


def boundary_derivative(mu, params: StripParams) -> float:
    """``V(mu) = u_mu'(pi_m)``; ``nan`` where the mode problem has no solution."""
    sol = mode_ode_solution(mu, params)
    return sol.boundary_derivative if isinstance(sol, ModeSolution) else math.nan


def discrete_boundary_derivative(mu: float, grid: StripGrid) -> float:
    """``V(mu)`` from the collocated single-mode operator ``d_tt + (1 - mu)``."""
    ni = grid.Nt - 1
    ub = -grid.pi_m
    A = grid.D2[:ni, :ni] + (1 - mu) * np.eye(ni)
    u = np.linalg.solve(A, -grid.D2[:ni, -1] * ub)
    return float(grid.D1[-1, :ni] @ u + grid.D1[-1, -1] * ub)


def discrete_zeros(grid: StripGrid, samples: int = 4000, lo: float = 1e-3, hi: float = 2.0):
    """Roots of the discrete ``V`` on ``(lo, hi)``; sign changes at poles are discarded."""
    mus = np.linspace(lo, hi, samples)
    vals = np.array([discrete_boundary_derivative(mu, grid) for mu in mus])
    roots = []
    for a, b, fa, fb in zip(mus[:-1], mus[1:], vals[:-1], vals[1:]):
        if np.sign(fa) == np.sign(fb):
            continue
        r = brentq(discrete_boundary_derivative, a, b, args=(grid,), xtol=1e-14)
        if abs(discrete_boundary_derivative(r, grid)) < 1e-6 * grid.pi_m:
            roots.append((a, b, r))
    return roots


# --------------------------------------------------------------------------
# kernel, cokernel, transversality


def kernel_profile(params: StripParams):
    """``w(t) = -(-1)^ell pi_m sin(xi t) - t cos t``."""
    sgn, pm, xi = (-1) ** params.ell, params.pi_m, _xi(params)
    return lambda t: -sgn * pm * np.sin(xi * t) - t * np.cos(t)


def kernel_pair(params: StripParams, Nx: int = 8, Nt: int = 64) -> LinearPair:
    """``(v_ell, g_ell) = (w(t) cos x, cos x)``."""
    g = collocation_grid(params, Nx, Nt)
    return LinearPair(StripField.separable(g, kernel_profile(params), 1, dirichlet=True),
                      BoundaryProfile.cosine(1, K=Nx - 1))


def cokernel_pair(params: StripParams, Nx: int = 8, Nt: int = 64) -> LinearPair:
    """``(sin(xi t) cos x, -2 (-1)^ell cos x)``."""
    g = collocation_grid(params, Nx, Nt)
    xi = _xi(params)
    return LinearPair(StripField.separable(g, lambda t: np.sin(xi * t), 1),
                      BoundaryProfile.cosine(1, -2.0 * (-1) ** params.ell, K=Nx - 1))


def cokernel_integral(mu: float, params: StripParams) -> float:
    """``int_{-pi_m}^{pi_m} (mu t cos t + 2 sin t) sin(xi t) dt``, ``xi = sqrt(1 - mu)``.

    Closed form ``2 sin(xi pi_m) - 2 xi pi_m cos(xi pi_m)``.
    """
    if not 0 < mu < 1:
        raise ParameterError(f"mu must lie in (0, 1), got {mu}")
    xi, pm = math.sqrt(1 - mu), params.pi_m
    return 2 * math.sin(xi * pm) - 2 * xi * pm * math.cos(xi * pm)


def cokernel_balance(mu: float, params: StripParams, B: float = 1.0) -> float:
    """Solvability defect for ``w = B sin(xi t)``, ``z = -2 w(pi_m)``: ``-2 B xi pi_m cos(xi pi_m)``."""
    xi, pm = math.sqrt(1 - mu), params.pi_m
    return B * cokernel_integral(mu, params) - 2 * B * math.sin(xi * pm)


def super_mode_rate(k: int, params: StripParams) -> float:
    mu = k * k * eigenvalue(params)
    if mu <= 1:
        raise ParameterError(f"k^2 mu_ell(m) = {mu} must exceed 1")
    return math.sqrt(float(mu) - 1)


def super_mode_integral(k: int, params: StripParams, A: float = 1.0) -> float:
    """Solvability defect of ``w_k = 2A sinh(kappa t)``, ``z_k = -2 w_k(pi_m)``.

    ``kappa = sqrt(k^2 mu_ell(m) - 1)``; the value is ``-4 A kappa pi_m cosh(kappa pi_m)``.
    """
    kappa, pm = super_mode_rate(k, params), params.pi_m
    return -4 * A * kappa * pm * math.cosh(kappa * pm)


def super_mode_moment(k: int, params: StripParams) -> float:
    """``int (mu t cos t + 2 sin t) sinh(kappa t) dt = 2 (sinh(kappa pi_m) - kappa pi_m cosh(kappa pi_m))``."""
    kappa, pm = super_mode_rate(k, params), params.pi_m
    return 2 * (math.sinh(kappa * pm) - kappa * pm * math.cosh(kappa * pm))


def mode_search_bound(m: int) -> int:
    """Largest ``k`` worth checking: ``k^2 mu`` must stay below 1 for every entry."""
    mu_min = min(e.mu for e in _sequence(m))
    return math.ceil(1 / math.sqrt(mu_min)) + 1


def mode_simplicity_check(m: int, ell0: int) -> bool:
    """True iff no ``k >= 2`` and ``ell`` satisfy ``k^2 mu_ell0(m) = mu_ell(m)``."""
    make_strip(m, ell0)
    seq = _sequence(m)
    target = seq[ell0].mu
    values = {e.mu for e in seq}
    return not any(k * k * target in values for k in range(2, mode_search_bound(m) + 1))


def transversality_pairing(params: StripParams) -> float:
    """``(-1)^ell pi pi_m^2``."""
    return (-1) ** params.ell * math.pi * params.pi_m**2


def discrete_transversality(params: StripParams, Nx: int = 8, Nt: int = 64) -> float:
    """``<d/dlambda DF_lambda(0,0)(v_ell, g_ell), (w_ell, z_ell)>`` on the grid.

    The linearization is affine in ``lambda``, so the derivative is the
    difference of its values at 1 and 0.
    """
    ker = kernel_pair(params, Nx, Nt)
    d = (linearization_at_origin(1.0, ker.field, ker.profile).interior
         - linearization_at_origin(0.0, ker.field, ker.profile).interior)
    cok = cokernel_pair(params, Nx, Nt)
    return inner_product(LinearPair(d, BoundaryProfile.constant(0.0)), cok)
