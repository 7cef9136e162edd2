"""Amplitude-parameterized continuation of the bifurcating branch.

The corrector works with the rescaled unknowns ``w = (u, h) / s`` and ``lambda``
and solves

    F_lambda(s w) / s = 0,     <w, (v, g)> = ||(v, g)||^2,

so the bordered Jacobian stays regular as ``s -> 0``; at ``s = 0`` the system
reduces to the linearization plus the amplitude constraint.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from stripbif.domain import (
    MIN_PROFILE,
    BoundaryProfile,
    DomainError,
    LinearPair,
    StripField,
    StripGrid,
    StripParams,
    collocation_grid,
    inner_product,
    profile_minimum,
)
from stripbif.linear_analysis import eigenvalue, kernel_pair
from stripbif.operators import jacobian, pack, residual_vector, unpack

log = logging.getLogger(__name__)


class StepFailure(RuntimeError):
    """Newton did not converge; the caller should shrink the step."""


class DomainDegeneracy(StepFailure, DomainError):
    """An iterate left the positivity guard ``1 + h >= min_profile``."""


@dataclass(frozen=True)
class ContinuationConfig:
    s_max: float = 0.05
    ds: float = 1e-3
    newton_tol: float = 1e-10
    max_newton_iters: int = 12
    Nx: int = 8
    Nt: int = 64
    min_profile: float = MIN_PROFILE
    min_ds: float = 1e-6
    max_halvings: int = 8

    def __post_init__(self):
        for name in ("s_max", "ds", "newton_tol", "max_newton_iters", "Nx", "Nt", "min_profile", "min_ds"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.ds > self.s_max:
            raise ValueError("ds must not exceed s_max")


@dataclass(frozen=True, eq=False)
class BranchPoint:
    s: float
    lam: float
    u: StripField
    h: BoundaryProfile
    residual_interior: float
    residual_neumann: float
    newton_iters: int

    @property
    def residual(self) -> float:
        return max(self.residual_interior, self.residual_neumann)

    @property
    def grid(self) -> StripGrid:
        return self.u.grid


class Branch(list):
    """Branch points ordered by ``|s|``; ``failure`` is set when tracing stopped early."""

    def __init__(self, points=(), failure: str | None = None):
        super().__init__(points)
        self.failure = failure


# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class _Setup:
    grid: StripGrid
    phi: np.ndarray  # kernel element as a (u, h) unknown vector
    phi_norm2: float
    c: np.ndarray  # row computing <w, phi>
    mu: float


@lru_cache(maxsize=32)
def _setup(m: int, ell: int, Nx: int, Nt: int) -> _Setup:
    params = StripParams(m, ell)
    grid = collocation_grid(params, Nx, Nt)
    ker = kernel_pair(params, Nx, Nt)
    phi = pack(ker.field, ker.profile, 0.0)[:-1]
    ni = Nt - 1
    cu = grid.wx[:, None] * (ker.field.modes @ grid.W)[:, :ni]
    ch = grid.wx * ker.profile.padded(Nx)
    return _Setup(grid, phi, inner_product(ker, ker), np.concatenate([cu.ravel(), ch]),
                  float(eigenvalue(params)))


def _setup_for(params: StripParams, config: ContinuationConfig) -> _Setup:
    return _setup(params.m, params.ell, config.Nx, config.Nt)


def _split_residual(grid: StripGrid, r: np.ndarray) -> tuple[float, float]:
    n = grid.Nx * (grid.Nt - 1)
    return float(np.max(np.abs(r[:n]))), float(np.max(np.abs(r[n:])))


def _point(st: _Setup, s: float, w: np.ndarray, lam: float, iters: int) -> BranchPoint:
    z = np.concatenate([s * w, [lam]])
    u, h, _ = unpack(st.grid, z)
    ri, rn = _split_residual(st.grid, residual_vector(st.grid, z))
    return BranchPoint(float(s), float(lam), u, h, ri, rn, iters)


def initial_point(params: StripParams, config: ContinuationConfig = ContinuationConfig()) -> BranchPoint:
    """The trivial state ``(0, 0)`` at ``lambda = mu_ell(m)``."""
    st = _setup_for(params, config)
    return _point(st, 0.0, np.zeros_like(st.phi), st.mu, 0)


def _guard(st: _Setup, s: float, w: np.ndarray, config: ContinuationConfig):
    n = st.grid.Nx * (st.grid.Nt - 1)
    h = BoundaryProfile(s * w[n:]).shifted(1.0)
    if profile_minimum(h) < config.min_profile:
        raise DomainDegeneracy(f"1 + h drops below {config.min_profile} at s = {s}")


def _system(st: _Setup, s: float, y: np.ndarray):
    """Rescaled residual ``G`` and the unscaled collocation residual ``R``."""
    w, lam = y[:-1], y[-1]
    z = np.concatenate([s * w, [lam]])
    R = residual_vector(st.grid, z)
    G = np.concatenate([R / s, [st.c @ w - st.phi_norm2]])
    return G, R


def _system_jacobian(st: _Setup, s: float, y: np.ndarray) -> np.ndarray:
    w, lam = y[:-1], y[-1]
    u, h, _ = unpack(st.grid, np.concatenate([s * w, [lam]]))
    J = jacobian(lam, u, h)
    JG = np.zeros((J.shape[0] + 1, J.shape[1]))
    JG[:-1, :-1] = J[:, :-1]
    JG[:-1, -1] = J[:, -1] / s
    JG[-1, :-1] = st.c
    return JG


def _converged(st, s, R, y, tol) -> bool:
    return (np.max(np.abs(R)) <= tol
            and abs(s) * abs(st.c @ y[:-1] - st.phi_norm2) <= tol)


def _correct(st: _Setup, config: ContinuationConfig, s: float, y0: np.ndarray) -> tuple[np.ndarray, int]:
    y = np.array(y0, dtype=float)
    _guard(st, s, y[:-1], config)
    G, R = _system(st, s, y)
    for it in range(config.max_newton_iters + 1):
        if _converged(st, s, R, y, config.newton_tol):
            return y, it
        if it == config.max_newton_iters:
            break
        dy = np.linalg.solve(_system_jacobian(st, s, y), -G)
        merit = np.max(np.abs(G))
        alpha = 1.0
        for _ in range(config.max_halvings + 1):
            trial = y + alpha * dy
            try:
                _guard(st, s, trial[:-1], config)
                Gt, Rt = _system(st, s, trial)
            except DomainDegeneracy:
                Gt = None
            if Gt is not None and np.max(np.abs(Gt)) < merit:
                break
            alpha /= 2
        else:
            raise StepFailure(f"line search failed at s = {s} (merit {merit:.3e})")
        y, G, R = trial, Gt, Rt
    raise StepFailure(f"no convergence in {config.max_newton_iters} iterations at s = {s} "
                      f"(residual {np.max(np.abs(R)):.3e})")


def _state(st: _Setup, point: BranchPoint, s: float) -> np.ndarray:
    z = pack(point.u, point.h, point.lam)
    if point.s == 0 or not np.any(z[:-1]):
        return np.concatenate([st.phi, [point.lam]])
    return np.concatenate([z[:-1] / s, [point.lam]])


def newton_step(params: StripParams, config: ContinuationConfig, guess: BranchPoint,
                s_target: float) -> BranchPoint:
    """Solve the bordered system at amplitude ``s_target`` starting from ``guess``.

    ``guess`` holds the predicted ``(u, h, lambda)`` at ``s_target``; a trivial
    guess starts from the kernel direction.
    """
    st = _setup_for(params, config)
    if s_target == 0:
        return initial_point(params, config)
    y, iters = _correct(st, config, s_target, _state(st, guess, s_target))
    return _point(st, s_target, y[:-1], y[-1], iters)


def trace_branch(params: StripParams, config: ContinuationConfig = ContinuationConfig(),
                 sign: int = 1) -> Branch:
    """Points from ``s = 0`` to ``sign * s_max`` with secant prediction and step halving."""
    st = _setup_for(params, config)
    branch = Branch([initial_point(params, config)])
    # history of (s, w, lambda); at s = 0 the rescaled solution is the kernel element
    hist = [(0.0, st.phi, st.mu)]
    s, ds = 0.0, config.ds
    while s < config.s_max * (1 - 1e-12):
        s_new = min(round(s + ds, 15), config.s_max)
        target = sign * s_new
        if len(hist) == 1:
            y0 = np.concatenate([st.phi, [st.mu]])
        else:
            (s0, w0, l0), (s1, w1, l1) = hist[-2], hist[-1]
            r = (target - s1) / (s1 - s0)
            y0 = np.concatenate([w1 + r * (w1 - w0), [l1 + r * (l1 - l0)]])
        try:
            y, iters = _correct(st, config, target, y0)
        except StepFailure as exc:
            ds /= 2
            log.debug("step to s=%g failed (%s); ds -> %g", target, exc, ds)
            if ds < config.min_ds:
                branch.failure = f"step size fell below {config.min_ds} at s = {sign * s}: {exc}"
                return branch
            continue
        hist.append((target, y[:-1], y[-1]))
        branch.append(_point(st, target, y[:-1], y[-1], iters))
        s = s_new
        ds = min(2 * ds, config.ds)
    return branch


def remainder(point: BranchPoint, params: StripParams) -> LinearPair:
    """``(u, h) / s - (v_ell, g_ell)``; orthogonal to the kernel along the branch."""
    ker = kernel_pair(params, point.grid.Nx, point.grid.Nt)
    return LinearPair(point.u * (1 / point.s) - ker.field, point.h * (1 / point.s) - ker.profile)
