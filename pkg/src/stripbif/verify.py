"""Checks on the physical perturbed strip and the Schiffer rescaling.

A branch point ``(lambda, u, h)`` gives the physical solution
``v(x, t) = (sin + u)(x, H(x) t)`` with ``H = 1 + h`` on
``{|t| < pi_m / H(x)}``.  Derivatives of ``v`` come from spectral evaluation of
the pulled-back field and the chain rule; the boundary normal is taken from
the curve ``t = +-pi_m / H(x)`` itself.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from stripbif.continuation import BranchPoint
from stripbif.domain import StripParams, check_positive


@dataclass(frozen=True)
class VerificationReport:
    dirichlet_sup: float
    neumann_top_sup: float
    neumann_bottom_sup: float
    pde_sup: float
    u_min: float
    u_max: float
    sign_changing: bool
    oddness_defect: float
    neumann_antisymmetry: float

    def as_dict(self) -> dict:
        return asdict(self)

    def passes(self, tol: float) -> bool:
        return max(self.dirichlet_sup, self.neumann_top_sup, self.neumann_bottom_sup,
                   self.pde_sup, self.oddness_defect) <= tol


class PhysicalSolution:
    """``v(x, t) = u~(x, H(x) t)`` on ``Omega_H``, ``u~ = sin(tau) + u``."""

    def __init__(self, point: BranchPoint, params: StripParams):
        self.point = point
        self.params = params
        self.H = point.h.shifted(1.0)
        check_positive(self.H)
        self.pi_m = params.pi_m

    def boundary(self, x):
        """Top boundary height ``pi_m / H(x)``."""
        return self.pi_m / self.H(x)

    def _ref(self, x, tau, dx=0, dt=0):
        u = self.point.u.evaluate(x, tau, dx, dt)
        if dx == 0:
            u = u + [np.sin, np.cos, lambda s: -np.sin(s)][dt](tau)
        return u

    def derivatives(self, x, t):
        """``v`` and its first and second partial derivatives at physical points."""
        x, t = np.broadcast_arrays(np.asarray(x, float), np.asarray(t, float))
        H, Hp, Hpp = self.H(x), self.H(x, 1), self.H(x, 2)
        tau = H * t
        # keep tau exactly on +-pi_m where the caller evaluates on the boundary
        tau = np.clip(tau, -self.pi_m, self.pi_m)
        f = {(i, j): self._ref(x, tau, i, j) for i, j in [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)]}
        return {
            "v": f[0, 0],
            "vx": f[1, 0] + Hp * t * f[0, 1],
            "vt": H * f[0, 1],
            "vtt": H**2 * f[0, 2],
            "vxx": f[2, 0] + 2 * Hp * t * f[1, 1] + Hpp * t * f[0, 1] + Hp**2 * t**2 * f[0, 2],
        }

    def __call__(self, x, t):
        return self.derivatives(x, t)["v"]

    def pde_residual(self, x, t):
        """``-lambda v_xx - v_tt - v``."""
        d = self.derivatives(x, t)
        return -self.point.lam * d["vxx"] - d["vtt"] - d["v"]

    def normal_derivative(self, x, side: int = 1):
        """Outward normal derivative on ``t = side * pi_m / H(x)`` from the curve geometry."""
        x = np.asarray(x, float)
        gamma = self.boundary(x)
        dgamma = -self.pi_m * self.H(x, 1) / self.H(x) ** 2
        d = self.derivatives(x, side * gamma)
        # t = gamma(x) has outward normal (-gamma', 1); t = -gamma(x) has (-gamma', -1)
        n_x, n_t = -dgamma, float(side)
        return (n_x * d["vx"] + n_t * d["vt"]) / np.sqrt(1 + dgamma**2)

    def sample(self, nx: int = 64, nrho: int = 33):
        """Values on the physical grid ``(x_i, rho_j pi_m / H(x_i))``, ``rho`` in ``[-1, 1]``."""
        x = np.linspace(-np.pi, np.pi, nx)
        rho = np.cos(np.pi * np.arange(nrho) / (nrho - 1))[::-1]
        X = np.repeat(x[:, None], nrho, axis=1)
        T = rho[None, :] * self.boundary(x)[:, None]
        return X, T, self(X, T)


def pushforward_solution(point: BranchPoint, params: StripParams) -> PhysicalSolution:
    return PhysicalSolution(point, params)


def check_overdetermined(point: BranchPoint, params: StripParams, samples: int = 64) -> VerificationReport:
    """Residuals of the overdetermined problem on the physical domain."""
    sol = pushforward_solution(point, params)
    x = np.linspace(-np.pi, np.pi, samples, endpoint=False) + np.pi / samples
    gamma = sol.boundary(x)
    dirichlet = max(np.max(np.abs(sol(x, gamma))), np.max(np.abs(sol(x, -gamma))))
    top = sol.normal_derivative(x, 1)
    bottom = sol.normal_derivative(x, -1)

    # interior points strictly inside, on Gauss-Chebyshev radial fractions
    nr = 24
    rho = np.cos(np.pi * (np.arange(nr) + 0.5) / nr)
    X = np.repeat(x[:, None], nr, axis=1)
    T = rho[None, :] * gamma[:, None]
    pde = sol.pde_residual(X, T)
    vals = sol(X, T)
    mirror = sol(X, -T)
    return VerificationReport(
        dirichlet_sup=float(dirichlet),
        neumann_top_sup=float(np.max(np.abs(top + 1))),
        neumann_bottom_sup=float(np.max(np.abs(bottom - 1))),
        pde_sup=float(np.max(np.abs(pde))),
        u_min=float(vals.min()),
        u_max=float(vals.max()),
        sign_changing=bool(vals.min() < 0 < vals.max()),
        oddness_defect=float(np.max(np.abs(vals + mirror))),
        neumann_antisymmetry=float(np.max(np.abs(top + bottom))),
    )


@dataclass(frozen=True, eq=False)
class RescaledSolution:
    """``W(y, zeta) = v(lambda y, sqrt(lambda) zeta)`` on ``{(x / lambda, t / sqrt(lambda))}``."""

    physical: PhysicalSolution
    lam: float

    def __call__(self, y, zeta):
        return self.physical(self.lam * np.asarray(y), np.sqrt(self.lam) * np.asarray(zeta))

    def boundary(self, y):
        return self.physical.boundary(self.lam * np.asarray(y)) / np.sqrt(self.lam)

    def helmholtz_residual(self, y, zeta):
        """``-W_yy - W_zeta_zeta - lambda W`` by the chain rule."""
        lam = self.lam
        d = self.physical.derivatives(lam * np.asarray(y), np.sqrt(lam) * np.asarray(zeta))
        return -(lam**2) * d["vxx"] - lam * d["vtt"] - lam * d["v"]

    def normal_derivative(self, y, side: int = 1):
        """Outward normal derivative of ``W`` on ``zeta = side * boundary(y)``."""
        lam = self.lam
        y = np.asarray(y, float)
        x = lam * y
        P = self.physical
        dgamma = np.sqrt(lam) * (-P.pi_m * P.H(x, 1) / P.H(x) ** 2)  # slope of the rescaled curve
        d = P.derivatives(x, side * P.boundary(x))
        Wy, Wz = lam * d["vx"], np.sqrt(lam) * d["vt"]
        return (-dgamma * Wy + side * Wz) / np.sqrt(1 + dgamma**2)

    def sample(self, ny: int = 64, nrho: int = 33):
        y = np.linspace(-np.pi, np.pi, ny) / self.lam
        rho = np.cos(np.pi * np.arange(nrho) / (nrho - 1))[::-1]
        Y = np.repeat(y[:, None], nrho, axis=1)
        Z = rho[None, :] * self.boundary(y)[:, None]
        return Y, Z, self(Y, Z)


def schiffer_rescale(point: BranchPoint, params: StripParams, samples: int = 64):
    """Rescaled solution together with its residual and top Neumann data."""
    W = RescaledSolution(pushforward_solution(point, params), point.lam)
    y = (np.linspace(-np.pi, np.pi, samples, endpoint=False) + np.pi / samples) / point.lam
    nr = 24
    rho = np.cos(np.pi * (np.arange(nr) + 0.5) / nr)
    Y = np.repeat(y[:, None], nr, axis=1)
    Z = rho[None, :] * W.boundary(y)[:, None]
    return W, {
        "lambda": point.lam,
        "residual_sup": float(np.max(np.abs(W.helmholtz_residual(Y, Z)))),
        "neumann_top": W.normal_derivative(y, 1),
        "neumann_bottom": W.normal_derivative(y, -1),
        "y": y,
    }
