"""Pulled-back operator, Neumann functional, the map F and its linearization.

All maps act on the discretization of :mod:`stripbif.domain`.  Nonlinear
products in ``x`` are formed pseudo-spectrally at the ``Nx`` collocation
nodes; derivatives in ``t`` use the odd-reduced Chebyshev matrices.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from stripbif.domain import (
    MIN_PROFILE,
    BoundaryProfile,
    DimensionError,
    LinearPair,
    StripField,
    StripGrid,
    check_positive,
    field_inner,
    profile_inner,
)


class ContractError(ValueError):
    """An input violating an operator precondition (e.g. missing Dirichlet data)."""


@dataclass(frozen=True, eq=False)
class OperatorOutput:
    """Image of F (or its linearization): interior field and top-boundary trace."""

    interior: StripField
    trace: BoundaryProfile

    def interior_sup(self, include_boundary: bool = True) -> float:
        vals = self.interior.values()
        if not include_boundary:
            vals = vals[:, :-1]
        return float(np.max(np.abs(vals)))

    def trace_sup(self) -> float:
        g = self.interior.grid
        return float(np.max(np.abs(g.Cx @ self.trace.padded(g.Nx))))

    def sup(self) -> float:
        return max(self.interior_sup(), self.trace_sup())

    def pair(self) -> LinearPair:
        return LinearPair(self.interior, self.trace)


# --------------------------------------------------------------------------
# pointwise building blocks


def _profile_values(grid: StripGrid, coeffs):
    """H, H', H'' at the x-nodes as column vectors."""
    c = np.asarray(coeffs)
    k2 = grid.k.astype(float) ** 2
    return (grid.Cx @ c)[:, None], (grid.Sx @ c)[:, None], (grid.Cx @ (-k2 * c))[:, None]


def _field_derivatives(grid: StripGrid, modes):
    k2 = (grid.k.astype(float) ** 2)[:, None]
    Mt = modes @ grid.D1.T
    Mtt = modes @ grid.D2.T
    return {
        "u": grid.Cx @ modes,
        "uxx": grid.Cx @ (-k2 * modes),
        "ut": grid.Cx @ Mt,
        "utt": grid.Cx @ Mtt,
        "uxt": grid.Sx @ Mt,
    }


def _operator_parts(grid: StripGrid, H, Hp, Hpp, d):
    """``L^H_lambda u = part0 + lambda * part1`` at the collocation points."""
    tau = grid.t[None, :]
    r = Hp / H
    q = Hpp / H
    part0 = d["u"] + H**2 * d["utt"]
    part1 = d["uxx"] + tau**2 * r**2 * d["utt"] + 2 * r * tau * d["uxt"] + q * tau * d["ut"]
    return part0, part1


def _sine_parts(grid: StripGrid, H, Hp, Hpp):
    """The same split for ``u = sin(tau)``, whose derivatives are known exactly."""
    tau = grid.t[None, :]
    r = Hp / H
    q = Hpp / H
    part0 = np.sin(tau) * (1 - H**2)
    part1 = -(tau**2) * r**2 * np.sin(tau) + q * tau * np.cos(tau)
    return part0, part1


def _neumann_factor(grid: StripGrid, H, Hp):
    """``[pi_m^2 H'^2 / H^3 + H] / sqrt(1 + pi_m^2 H'^2 / H^4)`` at the x-nodes."""
    pm2 = grid.pi_m**2
    return (pm2 * Hp**2 / H**3 + H) / np.sqrt(1 + pm2 * Hp**2 / H**4)


def residual_parts(grid: StripGrid, u_modes, h_coeffs):
    """Collocation values of F split as ``(interior0, interior1, neumann)``.

    ``F_lambda = (interior0 + lambda * interior1, neumann)``; ``h_coeffs`` is the
    perturbation, the domain map being ``1 + h``.  Complex input is allowed so
    that derivatives can be taken by the complex-step method.
    """
    c = np.asarray(h_coeffs)
    H, Hp, Hpp = _profile_values(grid, c)
    H = H + 1.0
    d = _field_derivatives(grid, u_modes)
    p0, p1 = _operator_parts(grid, H, Hp, Hpp, d)
    s0, s1 = _sine_parts(grid, H, Hp, Hpp)
    P = _neumann_factor(grid, H, Hp)[:, 0]
    # (u + sin)_tau at pi_m, with cos(pi_m) = -1 exactly
    neumann = P * (d["ut"][:, -1] - 1.0) + 1.0
    return p0 + s0, p1 + s1, neumann


# --------------------------------------------------------------------------
# operators


def apply_pulled_back_operator(lam: float, h: BoundaryProfile, u: StripField,
                               min_profile: float = MIN_PROFILE) -> StripField:
    """``L^h_lambda u`` on the reference strip, ``h`` being the domain map itself."""
    check_positive(h, min_profile)
    g = u.grid
    if not np.any(h.coeffs[1:]):
        # constant profile: the operator acts mode by mode
        k2 = g.k.astype(float) ** 2
        return StripField(g, (1 - lam * k2)[:, None] * u.modes + h.coeffs[0] ** 2 * u.modes @ g.D2.T)
    H, Hp, Hpp = _profile_values(g, h.padded(g.Nx))
    p0, p1 = _operator_parts(g, H, Hp, Hpp, _field_derivatives(g, u.modes))
    return StripField.from_values(g, p0 + lam * p1)


def normal_derivative(h: BoundaryProfile, u: StripField, x=None, side: str = "top",
                      min_profile: float = MIN_PROFILE):
    """Normal derivative on the perturbed strip expressed in reference coordinates.

    Evaluates the full formula, including the tangential ``u_x`` term, at
    ``tau = +pi_m`` (``side="top"``) or ``tau = -pi_m`` (``side="bottom"``).
    """
    check_positive(h, min_profile)
    g = u.grid
    x = g.x if x is None else np.asarray(x, dtype=float)
    tau = g.pi_m if side == "top" else -g.pi_m
    H, Hp = h(x), h(x, 1)
    ux = u.evaluate(x, tau, dx=1)
    ut = u.evaluate(x, tau, dt=1)
    pref = 1.0 / np.sqrt(1 + g.pi_m**2 * Hp**2 / H**4)
    return pref * (g.pi_m * Hp / H**2 * (ux + Hp / H * tau * ut) + np.sign(tau) * H * ut)


def neumann_functional(u: StripField, h: BoundaryProfile, min_profile: float = MIN_PROFILE):
    """``Q(u + sin t, 1 + h)`` sampled at the x-nodes; vanishes at ``(0, 0)``."""
    check_positive(h.shifted(1.0), min_profile)
    g = u.grid
    H, Hp, _ = _profile_values(g, h.padded(g.Nx))
    P = _neumann_factor(g, H + 1.0, Hp)[:, 0]
    return P * (g.Cx @ u.top_trace(1) - 1.0) + 1.0


def F(lam: float, u: StripField, h: BoundaryProfile, min_profile: float = MIN_PROFILE) -> OperatorOutput:
    """``F_lambda(u, h) = (L^{1+h}_lambda (u + sin t), Q(u + sin t, 1 + h))``."""
    check_positive(h.shifted(1.0), min_profile)
    g = u.grid
    r0, r1, nm = residual_parts(g, u.modes, h.padded(g.Nx))
    return OperatorOutput(StripField.from_values(g, r0 + lam * r1),
                          BoundaryProfile(g.Cx_inv @ nm))


def substitute_U(v: StripField, g: BoundaryProfile) -> StripField:
    """``U = v + g(x) t cos t``."""
    grid = v.grid
    gk = g.padded(grid.Nx)
    return StripField(grid, v.modes + np.outer(gk, grid.t * np.cos(grid.t)))


def linearization_at_origin(lam: float, v: StripField, g: BoundaryProfile) -> OperatorOutput:
    """``DF_lambda(0,0)(v, g)``.

    Evaluated in the expanded form
    ``(v + lam v_xx + v_tt - 2 g sin t + lam g'' t cos t, v_tau(pi_m) - g)``:
    only the Dirichlet field ``v`` is differentiated spectrally, the terms in
    ``g`` are exact.  :func:`linearization_u_form` gives the same operator
    through ``U``.
    """
    if not v.dirichlet:
        raise ContractError("the linearization acts on fields vanishing on the strip boundary")
    grid = v.grid
    k2 = grid.k.astype(np.longdouble) ** 2
    gk = g.padded(grid.Nx).astype(np.longdouble)
    t = grid.t_ext
    modes = v.modes.astype(np.longdouble)
    # extended precision keeps the boundary rows of D2 free of float64 roundoff
    interior = ((1 - lam * k2)[:, None] * modes + modes @ grid.D2_ext.T
                - 2 * np.outer(gk, np.sin(t)) - lam * np.outer(k2 * gk, t * np.cos(t)))
    return OperatorOutput(StripField(grid, interior.astype(float)), BoundaryProfile(v.top_trace(1) - g.padded(grid.Nx)))


def linearization_u_form(lam: float, v: StripField, g: BoundaryProfile) -> OperatorOutput:
    """``(U + lam U_xx + U_tt, U_tau(pi_m))`` with ``U = v + g t cos t``, all spectral."""
    grid = v.grid
    t = grid.t_ext
    U = v.modes + np.outer(g.padded(grid.Nx).astype(np.longdouble), t * np.cos(t))
    k2 = grid.k.astype(np.longdouble) ** 2
    interior = (1 - lam * k2)[:, None] * U + U @ grid.D2_ext.T
    return OperatorOutput(StripField(grid, interior.astype(float)),
                          BoundaryProfile((U @ grid.D1[-1]).astype(float)))


@dataclass(frozen=True, eq=False)
class AdjointImage:
    """Formal adjoint of the linearization applied to ``(w, z)``.

    Pairs with ``(v, g)`` as ``<field, v> + int flux v_tau(., pi_m) dx + int profile g dx``;
    ``flux`` is the density of the boundary functionals ``C(w) + L(z)``, i.e.
    ``2 w(., pi_m) + z``.
    """

    field: StripField
    flux: BoundaryProfile
    profile: BoundaryProfile

    def pair(self, other: LinearPair) -> float:
        grid = self.field.grid
        v, g = other.field, other.profile
        return (field_inner(self.field, v)
                + profile_inner(self.flux, BoundaryProfile(v.top_trace(1)), grid.Nx)
                + profile_inner(self.profile, g, grid.Nx))

    def sup(self) -> float:
        grid = self.field.grid
        return max(float(np.max(np.abs(self.field.values()))),
                   float(np.max(np.abs(grid.Cx @ self.flux.padded(grid.Nx)))),
                   float(np.max(np.abs(grid.Cx @ self.profile.padded(grid.Nx)))))


def _t_moment(grid: StripGrid, modes, weight) -> np.ndarray:
    """``int_{-pi_m}^{pi_m} weight(t) w_k(t) dt`` for each cosine mode."""
    return (modes @ grid.E.T) @ (grid.wg * weight(grid.tg))


def adjoint_apply(lam: float, w: StripField, z: BoundaryProfile) -> AdjointImage:
    """Apply the block operator ``[[1 + lam d_xx + d_tt + C, L], [lam A - 2B, K]]`` to ``(w, z)``."""
    grid = w.grid
    zk = z.padded(grid.Nx)
    if zk.size != grid.Nx:
        raise DimensionError("trace and field resolutions differ")
    k2 = grid.k.astype(float) ** 2
    field = (1 - lam * k2)[:, None] * w.modes + w.modes @ grid.D2.T
    A = -k2 * _t_moment(grid, w.modes, lambda t: t * np.cos(t))
    B = _t_moment(grid, w.modes, np.sin)
    return AdjointImage(StripField(grid, field),
                        BoundaryProfile(2 * w.modes[:, -1] + zk),
                        BoundaryProfile(lam * A - 2 * B - zk))


# --------------------------------------------------------------------------
# discrete system


def n_unknowns(grid: StripGrid) -> int:
    return grid.Nx * (grid.Nt - 1) + grid.Nx + 1


def pack(u: StripField, h: BoundaryProfile, lam: float) -> np.ndarray:
    g = u.grid
    return np.concatenate([u.modes[:, :-1].ravel(), h.padded(g.Nx), [lam]])


def unpack(grid: StripGrid, z) -> tuple[StripField, BoundaryProfile, float]:
    n = grid.Nx * (grid.Nt - 1)
    modes = np.zeros((grid.Nx, grid.Nt))
    modes[:, :-1] = np.reshape(z[:n], (grid.Nx, grid.Nt - 1))
    return StripField(grid, modes, dirichlet=True), BoundaryProfile(np.array(z[n:n + grid.Nx])), float(z[-1])


def _modes_from(grid: StripGrid, zu):
    modes = np.zeros((grid.Nx, grid.Nt), dtype=np.result_type(zu, float))
    modes[:, :-1] = np.reshape(zu, (grid.Nx, grid.Nt - 1))
    return modes


def residual_vector(grid: StripGrid, z) -> np.ndarray:
    """Collocation residual of F at the interior nodes followed by the Neumann rows."""
    n = grid.Nx * (grid.Nt - 1)
    lam = z[-1]
    r0, r1, nm = residual_parts(grid, _modes_from(grid, z[:n]), z[n:n + grid.Nx])
    return np.concatenate([(r0 + lam * r1)[:, :-1].ravel(), nm])


def jacobian(lam: float, u: StripField, h: BoundaryProfile, step: float = 1e-30) -> np.ndarray:
    """Jacobian of :func:`residual_vector` with respect to ``(u, h, lambda)``.

    The ``u`` block is assembled exactly (F is affine in ``u``), the ``h``
    columns by complex-step differentiation, and the ``lambda`` column exactly
    (F is affine in ``lambda``).
    """
    grid = u.grid
    check_positive(h.shifted(1.0))
    Nx, Nt = grid.Nx, grid.Nt
    ni = Nt - 1
    n = Nx * ni
    hk = h.padded(Nx)
    H, Hp, Hpp = _profile_values(grid, hk)
    H = H + 1.0
    tau = grid.t[None, :]
    r, q = Hp / H, Hpp / H
    a = (H**2 + lam * tau**2 * r**2)[:, :ni]
    b = (2 * lam * r * tau)[:, :ni]
    c = (lam * q * tau)[:, :ni]
    D1 = grid.D1[:ni, :ni]
    D2 = grid.D2[:ni, :ni]
    k2 = grid.k.astype(float) ** 2

    Ju = np.einsum("ik,jl->ijkl", grid.Cx * (1 - lam * k2), np.eye(ni))
    Ju += np.einsum("ij,ik,jl->ijkl", a, grid.Cx, D2)
    Ju += np.einsum("ij,ik,jl->ijkl", b, grid.Sx, D1)
    Ju += np.einsum("ij,ik,jl->ijkl", c, grid.Cx, D1)
    P = _neumann_factor(grid, H, Hp)[:, 0]
    Nu = np.einsum("i,ik,l->ikl", P, grid.Cx, grid.D1[-1, :ni])

    J = np.zeros((n + Nx, n + Nx + 1))
    J[:n, :n] = Ju.reshape(n, n)
    J[n:, :n] = Nu.reshape(Nx, n)

    z = pack(u, h, lam)
    for k in range(Nx):
        zc = z.astype(complex)
        zc[n + k] += 1j * step
        J[:, n + k] = residual_vector(grid, zc).imag / step

    _, r1, _ = residual_parts(grid, u.modes, hk)
    J[:n, -1] = r1[:, :ni].ravel()
    return J
