import math

import numpy as np
import pytest
import sympy as sp

from stripbif import linear_analysis as la
from stripbif.domain import (
    BoundaryProfile,
    DimensionError,
    DomainError,
    LinearPair,
    StripField,
    collocation_grid,
    inner_product,
    make_strip,
    pair_norm,
)
from stripbif.operators import (
    ContractError,
    F,
    adjoint_apply,
    apply_pulled_back_operator,
    jacobian,
    linearization_at_origin,
    linearization_u_form,
    n_unknowns,
    neumann_functional,
    normal_derivative,
    pack,
    residual_vector,
    substitute_U,
    unpack,
)

P00 = make_strip(0, 0)


def random_profile(rng, K=3, size=0.15, base=1.0):
    c = np.zeros(K + 1)
    c[0] = base
    c[1:] = size * rng.uniform(-1, 1, K) / np.arange(1, K + 1)
    return BoundaryProfile(c)


def sympy_profile(h: BoundaryProfile, x):
    return sum(sp.Float(float(c)) * sp.cos(k * x) for k, c in enumerate(h.coeffs))


def as_vector(out, grid):
    """An OperatorOutput in the layout of :func:`residual_vector`."""
    return np.concatenate([out.interior.values()[:, :-1].ravel(), grid.Cx @ out.trace.padded(grid.Nx)])


# --- the pulled-back operator ---------------------------------------------------------

def test_constant_profile_reduces_to_flat_operator(rng):
    g = collocation_grid(P00)
    u = StripField.random(g, rng, kmax=5)
    lam = 0.6
    got = apply_pulled_back_operator(lam, BoundaryProfile.constant(1.0), u)
    k2 = (np.arange(g.Nx) ** 2)[:, None]
    want = u.modes - lam * k2 * u.modes + u.modes @ g.D2.T
    assert np.allclose(got.modes, want, rtol=0, atol=1e-13)


@pytest.mark.parametrize("lam", [0.1, 0.75, 2.0])
def test_flat_operator_annihilates_sine(lam):
    g = collocation_grid(make_strip(1, 0))
    u = StripField.from_function(g, lambda x, t: np.sin(t))
    assert np.max(np.abs(apply_pulled_back_operator(lam, BoundaryProfile.constant(1.0), u).values())) <= 1e-9


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_sine_against_physical_chain_rule(seed):
    """Oracle: v(x,t) = sin(h(x) t) on the physical strip, then t = tau / h(x)."""
    rng = np.random.default_rng(seed)
    h = random_profile(rng)
    lam = 0.75
    x, t, tau = sp.symbols("x t tau")
    hs = sympy_profile(h, x)
    v = sp.sin(hs * t)
    Lv = v + lam * sp.diff(v, x, 2) + sp.diff(v, t, 2)
    oracle = sp.lambdify((x, tau), Lv.subs(t, tau / hs), "numpy")
    closed = sp.lambdify((x, tau), (sp.sin(tau) * (1 - hs**2 - lam * tau**2 * sp.diff(hs, x) ** 2 / hs**2)
                                     + lam * sp.diff(hs, x, 2) / hs * tau * sp.cos(tau)), "numpy")

    g = collocation_grid(P00)
    u = StripField.from_function(g, lambda x, t: np.sin(t))
    out = apply_pulled_back_operator(lam, h, u)
    X, T = np.meshgrid(g.x, g.t, indexing="ij")
    assert np.max(np.abs(out.values() - oracle(X, T))) <= 1e-9
    assert np.max(np.abs(closed(X, T) - oracle(X, T))) <= 1e-12
    # off-grid in t (including t < 0); x stays on reflected nodes since 1/h is not band-limited
    xs = rng.choice(np.concatenate([g.x, -g.x, g.x + 2 * math.pi]), 30)
    ts = rng.uniform(-math.pi, math.pi, 30)
    assert np.max(np.abs(out(xs, ts) - oracle(xs, ts))) <= 1e-8


def test_symmetry_preservation(rng):
    g = collocation_grid(P00)
    out = apply_pulled_back_operator(1.1, random_profile(rng), StripField.random(g, rng))
    xs, ts = rng.uniform(-4, 4, 25), rng.uniform(0, math.pi, 25)
    v = out(xs, ts)
    assert np.array_equal(out(xs, -ts), -v)
    assert np.array_equal(out(-xs, ts), v)


def test_mode_decoupling_at_flat_profile(rng):
    g = collocation_grid(P00)
    for k in range(g.Nx):
        u = StripField.separable(g, lambda t: np.sin(0.3 * t) + t**3, k)
        out = apply_pulled_back_operator(0.4, BoundaryProfile.constant(1.0), u)
        others = np.delete(out.modes, k, axis=0)
        assert np.all(others == 0)


def test_pulled_back_operator_guards_profile():
    g = collocation_grid(P00)
    with pytest.raises(DomainError):
        apply_pulled_back_operator(1.0, BoundaryProfile([0.05]), StripField.zeros(g))


# --- normal derivative and the Neumann functional ---------------------------------------

def test_normal_derivative_examples():
    g = collocation_grid(make_strip(1, 0))
    u = StripField.from_function(g, lambda x, t: np.sin(t))
    assert np.allclose(normal_derivative(BoundaryProfile.constant(1.0), u), -1.0, atol=1e-10)
    assert np.allclose(normal_derivative(BoundaryProfile.constant(2.0), u), -2.0, atol=1e-10)


def test_normal_derivative_antisymmetric(rng):
    g = collocation_grid(P00)
    u = StripField.random(g, rng, dirichlet=True)
    for h in (BoundaryProfile.constant(1.0), random_profile(rng)):
        top = normal_derivative(h, u, side="top")
        bottom = normal_derivative(h, u, side="bottom")
        assert np.max(np.abs(top + bottom)) <= 1e-12 * np.max(np.abs(top))


def test_normal_derivative_matches_geometric_normal(rng):
    """Outward normals of t = +-pi/H(x) are (-gamma', +-1): the x-component does not flip."""
    h = random_profile(rng, size=0.3)
    x, t = sp.symbols("x t")
    hs = sympy_profile(h, x)
    a = 1 + sp.Rational(3, 10) * sp.cos(x)
    v = a * sp.sin(hs * t)
    gamma = sp.pi / hs
    for side, name in ((1, "top"), (-1, "bottom")):
        n = sp.Matrix([-sp.diff(gamma, x), side])
        grad = sp.Matrix([sp.diff(v, x), sp.diff(v, t)]).subs(t, side * gamma)
        dn = sp.lambdify(x, (grad.dot(n) / sp.sqrt(n.dot(n))), "numpy")
        g = collocation_grid(P00)
        u = StripField.from_function(g, lambda X, T: (1 + 0.3 * np.cos(X)) * np.sin(T))
        xs = np.linspace(-3, 3, 17)
        assert np.max(np.abs(normal_derivative(h, u, xs, side=name) - dn(xs))) <= 1e-9


def test_neumann_functional_examples():
    g = collocation_grid(P00)
    zero = StripField.zeros(g)
    assert np.all(neumann_functional(zero, BoundaryProfile.constant(0.0)) == 0)
    for c in (-0.3, 0.2, 1.5):
        assert np.allclose(neumann_functional(zero, BoundaryProfile.constant(c)), -c, atol=1e-14)


def test_neumann_functional_directional_derivative(rng):
    g = collocation_grid(P00)
    v = StripField.random(g, rng, dirichlet=True)
    gp = BoundaryProfile(rng.standard_normal(4))
    e = 1e-6
    fd = (neumann_functional(e * v, e * gp) - neumann_functional(-e * v, -e * gp)) / (2 * e)
    exact = g.Cx @ (v.top_trace(1) - gp.padded(g.Nx))
    assert np.max(np.abs(fd - exact)) <= 1e-7 * max(1.0, np.max(np.abs(exact)))


def test_neumann_functional_guard():
    g = collocation_grid(P00)
    with pytest.raises(DomainError):
        neumann_functional(StripField.zeros(g), BoundaryProfile([-0.5, 0.6]))


# --- F, U, linearization ---------------------------------------------------------------

@pytest.mark.parametrize("lam", [0.2, 0.75, 3.0])
def test_F_vanishes_on_trivial_branch(lam):
    g = collocation_grid(make_strip(1, 1))
    assert F(lam, StripField.zeros(g), BoundaryProfile.constant(0.0)).sup() <= 1e-15


@pytest.mark.parametrize("m, ell", [(0, 0), (1, 2)])
def test_F_is_quadratic_along_kernel(m, ell):
    params = make_strip(m, ell)
    mu = float(la.eigenvalue(params))
    ker = la.kernel_pair(params)
    norms = [F(mu, e * ker.field, e * ker.profile).sup() for e in (1e-2, 5e-3, 2.5e-3)]
    for a, b in zip(norms, norms[1:]):
        assert 3.5 <= a / b <= 4.5


def test_substitute_U_examples():
    g = collocation_grid(make_strip(1, 1))
    zero = StripField.zeros(g)
    assert np.all(substitute_U(zero, BoundaryProfile.constant(0.0)).modes == 0)
    U = substitute_U(zero, BoundaryProfile.cosine(1))
    assert np.array_equal(U.modes[1], g.t * np.cos(g.t))
    assert np.all(np.delete(U.modes, 1, axis=0) == 0)
    for ell in range(3):
        params = make_strip(1, ell)
        ker = la.kernel_pair(params)
        xi = (ell + 0.5) / 3
        want = -((-1) ** ell) * params.pi_m * np.sin(xi * g.t)
        assert np.max(np.abs(substitute_U(ker.field, ker.profile).modes[1] - want)) <= 1e-13


@pytest.mark.parametrize("m, ell", [(0, 0), (1, 0), (1, 1), (2, 4)])
def test_linearization_on_kernel(m, ell):
    params = make_strip(m, ell)
    mu = float(la.eigenvalue(params))
    ker = la.kernel_pair(params)
    assert linearization_at_origin(mu, ker.field, ker.profile).sup() <= 1e-8
    g = ker.field.grid
    xi = (ell + 0.5) / (2 * m + 1)
    for lam in (0.1, 1.7):
        out = linearization_at_origin(lam, ker.field, ker.profile)
        want = np.zeros((g.Nx, g.Nt))
        want[1] = (lam - mu) * (-1) ** ell * params.pi_m * np.sin(xi * g.t)
        assert np.max(np.abs(out.interior.modes - want)) <= 1e-8
        assert out.trace_sup() <= 1e-8


def test_linearization_of_zero():
    g = collocation_grid(P00)
    out = linearization_at_origin(0.5, StripField.zeros(g), BoundaryProfile.constant(0.0))
    assert out.sup() == 0


def test_linearization_requires_dirichlet(rng):
    g = collocation_grid(P00)
    with pytest.raises(ContractError):
        linearization_at_origin(0.5, StripField.random(g, rng), BoundaryProfile.constant(0.0))


@pytest.mark.parametrize("lam", [0.3, 0.75, 1.2])
def test_expanded_and_U_forms_agree(rng, lam):
    for m in (0, 1):
        g = collocation_grid(make_strip(m, 0))
        for _ in range(5):
            v = StripField.random(g, rng, dirichlet=True)
            gp = BoundaryProfile(rng.standard_normal(4))
            a = linearization_at_origin(lam, v, gp)
            b = linearization_u_form(lam, v, gp)
            assert np.max(np.abs(a.interior.values() - b.interior.values())) <= 1e-10
            assert np.max(np.abs(g.Cx @ (a.trace.padded(g.Nx) - b.trace.padded(g.Nx)))) <= 1e-10


def test_linearization_is_derivative_of_F(rng):
    g = collocation_grid(P00)
    v = StripField.random(g, rng, dirichlet=True)
    gp = BoundaryProfile(0.3 * rng.standard_normal(3))
    lam, e = 0.9, 1e-6
    fd = (as_vector(F(lam, e * v, e * gp), g) - as_vector(F(lam, -e * v, -e * gp), g)) / (2 * e)
    lin = as_vector(linearization_at_origin(lam, v, gp), g)
    assert np.max(np.abs(fd - lin)) <= 1e-6 * max(1.0, np.max(np.abs(lin)))


# --- adjoint ---------------------------------------------------------------------------

@pytest.mark.parametrize("m, ell", [(0, 0), (1, 0), (1, 1), (1, 2)])
def test_adjoint_annihilates_cokernel(m, ell):
    params = make_strip(m, ell)
    cok = la.cokernel_pair(params)
    assert adjoint_apply(float(la.eigenvalue(params)), cok.field, cok.profile).sup() <= 1e-8


def test_adjoint_of_zero():
    g = collocation_grid(P00)
    assert adjoint_apply(0.75, StripField.zeros(g, False), BoundaryProfile.constant(0.0)).sup() == 0


def test_adjoint_identity_small(rng):
    g = collocation_grid(make_strip(1, 0))
    for lam in (0.3, 0.75, 1.2):
        vg = LinearPair(StripField.random(g, rng, dirichlet=True), BoundaryProfile(rng.standard_normal(3)))
        wz = LinearPair(StripField.random(g, rng), BoundaryProfile(rng.standard_normal(3)))
        lhs = inner_product(linearization_at_origin(lam, vg.field, vg.profile).pair(), wz)
        rhs = adjoint_apply(lam, wz.field, wz.profile).pair(vg)
        assert abs(lhs - rhs) <= 1e-9 * pair_norm(vg) * pair_norm(wz)


def test_range_orthogonal_to_cokernel_random(rng):
    for m, ell in [(0, 0), (1, 2)]:
        params = make_strip(m, ell)
        g = collocation_grid(params)
        cok = la.cokernel_pair(params)
        mu = float(la.eigenvalue(params))
        for _ in range(10):
            vg = LinearPair(StripField.random(g, rng, dirichlet=True), BoundaryProfile(rng.standard_normal(4)))
            val = inner_product(linearization_at_origin(mu, vg.field, vg.profile).pair(), cok)
            assert abs(val) <= 1e-8 * pair_norm(vg)


def test_adjoint_dimension_mismatch():
    g = collocation_grid(P00, 4, 16)
    with pytest.raises(DimensionError):
        adjoint_apply(0.5, StripField.zeros(g), BoundaryProfile(np.ones(6)))


# --- Jacobian ----------------------------------------------------------------------------

def test_pack_unpack_round_trip(rng):
    g = collocation_grid(P00, 4, 16)
    z = rng.standard_normal(n_unknowns(g))
    u, h, lam = unpack(g, z)
    assert np.array_equal(pack(u, h, lam), z)


@pytest.mark.parametrize("m, ell", [(0, 0), (1, 1)])
def test_jacobian_at_origin_matches_linearization(m, ell):
    params = make_strip(m, ell)
    mu = float(la.eigenvalue(params))
    g = collocation_grid(params, 6, 24)
    zero_u, zero_h = StripField.zeros(g), BoundaryProfile.constant(0.0)
    J = jacobian(mu, zero_u, zero_h)
    n = n_unknowns(g) - 1
    for i in range(n):
        e = np.zeros(n + 1)
        e[i] = 1.0
        v, h, _ = unpack(g, e)
        col = as_vector(linearization_at_origin(mu, v, h), g)
        assert np.max(np.abs(J[:, i] - col)) <= 1e-6 * max(1.0, np.max(np.abs(col)))

    ker = la.kernel_pair(params, 6, 24)
    phi = pack(ker.field, ker.profile, 0.0)[:-1]
    assert np.max(np.abs(J[:, :-1] @ phi)) <= 1e-7
    # lambda-derivative of the linearization along the kernel
    dJ = jacobian(1.0, zero_u, zero_h)[:, :-1] - jacobian(0.0, zero_u, zero_h)[:, :-1]
    want = np.zeros((g.Nx, g.Nt))
    want[1] = (-1) ** ell * params.pi_m * np.sin((ell + 0.5) / (2 * m + 1) * g.t)
    want = np.concatenate([(g.Cx @ want)[:, :-1].ravel(), np.zeros(g.Nx)])
    assert np.max(np.abs(dJ @ phi - want)) <= 1e-8
    # the lambda column vanishes on the trivial branch
    assert np.max(np.abs(J[:, -1])) <= 1e-15


def test_jacobian_against_central_differences(rng):
    g = collocation_grid(P00, 6, 24)
    u = StripField.random(g, rng, dirichlet=True) * 0.05
    h = BoundaryProfile(0.05 * rng.standard_normal(4))
    lam = 0.8
    J = jacobian(lam, u, h)
    z = pack(u, h, lam)
    Jfd = np.empty_like(J)
    e = 1e-6
    for i in range(z.size):
        dz = np.zeros_like(z)
        dz[i] = e
        Jfd[:, i] = (residual_vector(g, z + dz) - residual_vector(g, z - dz)) / (2 * e)
    assert np.linalg.norm(J - Jfd) <= 1e-5 * np.linalg.norm(J)


def test_jacobian_guard():
    g = collocation_grid(P00, 4, 16)
    with pytest.raises(DomainError):
        jacobian(0.5, StripField.zeros(g), BoundaryProfile([-0.95]))
