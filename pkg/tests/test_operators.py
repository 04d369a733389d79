"""Generator assembly: conservative divergence-form operator, drift-form
modal action, the weight identity relating them, nonlinear phases, and the
exact linear propagators."""

import math

import numpy as np
import pytest
from scipy.ndimage import gaussian_filter1d

from ounls.grids import BoxGrid
from ounls.hermite import build_basis
from ounls.models import DiscretizationSpec, ModelSpec
from ounls.observables import mass
from ounls.operators import (
    NonFiniteFieldError,
    apply_div_operator,
    apply_nonlinearity,
    apply_ou_nondiv,
    build_div_operator,
    build_linear_propagator,
    build_machinery,
    verify_div_identity,
)


@pytest.fixture(scope="module")
def div_op():
    return build_div_operator(513, 12.0)


@pytest.fixture(scope="module")
def basis64():
    return build_basis(64)


@pytest.fixture(scope="module")
def nondiv_mach():
    return build_machinery(ModelSpec("nondiv", 1, 4), DiscretizationSpec(n_x=128))


@pytest.fixture(scope="module")
def div_mach():
    return build_machinery(
        ModelSpec("div", 1, 4), DiscretizationSpec(n_x=128, div_nodes=257)
    )


def test_model_spec_validation():
    with pytest.raises(ValueError, match="positive even integer"):
        ModelSpec("div", 1, 3)
    with pytest.raises(ValueError):
        ModelSpec("div", 1, -2)
    with pytest.raises(ValueError):
        ModelSpec("other", 1, 2)
    with pytest.raises(ValueError):
        ModelSpec("div", 3, 2)
    with pytest.raises(ValueError):
        ModelSpec("div", 1, 2, sign=2)


def test_div_operator_structure(div_op):
    assert np.all(div_op.eigenvalues <= 1e-12)
    q = div_op.eigenvectors
    assert np.abs(q.T @ q - np.eye(div_op.n_nodes)).max() < 1e-10
    # spectral gap: the top of the spectrum is zero, carried by constants
    # (P 1 = 0 exactly; the zero cluster is degenerate because the weight
    # underflows at the outer nodes, so the top eigenvector itself is an
    # arbitrary basis choice within that cluster)
    assert abs(div_op.eigenvalues[-1]) < 1e-10
    ones = np.ones(div_op.n_nodes)
    assert np.abs(apply_div_operator(ones + 0j, div_op)).max() < 1e-14


def test_div_operator_annihilates_constants(div_op):
    out = apply_div_operator(np.ones(513, complex), div_op)
    assert np.abs(out).max() == 0.0


def test_div_operator_negative_and_symmetric(div_op):
    rng = np.random.default_rng(11)
    for _ in range(100):
        u = rng.standard_normal(513) + 1j * rng.standard_normal(513)
        u = gaussian_filter1d(u.real, 15) + 1j * gaussian_filter1d(u.imag, 15)
        v = rng.standard_normal(513) + 1j * rng.standard_normal(513)
        pu, pv = apply_div_operator(u, div_op), apply_div_operator(v, div_op)
        quad = np.vdot(u, pu).real
        assert quad <= 1e-12
        sym = abs(np.vdot(v, pu) - np.vdot(pv, u))
        assert sym < 1e-10 * max(1.0, abs(np.vdot(v, pu)))


def test_div_operator_second_order_convergence():
    # flux form against the analytic e^{-a^2/2}(f'' - a f') expansion
    def f(a):
        return np.exp(-((a - 0.5) ** 2) / 3.0)

    def exact(a):
        fp = -2.0 * (a - 0.5) / 3.0 * f(a)
        fpp = (-2.0 / 3.0 + (2.0 * (a - 0.5) / 3.0) ** 2) * f(a)
        return np.exp(-0.5 * a**2) * (fpp - a * fp)

    errs = []
    for n in (257, 513, 1025):
        op = build_div_operator(n, 12.0)
        got = apply_div_operator(f(op.nodes) + 0j, op).real
        errs.append(np.abs(got - exact(op.nodes)).max())
    order = math.log2(errs[0] / errs[1])
    assert 1.8 <= order <= 2.2
    assert 1.8 <= math.log2(errs[1] / errs[2]) <= 2.2


def test_grid_mismatch_rejected(div_op):
    with pytest.raises(ValueError):
        apply_div_operator(np.ones(100, complex), div_op)


def test_identity_constant_profile(basis64, div_op):
    res = verify_div_identity(lambda a: np.ones_like(a), basis64, div_op)
    assert res < 1e-11


def test_identity_he2_eigenrelation(basis64, div_op):
    # both sides equal -2 He_2 e^{-a^2/2}; the residual is discretization only
    res = verify_div_identity(lambda a: a**2 - 1.0, basis64, div_op)
    lhs = apply_div_operator(div_op.nodes**2 - 1.0 + 0j, div_op).real
    target = -2.0 * (div_op.nodes**2 - 1.0) * np.exp(-0.5 * div_op.nodes**2)
    assert res <= np.abs(lhs - target).max() + 1e-12
    assert res < 1e-2


def test_identity_refinement_order():
    basis = build_basis(128)
    residuals = []
    for n in (257, 513, 1025):
        op = build_div_operator(n, 12.0)
        residuals.append(
            verify_div_identity(lambda a: np.sin(a) * np.exp(-(a**2) / 8.0), basis, op)
        )
    assert math.log2(residuals[0] / residuals[1]) >= 1.8
    assert math.log2(residuals[1] / residuals[2]) >= 1.8


def test_ou_nondiv_eigen_action(basis64):
    phi0 = basis64.eigenfunctions[0].astype(complex)
    out = apply_ou_nondiv(phi0, basis64)
    assert np.abs(out * np.exp(-basis64.nodes**2 / 4)).max() < 1e-10

    phi3 = basis64.eigenfunctions[3].astype(complex)
    out = apply_ou_nondiv(phi3, basis64)
    werr = np.abs(out + 3.0 * phi3) * np.exp(-basis64.nodes**2 / 4)
    assert werr.max() < 1e-10

    mix = basis64.eigenfunctions[1] + basis64.eigenfunctions[2] + 0j
    out = apply_ou_nondiv(mix, basis64)
    expect = -basis64.eigenfunctions[1] - 2.0 * basis64.eigenfunctions[2]
    werr = np.abs(out - expect) * np.exp(-basis64.nodes**2 / 4)
    assert werr.max() < 1e-10


def test_nondiv_generator_weighted_self_adjoint(nondiv_mach):
    # <L u, v>_w = <u, L v>_w with L = Laplacian_x + drift form
    from ounls.grids import laplacian_symbol, x_fft, x_ifft

    mach = nondiv_mach
    rng = np.random.default_rng(12)

    def apply_gen(u):
        lap = x_ifft(laplacian_symbol(mach.grid)[..., None] * x_fft(u, mach.grid), mach.grid)
        return lap + apply_ou_nondiv(u, mach.basis)

    def wdot(a, b):
        return complex(mach.grid.cell_volume * np.sum((np.conj(a) * b) @ mach.basis.weights))

    def smooth_field():
        hat = np.zeros((128, 16), complex)
        hat[:8] = rng.standard_normal((8, 16)) + 1j * rng.standard_normal((8, 16))
        hat[-8:] = rng.standard_normal((8, 16)) + 1j * rng.standard_normal((8, 16))
        return x_ifft(hat, mach.grid) @ mach.basis.eigenfunctions[:16]

    for _ in range(5):
        u, v = smooth_field(), smooth_field()
        lhs = wdot(v, apply_gen(u))
        rhs = wdot(apply_gen(v), u)
        assert abs(lhs - rhs) < 1e-10 * max(1.0, abs(lhs))


def test_nonlinearity_phase_only(div_mach):
    rng = np.random.default_rng(13)
    u = rng.standard_normal((128, 257)) + 1j * rng.standard_normal((128, 257))
    out = apply_nonlinearity(u, div_mach.spec, div_mach, 0.37)
    np.testing.assert_allclose(np.abs(out), np.abs(u), rtol=1e-13)
    assert np.array_equal(apply_nonlinearity(u, div_mach.spec, div_mach, 0.0), u)


def test_nonlinearity_closed_form_phase():
    spec = ModelSpec("div", 1, 2, +1)
    mach = build_machinery(spec, DiscretizationSpec(n_x=64, div_nodes=129))
    u = np.ones((64, 129), complex)
    out = apply_nonlinearity(u, spec, mach, 0.1)
    np.testing.assert_allclose(out, np.exp(-0.1j) * u, rtol=1e-14)


def test_nonlinearity_rejects_nonfinite(div_mach):
    u = np.ones((128, 257), complex)
    u[0, 0] = np.nan
    with pytest.raises(NonFiniteFieldError):
        apply_nonlinearity(u, div_mach.spec, div_mach, 0.1)


def test_nonlinearity_focusing_sign():
    spec = ModelSpec("div", 1, 2, -1)
    mach = build_machinery(spec, DiscretizationSpec(n_x=64, div_nodes=129))
    u = np.ones((64, 129), complex)
    out = apply_nonlinearity(u, spec, mach, 0.1)
    np.testing.assert_allclose(out, np.exp(+0.1j) * u, rtol=1e-14)


def test_propagator_identity_at_zero(nondiv_mach):
    rng = np.random.default_rng(14)
    u = rng.standard_normal((128, 64)) + 1j * rng.standard_normal((128, 64))
    out = nondiv_mach.propagator(0.0).apply(u)
    werr = math.sqrt(mass(out - u, nondiv_mach.spec, nondiv_mach))
    assert werr < 1e-12 * math.sqrt(mass(u, nondiv_mach.spec, nondiv_mach))


def test_propagator_plane_wave_multiplier(nondiv_mach):
    mach = nondiv_mach
    k = mach.grid.wavenumbers[3]
    f = (np.exp(1j * k * mach.grid.axis)[:, None] * mach.basis.eigenfunctions[5]).astype(complex)
    got = mach.propagator(0.7).apply(f)
    expect = np.exp(0.7j * (-(k**2) - 5.0)) * f
    rel = math.sqrt(mass(got - expect, mach.spec, mach) / mass(f, mach.spec, mach))
    assert rel < 1e-11


@pytest.mark.parametrize("model", ["nondiv", "div"])
def test_propagator_unitary_and_composition(model, nondiv_mach, div_mach):
    mach = nondiv_mach if model == "nondiv" else div_mach
    rng = np.random.default_rng(15)
    u = rng.standard_normal((128, mach.n_alpha)) + 1j * rng.standard_normal((128, mach.n_alpha))
    m0 = mass(u, mach.spec, mach)
    v = mach.propagator(0.7).apply(u)
    assert abs(mass(v, mach.spec, mach) - m0) < 1e-11 * m0
    w1 = mach.propagator(0.2).apply(mach.propagator(0.5).apply(u))
    w2 = mach.propagator(0.7).apply(u)
    assert math.sqrt(mass(w1 - w2, mach.spec, mach)) < 1e-10 * math.sqrt(m0)
    back = mach.propagator(-0.7).apply(v)
    assert math.sqrt(mass(back - u, mach.spec, mach)) < 1e-10 * math.sqrt(m0)


def test_propagator_rejects_nonfinite_time(nondiv_mach):
    with pytest.raises(ValueError):
        build_linear_propagator(
            nondiv_mach.spec, nondiv_mach.grid, nondiv_mach.basis, math.inf
        )


def test_div_generator_plain_self_adjoint(div_mach):
    from ounls.grids import laplacian_symbol, x_fft, x_ifft

    mach = div_mach
    rng = np.random.default_rng(16)

    def apply_gen(u):
        lap = x_ifft(laplacian_symbol(mach.grid)[..., None] * x_fft(u, mach.grid), mach.grid)
        return lap + apply_div_operator(u, mach.div_op)

    for _ in range(5):
        u = rng.standard_normal((128, 257)) + 1j * rng.standard_normal((128, 257))
        v = rng.standard_normal((128, 257)) + 1j * rng.standard_normal((128, 257))
        lhs = np.vdot(v, apply_gen(u))
        rhs = np.vdot(apply_gen(v), u)
        assert abs(lhs - rhs) < 1e-10 * max(1.0, abs(lhs))
