import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from contactmech.exterior import VectorField, contract, eval_form, form_from_covector, wedge
from contactmech.expr import evaluate, parse, simplify
from contactmech.hamiltonian import (ContactHamiltonianSystem, OnZeroLocusError, dissipation_rate_residual, flat_map,
                                     flat_matrix, hamilton_equation_residuals, omega_residuals, reeb_field,
                                     residual_scale)
from contactmech.integrate import IntegratorConfig, integrate, observe
from contactmech.sampling import sample_box
from oracles import sym_equal

OSC = ContactHamiltonianSystem("p^2/2 + q^2/2 + gamma*s", params={"gamma": 0.3})
GRAV = ContactHamiltonianSystem("(px^2 + py^2)/(2*m) + m*g*y + gamma*s", q=("x", "y"), p=("px", "py"),
                                params={"m": 1.0, "g": 9.8, "gamma": 0.3})
PARA = ContactHamiltonianSystem("(p - 2*gamma*s)^2/(2*m) + m*g/(2*gamma)*(exp(2*gamma*y) - 1)", q=("y",),
                                params={"m": 1.0, "g": 9.8, "gamma": 0.1})
NONLIN = ContactHamiltonianSystem("p1^2/2 + cos(q1)*p2^2 + q2*s^2/3 + sin(s)*p1", q=("q1", "q2"), p=("p1", "p2"))
SYSTEMS = [OSC, GRAV, PARA, NONLIN]


def test_reeb_field():
    assert reeb_field(OSC).strings() == ["0", "0", "1"]
    assert reeb_field(GRAV).strings() == ["0", "0", "0", "0", "1"]
    for x in sample_box(5, 100, seed=3):
        b = GRAV.bind(x)
        r = reeb_field(GRAV).evaluate(b)
        assert contract(r, eval_form(GRAV.d_eta, b)).max_norm() == 0.0
        assert contract(r, eval_form(GRAV.eta, b))[()] == 1.0


def test_oscillator_field():
    X = OSC.dynamics
    expected = ["p", "-q - gamma*p", "p^2 - (p^2/2 + q^2/2 + gamma*s)"]
    for got, want in zip(X.components, expected):
        assert sym_equal(got, parse(want))


def test_free_and_s_hamiltonians():
    assert ContactHamiltonianSystem("p").dynamics.strings() == ["1", "0", "0"]
    X = ContactHamiltonianSystem("s").dynamics
    assert [str(simplify(c)) for c in X] == ["0", "(-p)", "(-s)"]


def test_residual_examples():
    H = ContactHamiltonianSystem("s")
    _, r2 = hamilton_equation_residuals(H, H.reeb, {"q": 0.0, "p": 0.0, "s": 1.0})
    assert r2 == 2.0
    K = ContactHamiltonianSystem("p^2/2")
    _, r2 = hamilton_equation_residuals(K, np.zeros(3), {"q": 0.0, "p": 1.0, "s": 0.0})
    assert r2 == 0.5


@pytest.mark.parametrize("sys", SYSTEMS, ids=["osc", "grav", "para", "nonlin"])
def test_hamilton_equations_vanish(sys):
    for x in sample_box(sys.dim, 1000, seed=11):
        b = sys.bind(x)
        r1, r2 = hamilton_equation_residuals(sys, sys.dynamics, b)
        assert max(np.max(np.abs(r1)), abs(r2)) <= 1e-10 * residual_scale(sys, b)


@pytest.mark.parametrize("sys", SYSTEMS, ids=["osc", "grav", "para", "nonlin"])
def test_omega_equations_vanish_off_zero_locus(sys):
    checked = 0
    for x in sample_box(sys.dim, 300, seed=12):
        b = sys.bind(x)
        if abs(evaluate(sys.H, b)) <= 0.1:
            continue
        r1, r2 = omega_residuals(sys, sys.dynamics, b)
        assert max(r1, abs(r2)) <= 1e-10 * residual_scale(sys, b)
        checked += 1
    assert checked > 100


def test_omega_refuses_on_zero_locus():
    with pytest.raises(OnZeroLocusError):
        omega_residuals(OSC, OSC.dynamics, {"q": 0.0, "p": 0.0, "s": 0.0})


def test_omega_detects_reeb_shift():
    b = OSC.bind({"q": 1.0, "p": 0.5, "s": 0.2})
    x = OSC.dynamics.evaluate(b) + OSC.reeb.evaluate(b)
    _, r2 = omega_residuals(OSC, x, b)
    assert abs(r2 - 1.0) < 1e-14  # i(X_H + R) eta + H = -H + 1 + H


@pytest.mark.parametrize("sys", SYSTEMS, ids=["osc", "grav", "para", "nonlin"])
def test_omega_solution_solves_reeb_equations(sys):
    """Solve the Reeb-free linear system by least squares and compare."""
    for x in sample_box(sys.dim, 50, seed=13):
        b = sys.bind(x)
        H = evaluate(sys.H, b)
        if abs(H) <= 0.1:
            continue
        eta, d_eta = eval_form(sys.eta, b), eval_form(sys.d_eta, b)
        dH = sys.grad_energy
        dHv = form_from_covector([evaluate(c, b) for c in dH])
        omega = (-H) * d_eta + wedge(dHv, eta)
        d = sys.dim
        A = np.vstack([np.column_stack([contract(np.eye(d)[j], omega).to_array() for j in range(d)]),
                       eta.to_array()[None, :]])
        rhs = np.concatenate([np.zeros(d), [-H]])
        X, *_ = np.linalg.lstsq(A, rhs, rcond=None)
        assert np.max(np.abs(A @ X - rhs)) <= 1e-12 * residual_scale(sys, b)
        r1, r2 = hamilton_equation_residuals(sys, X, b)
        assert max(np.max(np.abs(r1)), abs(r2)) <= 1e-8 * residual_scale(sys, b)


def test_flat_examples():
    b = OSC.bind({"q": 0.3, "p": -1.1, "s": 0.4})
    assert np.array_equal(flat_map(OSC, OSC.reeb, b), eval_form(OSC.eta, b).to_array())
    assert np.array_equal(flat_map(OSC, np.zeros(3), b), np.zeros(3))


@pytest.mark.parametrize("sys", SYSTEMS, ids=["osc", "grav", "para", "nonlin"])
def test_flat_of_dynamics(sys):
    for x in sample_box(sys.dim, 100, seed=14):
        b = sys.bind(x)
        H, rate = evaluate(sys.H, b), evaluate(sys.reeb_rate, b)
        dH = np.array([evaluate(c, b) for c in sys.grad_energy])
        want = dH - (rate + H) * eval_form(sys.eta, b).to_array()
        assert np.max(np.abs(flat_map(sys, sys.dynamics, b) - want)) <= 1e-10


@pytest.mark.parametrize("sys", SYSTEMS, ids=["osc", "grav", "para", "nonlin"])
def test_flat_is_isomorphism(sys):
    for x in sample_box(sys.dim, 50, seed=15):
        M = flat_matrix(sys, sys.bind(x))
        assert np.linalg.cond(M) < 1e8


@settings(max_examples=50)
@given(st.lists(st.floats(-3, 3), min_size=3, max_size=3), st.floats(-2, 2))
def test_flat_is_linear(v, k):
    b = OSC.bind({"q": 0.1, "p": 0.7, "s": -0.3})
    v = np.array(v)
    assert np.allclose(flat_map(OSC, k * v, b), k * flat_map(OSC, v, b), atol=1e-12)


@pytest.mark.parametrize("sys", SYSTEMS, ids=["osc", "grav", "para", "nonlin"])
def test_dissipation_rate_residual(sys):
    for x in sample_box(sys.dim, 200, seed=16):
        b = sys.bind(x)
        assert abs(dissipation_rate_residual(sys, b)) <= 1e-11 * residual_scale(sys, b)


def test_dissipation_rate_examples():
    assert dissipation_rate_residual(ContactHamiltonianSystem("s"), {"q": 1.0, "p": 1.0, "s": 2.0}) == 0.0
    C = ContactHamiltonianSystem("p^2/2 + q^4")
    assert abs(evaluate(C.dynamics.apply(C.H), {"q": 0.4, "p": 1.3, "s": 0.0})) < 1e-14


def test_energy_decays_exponentially_along_flow():
    traj = integrate(OSC.dynamics, [1.0, 0.5, 0.0], IntegratorConfig(dt=1e-3, t_max=5.0))
    H = observe(traj, OSC.H)
    want = H[0] * np.exp(-0.3 * traj.times)
    assert np.max(np.abs(H - want) / np.abs(want)) < 1e-9


def test_system_validation():
    with pytest.raises(ValueError):
        ContactHamiltonianSystem("p^2 + k*q")
    with pytest.raises(ValueError):
        ContactHamiltonianSystem("p^2", params={"q": 1.0})
    with pytest.raises(ValueError):
        ContactHamiltonianSystem("p^2", q=("q", "x"), p=("p",))
    with pytest.raises(ValueError):
        ContactHamiltonianSystem("p^2", q=("q",), p=("q",))


def test_with_params():
    G2 = GRAV.with_params(gamma=0.0)
    assert G2.params["gamma"] == 0.0 and GRAV.params["gamma"] == 0.3
    assert isinstance(G2.dynamics, VectorField)
