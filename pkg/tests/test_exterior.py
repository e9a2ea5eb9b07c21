import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from contactmech.exterior import (FormExpr, FormValue, VectorField, contact_volume_coefficient, contract, eval_form,
                                  exterior_derivative, form_from_covector, wedge)
from contactmech.expr import ONE, ZERO, Var, parse
from contactmech.hamiltonian import ContactHamiltonianSystem
from contactmech.lagrangian import ContactLagrangianSystem, hessian
from oracles import dense_contract, dense_from_components, dense_wedge

QPS = ("q", "p", "s")


def eta_canonical():
    return FormExpr.one_form([parse("-p"), ZERO, ONE], QPS)


def test_d_eta_is_dq_wedge_dp():
    d = exterior_derivative(eta_canonical())
    assert d.degree == 2
    assert dict(d.components) == {(0, 1): ONE}


def test_d_of_exact_and_simple_forms():
    assert exterior_derivative(FormExpr.one_form([ONE, ZERO, ZERO], QPS)).is_zero()
    d = exterior_derivative(FormExpr.one_form([ZERO, Var("q"), ZERO], QPS))
    assert dict(d.components) == {(0, 1): ONE}
    with pytest.raises(ValueError):
        exterior_derivative(d)


def test_d_squared_vanishes():
    f = FormExpr.function(parse("q^2*sin(p) + exp(s*q)"), QPS)
    assert exterior_derivative(exterior_derivative(f)).is_zero()


def test_eval_form_examples():
    v = eval_form(eta_canonical(), {"p": 3.0})
    assert dict(v.components) == {(0,): -3.0, (2,): 1.0}
    zero = eval_form(FormExpr(1, QPS, {}), {})
    assert dict(zero.components) == {}
    osc = ContactLagrangianSystem("m*v^2/2 - m*omega^2*q^2/2 - gamma*s", params={"m": 1, "omega": 2, "gamma": 0.3})
    ev = eval_form(osc.eta, osc.bind({"q": 0.0, "v": 2.0, "s": 0.0}))
    assert dict(ev.components) == {(0,): -2.0, (2,): 1.0}


def test_wedge_examples():
    dq, dp = form_from_covector([1, 0, 0]), form_from_covector([0, 1, 0])
    assert dict(wedge(dq, dp).components) == {(0, 1): 1.0}
    assert dict(wedge(dq, dq).components) == {}
    eta = form_from_covector([-5.0, 0, 1.0])
    top = wedge(eta, wedge(dq, dp))
    assert dict(top.components) == {(0, 1, 2): 1.0}


def test_wedge_errors():
    with pytest.raises(ValueError):
        wedge(form_from_covector([1, 0]), form_from_covector([1, 0, 0]))
    two = FormValue(2, 3, {(0, 1): 1.0})
    with pytest.raises(ValueError):
        wedge(two, two)


def test_contract_examples():
    eta = form_from_covector([-2.0, 0.0, 1.0])
    assert contract([0, 0, 1], eta)[()] == 1.0
    dqdp = FormValue(2, 3, {(0, 1): 1.0})
    assert dict(contract([0, 0, 1], dqdp).components) == {}
    assert dict(contract([1, 0, 0], dqdp).components) == {(1,): 1.0}
    with pytest.raises(ValueError):
        contract([1, 0], dqdp)
    with pytest.raises(ValueError):
        contract([1, 0, 0], FormValue(0, 3, {(): 1.0}))


def test_canonical_volume_coefficient():
    H1 = ContactHamiltonianSystem("p^2/2")
    H2 = ContactHamiltonianSystem("p1^2 + p2^2", q=("q1", "q2"), p=("p1", "p2"))
    rng = np.random.default_rng(0)
    for x in rng.uniform(-3, 3, size=(20, 5)):
        assert contact_volume_coefficient(H1.eta, H1.bind(x[:3])) == 1.0
        assert abs(contact_volume_coefficient(H2.eta, H2.bind(x))) == 1.0


def test_degenerate_form_has_zero_volume():
    assert contact_volume_coefficient(FormExpr.one_form([ZERO, ZERO, ONE], QPS), {}) == 0.0


def test_volume_matches_hessian_determinant():
    L = ContactLagrangianSystem("(1 + q1^2)*v1^2/2 + v1*v2*q2 + 2*v2^2 + v1^4/12 - s*v2",
                                q=("q1", "q2"), v=("v1", "v2"))
    rng = np.random.default_rng(1)
    for x in rng.uniform(-2, 2, size=(50, 5)):
        b = L.bind(x)
        det = hessian(L, b).detW
        c = contact_volume_coefficient(L.eta, b)
        assert abs(abs(c) - abs(det)) <= 1e-9 * abs(det)


def test_volume_vanishes_where_hessian_singular():
    L = ContactLagrangianSystem("v^4/12 - q^2")
    b = L.bind({"q": 0.7, "v": 0.0, "s": 0.1})
    assert hessian(L, b).detW == 0.0
    assert contact_volume_coefficient(L.eta, b) == 0.0


# dense antisymmetric-tensor oracle ------------------------------------------------


def forms(dim: int, degree: int):
    idx = list(itertools.combinations(range(dim), degree))
    return st.lists(st.floats(-3, 3, allow_nan=False).map(lambda x: round(x, 6)), min_size=len(idx),
                    max_size=len(idx)).map(lambda vals: FormValue(degree, dim, dict(zip(idx, vals))))


def dense(f: FormValue):
    return dense_from_components(f.degree, f.dim, dict(f.components))


def _back(T: np.ndarray, dim: int):
    k = T.ndim
    return {I: T[I] for I in itertools.combinations(range(dim), k)} if k else {(): float(T)}


@pytest.mark.parametrize("dim", [3, 5])
@settings(max_examples=60)
@given(data=st.data())
def test_wedge_against_dense_oracle(dim, data):
    k = data.draw(st.integers(0, dim))
    l = data.draw(st.integers(0, dim - k))
    a, b = data.draw(forms(dim, k)), data.draw(forms(dim, l))
    got = wedge(a, b)
    want = _back(dense_wedge(dense(a), dense(b)), dim)
    for I, v in want.items():
        assert abs(got[I] - v) <= 1e-12 * max(1.0, abs(v))


@pytest.mark.parametrize("dim", [3, 5])
@settings(max_examples=60)
@given(data=st.data())
def test_contract_against_dense_oracle(dim, data):
    k = data.draw(st.integers(1, dim))
    f = data.draw(forms(dim, k))
    X = np.array(data.draw(st.lists(st.floats(-3, 3, allow_nan=False), min_size=dim, max_size=dim)))
    got = contract(X, f)
    want = _back(dense_contract(X, dense(f)), dim)
    for I, v in want.items():
        assert abs(got[I] - v) <= 1e-12 * max(1.0, np.max(np.abs(X)) * 10)


@pytest.mark.parametrize("dim", [3, 5])
@settings(max_examples=60)
@given(data=st.data())
def test_graded_commutativity(dim, data):
    k = data.draw(st.integers(0, dim))
    l = data.draw(st.integers(0, dim - k))
    a, b = data.draw(forms(dim, k)), data.draw(forms(dim, l))
    ab, ba = wedge(a, b), wedge(b, a)
    sign = (-1) ** (k * l)
    for I in set(ab.components) | set(ba.components):
        assert ab[I] == sign * ba[I]


@pytest.mark.parametrize("dim", [3, 5])
@settings(max_examples=60)
@given(data=st.data())
def test_contract_is_graded_derivation(dim, data):
    k = data.draw(st.integers(1, min(3, dim - 1)))
    l = data.draw(st.integers(1, min(3, dim) - k)) if k < min(3, dim) else 0
    a, b = data.draw(forms(dim, k)), data.draw(forms(dim, l))
    X = data.draw(st.lists(st.floats(-2, 2, allow_nan=False), min_size=dim, max_size=dim))
    lhs = contract(X, wedge(a, b))
    rhs = wedge(contract(X, a), b) + (-1) ** k * wedge(a, contract(X, b)) if l else wedge(contract(X, a), b)
    for I in set(lhs.components) | set(rhs.components):
        assert abs(lhs[I] - rhs[I]) <= 1e-9


def test_symbolic_and_numeric_contract_agree():
    from contactmech.exterior import symbolic_contract
    X = VectorField(("p", "q*s", "1"), QPS)
    d = exterior_derivative(FormExpr.one_form([parse("s*q"), parse("p^2"), parse("q")], QPS))
    b = {"q": 0.3, "p": -1.2, "s": 2.0}
    sym = eval_form(symbolic_contract(X.components, d), b)
    num = contract(X.evaluate(b), eval_form(d, b))
    assert np.allclose(sym.to_array(), num.to_array(), atol=1e-14)
