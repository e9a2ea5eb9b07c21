"""Sparse exterior algebra on R^d.

A k-form is a map from strictly increasing index tuples ``(i1 < ... < ik)``
to coefficients of ``dx^i1 ^ ... ^ dx^ik``; absent tuples are zero.  The same
routines serve symbolic coefficients (``Expr``) and numeric ones (float),
since both support ``+``, ``*`` and unary ``-``.

Interior products insert the vector in the first slot::

    i(X)(dx^i1 ^ ... ^ dx^ik) = sum_r (-1)^r X^{i_r} dx^i1 ^ ..^(omit i_r).. ^ dx^ik
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .expr import ZERO, Expr, as_expr, diff, evaluate_many, lambdify, free_vars, is_zero, simplify

__all__ = [
    "FormExpr", "FormValue", "VectorField", "PointwiseVectorField",
    "wedge", "contract", "exterior_derivative", "eval_form", "contact_volume_coefficient",
    "form_from_covector", "symbolic_contract", "symbolic_wedge",
]


def _perm_sign(seq: Sequence[int]) -> int:
    sign = 1
    seq = list(seq)
    for i in range(len(seq)):
        for j in range(i + 1, len(seq)):
            if seq[i] > seq[j]:
                sign = -sign
    return sign


def _merge(I: tuple[int, ...], J: tuple[int, ...]) -> tuple[int, tuple[int, ...]]:
    """Sign and sorted tuple of dx^I ^ dx^J; sign 0 if they share an index."""
    if set(I) & set(J):
        return 0, ()
    return _perm_sign(I + J), tuple(sorted(I + J))


def _wedge_components(a: Mapping, b: Mapping) -> dict:
    terms: dict = {}
    for I, ca in a.items():
        for J, cb in b.items():
            sign, K = _merge(I, J)
            if sign == 0:
                continue
            terms.setdefault(K, []).append(ca * cb if sign > 0 else -(ca * cb))
    return {K: _total(ts) for K, ts in terms.items()}


def _total(terms: list):
    # fsum is correctly rounded, so a ^ b and b ^ a agree exactly up to sign
    if all(isinstance(t, (float, int)) for t in terms):
        return math.fsum(terms)
    out = terms[0]
    for t in terms[1:]:
        out = out + t
    return out


def _contract_components(X: Sequence, f: Mapping) -> dict:
    out: dict = {}
    for I, c in f.items():
        for r, i in enumerate(I):
            xi = X[i]
            if isinstance(xi, Expr) and is_zero(xi):
                continue
            if not isinstance(xi, Expr) and xi == 0:
                continue
            J = I[:r] + I[r + 1:]
            term = xi * c if r % 2 == 0 else -(xi * c)
            out[J] = out[J] + term if J in out else term
    return out


# ---------------------------------------------------------------------------
# numeric forms


@dataclass(frozen=True)
class FormValue:
    """A k-form at a point: sparse float components keyed by sorted tuples."""

    degree: int
    dim: int
    components: Mapping[tuple[int, ...], float] = field(default_factory=dict)

    def __post_init__(self):
        comps = {}
        for I, c in dict(self.components).items():
            I = tuple(int(i) for i in I)
            if len(I) != self.degree or list(I) != sorted(set(I)) or (I and not 0 <= I[-1] < self.dim):
                raise ValueError(f"bad index tuple {I} for a {self.degree}-form on R^{self.dim}")
            if c != 0.0:
                comps[I] = float(c)
        object.__setattr__(self, "components", comps)

    def __getitem__(self, I):
        return self.components.get(tuple(I), 0.0)

    def __add__(self, other: "FormValue") -> "FormValue":
        _check_same(self, other)
        out = dict(self.components)
        for I, c in other.components.items():
            out[I] = out.get(I, 0.0) + c
        return FormValue(self.degree, self.dim, out)

    def __sub__(self, other: "FormValue") -> "FormValue":
        return self + (-1.0) * other

    def __rmul__(self, k: float) -> "FormValue":
        return FormValue(self.degree, self.dim, {I: k * c for I, c in self.components.items()})

    def max_norm(self) -> float:
        return max((abs(c) for c in self.components.values()), default=0.0)

    def to_array(self) -> np.ndarray:
        """Dense vector of a 1-form (or the scalar of a 0-form)."""
        if self.degree == 0:
            return np.array([self[()]])
        if self.degree != 1:
            raise ValueError("only 0- and 1-forms have a vector representation")
        return np.array([self[(i,)] for i in range(self.dim)])


def _check_same(a, b):
    if a.dim != b.dim or a.degree != b.degree:
        raise ValueError(f"form mismatch: degree {a.degree} on R^{a.dim} vs degree {b.degree} on R^{b.dim}")


def form_from_covector(values: Sequence[float]) -> FormValue:
    return FormValue(1, len(values), {(i,): v for i, v in enumerate(values)})


def wedge(a: FormValue, b: FormValue) -> FormValue:
    if a.dim != b.dim:
        raise ValueError(f"dimension mismatch: R^{a.dim} vs R^{b.dim}")
    if a.degree + b.degree > a.dim:
        raise ValueError(f"degree {a.degree + b.degree} exceeds dimension {a.dim}")
    return FormValue(a.degree + b.degree, a.dim, _wedge_components(a.components, b.components))


def contract(X: Sequence[float], f: FormValue) -> FormValue:
    if f.degree < 1:
        raise ValueError("cannot contract a vector with a 0-form")
    X = np.asarray(X, dtype=float)
    if X.shape != (f.dim,):
        raise ValueError(f"dimension mismatch: vector of length {X.shape[0]} on R^{f.dim}")
    return FormValue(f.degree - 1, f.dim, _contract_components(X, f.components))


# ---------------------------------------------------------------------------
# symbolic forms


@dataclass(frozen=True)
class FormExpr:
    """A 0-, 1- or 2-form with ``Expr`` coefficients on the coordinates ``coords``."""

    degree: int
    coords: tuple[str, ...]
    components: Mapping[tuple[int, ...], Expr] = field(default_factory=dict)

    def __post_init__(self):
        if self.degree not in (0, 1, 2):
            raise ValueError("symbolic forms are limited to degrees 0, 1, 2")
        object.__setattr__(self, "coords", tuple(self.coords))
        comps = {}
        for I, c in dict(self.components).items():
            I = tuple(I)
            if len(I) != self.degree or list(I) != sorted(set(I)) or (I and I[-1] >= self.dim):
                raise ValueError(f"bad index tuple {I}")
            c = simplify(as_expr(c))
            if not is_zero(c):
                comps[I] = c
        object.__setattr__(self, "components", comps)

    @property
    def dim(self) -> int:
        return len(self.coords)

    def __getitem__(self, I) -> Expr:
        return self.components.get(tuple(I), ZERO)

    def __add__(self, other: "FormExpr") -> "FormExpr":
        if other.coords != self.coords or other.degree != self.degree:
            raise ValueError("form mismatch")
        out = dict(self.components)
        for I, c in other.components.items():
            out[I] = out[I] + c if I in out else c
        return FormExpr(self.degree, self.coords, out)

    def __neg__(self) -> "FormExpr":
        return FormExpr(self.degree, self.coords, {I: -c for I, c in self.components.items()})

    def __sub__(self, other: "FormExpr") -> "FormExpr":
        return self + (-other)

    def scale(self, k: Expr) -> "FormExpr":
        return FormExpr(self.degree, self.coords, {I: k * c for I, c in self.components.items()})

    def free_vars(self) -> frozenset[str]:
        out = frozenset()
        for c in self.components.values():
            out |= free_vars(c)
        return out

    def is_zero(self) -> bool:
        return not self.components

    @classmethod
    def function(cls, f, coords) -> "FormExpr":
        return cls(0, coords, {(): as_expr(f)})

    @classmethod
    def one_form(cls, coeffs: Sequence, coords) -> "FormExpr":
        return cls(1, coords, {(i,): as_expr(c) for i, c in enumerate(coeffs)})


def exterior_derivative(f: FormExpr) -> FormExpr:
    """d(a_I dx^I) = sum_j (da_I/dx^j) dx^j ^ dx^I, for degree 0 and 1."""
    if f.degree > 1:
        raise ValueError("exterior derivative is only provided for 0- and 1-forms")
    out: dict = {}
    for I, a in f.components.items():
        for j, x in enumerate(f.coords):
            sign, K = _merge((j,), I)
            if sign == 0:
                continue
            da = diff(a, x)
            if is_zero(da):
                continue
            term = da if sign > 0 else -da
            out[K] = out[K] + term if K in out else term
    return FormExpr(f.degree + 1, f.coords, out)


def symbolic_wedge(a: FormExpr, b: FormExpr) -> FormExpr:
    if a.coords != b.coords:
        raise ValueError("coordinate mismatch")
    return FormExpr(a.degree + b.degree, a.coords, _wedge_components(a.components, b.components))


def symbolic_contract(X: Sequence[Expr], f: FormExpr) -> FormExpr:
    if f.degree < 1:
        raise ValueError("cannot contract a vector with a 0-form")
    if len(X) != f.dim:
        raise ValueError("dimension mismatch")
    return FormExpr(f.degree - 1, f.coords, _contract_components(list(X), f.components))


def eval_form(f: FormExpr, b: Mapping[str, float]) -> FormValue:
    keys = list(f.components)
    vals = evaluate_many([f.components[k] for k in keys], b) if keys else []
    return FormValue(f.degree, f.dim, dict(zip(keys, vals)))


def contact_volume_coefficient(eta: FormExpr, b: Mapping[str, float], n: int | None = None,
                               d_eta: FormExpr | None = None) -> float:
    """Top coefficient of eta ^ (d eta)^n / n! at the point ``b``.

    The 1/n! normalisation makes the canonical form ds - p_i dq^i give +-1 in
    every dimension; the value is nonzero exactly where eta is contact.
    """
    if eta.degree != 1:
        raise ValueError("eta must be a 1-form")
    if n is None:
        n = (eta.dim - 1) // 2
    if eta.dim != 2 * n + 1:
        raise ValueError(f"expected a 1-form on R^{2 * n + 1}, got R^{eta.dim}")
    if d_eta is None:
        d_eta = exterior_derivative(eta)
    top = eval_form(eta, b)
    dval = eval_form(d_eta, b)
    for _ in range(n):
        top = wedge(top, dval)
    return top[tuple(range(eta.dim))] / math.factorial(n)


# ---------------------------------------------------------------------------
# vector fields


@dataclass(frozen=True)
class VectorField:
    """Symbolic vector field: one ``Expr`` per coordinate, plus parameter values."""

    components: tuple[Expr, ...]
    coords: tuple[str, ...]
    params: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        comps = tuple(simplify(as_expr(c)) for c in self.components)
        if len(comps) != len(self.coords):
            raise ValueError(f"{len(comps)} components for {len(self.coords)} coordinates")
        object.__setattr__(self, "components", comps)
        object.__setattr__(self, "coords", tuple(self.coords))
        object.__setattr__(self, "params", dict(self.params))

    symbolic = True

    @property
    def dim(self) -> int:
        return len(self.coords)

    def __getitem__(self, i) -> Expr:
        return self.components[i]

    def __iter__(self):
        return iter(self.components)

    def bindings(self, x) -> dict[str, float]:
        if isinstance(x, Mapping):
            return {**self.params, **x}
        return {**self.params, **dict(zip(self.coords, map(float, x)))}

    def evaluate(self, x) -> np.ndarray:
        return evaluate_many(self.components, self.bindings(x))

    def compile(self) -> Callable[[np.ndarray], np.ndarray]:
        """Fast ``f(x) -> ndarray`` over the coordinate vector, parameters bound."""
        return lambdify(self.components, self.coords, self.params)

    def free_vars(self) -> frozenset[str]:
        out = frozenset()
        for c in self.components:
            out |= free_vars(c)
        return out

    def is_zero(self) -> bool:
        return all(is_zero(c) for c in self.components)

    def apply(self, f: Expr) -> Expr:
        """Derivative of the function ``f`` along the field, X(f) = X^i df/dx^i."""
        f = as_expr(f)
        out = ZERO
        for c, x in zip(self.components, self.coords):
            if not is_zero(c):
                out = out + c * diff(f, x)
        return simplify(out)

    def __add__(self, other: "VectorField") -> "VectorField":
        _same_frame(self, other)
        return VectorField(tuple(a + b for a, b in zip(self, other)), self.coords,
                           _merge_params(self.params, other.params))

    def __sub__(self, other: "VectorField") -> "VectorField":
        _same_frame(self, other)
        return VectorField(tuple(a - b for a, b in zip(self, other)), self.coords,
                           _merge_params(self.params, other.params))

    def scale(self, k) -> "VectorField":
        k = as_expr(k)
        return VectorField(tuple(k * c for c in self), self.coords, self.params)

    def strings(self) -> list[str]:
        return [str(c) for c in self.components]

    @classmethod
    def coordinate(cls, coords: Sequence[str], name: str, params=None) -> "VectorField":
        """The coordinate field d/d(name)."""
        coords = tuple(coords)
        return cls(tuple(1.0 if c == name else 0.0 for c in coords), coords, params or {})


@dataclass(frozen=True)
class PointwiseVectorField:
    """Field whose components are only available point by point.

    Used when a symbolic inverse Hessian would be too large.  ``known`` holds
    the components that are still available symbolically.
    """

    coords: tuple[str, ...]
    evaluator: Callable[[Mapping[str, float]], np.ndarray]
    params: Mapping[str, float] = field(default_factory=dict)
    known: Mapping[int, Expr] = field(default_factory=dict)

    symbolic = False

    @property
    def dim(self) -> int:
        return len(self.coords)

    def bindings(self, x) -> dict[str, float]:
        if isinstance(x, Mapping):
            return {**self.params, **x}
        return {**self.params, **dict(zip(self.coords, map(float, x)))}

    def evaluate(self, x) -> np.ndarray:
        return np.asarray(self.evaluator(self.bindings(x)), dtype=float)

    def compile(self):
        return self.evaluate


def _same_frame(a, b):
    if a.coords != b.coords:
        raise ValueError(f"coordinate mismatch: {a.coords} vs {b.coords}")


def _merge_params(p1: Mapping, p2: Mapping) -> dict:
    out = dict(p1)
    for k, v in p2.items():
        if k in out and out[k] != v:
            raise ValueError(f"conflicting values for parameter {k!r}")
        out[k] = v
    return out
