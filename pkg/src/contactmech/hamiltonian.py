"""Contact Hamiltonian systems in Darboux coordinates (q^i, p_i, s).

The contact form is eta = ds - p_i dq^i, whose Reeb field is d/ds.  The
residual routines here are written against a small duck-typed interface
(``coords``, ``params``, ``eta``, ``d_eta``, ``energy``, ``reeb_rate``,
``dynamics``) so they apply unchanged to the contact system
(TQ x R, eta_L, E_L) built from a Lagrangian.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Mapping, Sequence

import numpy as np

from .exterior import FormExpr, FormValue, VectorField, contract, eval_form, exterior_derivative, wedge
from .expr import ONE, ZERO, Expr, Neg, Var, as_expr, diff, evaluate, evaluate_many, free_vars, simplify

__all__ = [
    "ContactHamiltonianSystem", "OnZeroLocusError",
    "reeb_field", "hamiltonian_vector_field", "hamilton_equation_residuals", "omega_residuals",
    "flat_map", "flat_matrix", "dissipation_rate_residual", "residual_scale", "field_at",
]


class OnZeroLocusError(ValueError):
    """The Reeb-free equations are only equivalent where the energy is nonzero."""


def _check_names(coords: Sequence[str], params: Mapping[str, float], exprs: dict[str, Expr]):
    if len(set(coords)) != len(coords):
        raise ValueError(f"coordinate names must be distinct: {coords}")
    clash = set(coords) & set(params)
    if clash:
        raise ValueError(f"names used both as coordinates and parameters: {sorted(clash)}")
    known = set(coords) | set(params)
    for label, e in exprs.items():
        missing = free_vars(e) - known
        if missing:
            raise ValueError(f"{label} uses unbound symbol(s) {sorted(missing)}")


@dataclass(frozen=True)
class ContactHamiltonianSystem:
    """(M, eta, H) on R^{2n+1} with eta = ds - p_i dq^i."""

    H: Expr
    q: tuple[str, ...] = ("q",)
    p: tuple[str, ...] = ("p",)
    s: str = "s"
    params: Mapping[str, float] = field(default_factory=dict)
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "H", simplify(as_expr(self.H)))
        object.__setattr__(self, "q", tuple(self.q))
        object.__setattr__(self, "p", tuple(self.p))
        object.__setattr__(self, "params", {k: float(v) for k, v in self.params.items()})
        if len(self.q) != len(self.p) or not self.q:
            raise ValueError(f"need n >= 1 positions and as many momenta, got {self.q} and {self.p}")
        _check_names(self.coords, self.params, {"H": self.H})

    @property
    def n(self) -> int:
        return len(self.q)

    @property
    def coords(self) -> tuple[str, ...]:
        return self.q + self.p + (self.s,)

    @property
    def dim(self) -> int:
        return 2 * self.n + 1

    def bind(self, x) -> dict[str, float]:
        if isinstance(x, Mapping):
            return {**self.params, **x}
        return {**self.params, **dict(zip(self.coords, map(float, x)))}

    @property
    def energy(self) -> Expr:
        return self.H

    @cached_property
    def eta(self) -> FormExpr:
        n = self.n
        coeffs = [Neg(Var(pi)) for pi in self.p] + [ZERO] * n + [ONE]
        return FormExpr.one_form(coeffs, self.coords)

    @cached_property
    def d_eta(self) -> FormExpr:
        return exterior_derivative(self.eta)

    @cached_property
    def reeb(self) -> VectorField:
        return reeb_field(self)

    @cached_property
    def reeb_rate(self) -> Expr:
        """L_R H = dH/ds."""
        return diff(self.H, self.s)

    @cached_property
    def dynamics(self) -> VectorField:
        return hamiltonian_vector_field(self)

    @cached_property
    def grad_energy(self) -> tuple[Expr, ...]:
        return tuple(diff(self.H, x) for x in self.coords)

    def with_params(self, **updates) -> "ContactHamiltonianSystem":
        return ContactHamiltonianSystem(self.H, self.q, self.p, self.s, {**self.params, **updates}, self.label)


def reeb_field(sys: ContactHamiltonianSystem) -> VectorField:
    return VectorField.coordinate(sys.coords, sys.s, sys.params)


def hamiltonian_vector_field(sys: ContactHamiltonianSystem) -> VectorField:
    """X_H = H_p d/dq - (H_q + p H_s) d/dp + (p H_p - H) d/ds."""
    H, s = sys.H, sys.s
    Hs = diff(H, s)
    Hp = [diff(H, pi) for pi in sys.p]
    qdot = Hp
    pdot = [-(diff(H, qi) + as_expr(pi) * Hs) for qi, pi in zip(sys.q, sys.p)]
    sdot = ZERO
    for pi, hp in zip(sys.p, Hp):
        sdot = sdot + as_expr(pi) * hp
    sdot = sdot - H
    return VectorField(tuple(qdot) + tuple(pdot) + (sdot,), sys.coords, sys.params)


# ---------------------------------------------------------------------------
# pointwise residuals


def field_at(X, b: Mapping[str, float]) -> np.ndarray:
    """Value of a vector field (symbolic, pointwise, or already numeric) at ``b``."""
    if hasattr(X, "evaluate"):
        return X.evaluate(b)
    return np.asarray(X, dtype=float)


def residual_scale(sys, b: Mapping[str, float]) -> float:
    x = np.array([b[c] for c in sys.coords])
    return 1.0 + float(np.max(np.abs(x))) + abs(evaluate(sys.energy, b))


def _structure_at(sys, b, reeb_rate=None):
    b = sys.bind(b)
    eta = eval_form(sys.eta, b)
    d_eta = eval_form(sys.d_eta, b)
    H, rate = evaluate_many((sys.energy, sys.reeb_rate), b)
    if callable(reeb_rate):
        rate = reeb_rate(b)
    dH = FormValue(1, len(sys.coords), {(i,): v for i, v in enumerate(evaluate_many(sys.grad_energy, b))})
    return b, eta, d_eta, H, rate, dH


def hamilton_equation_residuals(sys, X, b: Mapping[str, float], reeb_rate=None) -> tuple[np.ndarray, float]:
    """Residuals of i(X) d eta = dH - (L_R H) eta and i(X) eta = -H at ``b``.

    Returns the 1-form residual as a dense covector and the scalar residual.
    ``reeb_rate`` optionally replaces ``sys.reeb_rate`` by a callable of the
    bindings.
    """
    b, eta, d_eta, H, rate, dH = _structure_at(sys, b, reeb_rate)
    x = field_at(X, b)
    r1 = contract(x, d_eta) - dH + rate * eta
    r2 = contract(x, eta)[()] + H
    return r1.to_array(), float(r2)


def omega_residuals(sys, X, b: Mapping[str, float], zero_tol: float = 1e-6) -> tuple[float, float]:
    """Residuals of the Reeb-free equations i(X) Omega = 0, i(X) eta = -H.

    Omega = -H d eta + dH ^ eta.  Refuses with ``OnZeroLocusError`` where
    |H| <= ``zero_tol``: on that locus the two systems stop being equivalent.
    """
    b, eta, d_eta, H, rate, dH = _structure_at(sys, b)
    if abs(H) <= zero_tol:
        raise OnZeroLocusError(f"on H=0 locus (H = {H:.3g} at {b})")
    omega = (-H) * d_eta + wedge(dH, eta)
    x = field_at(X, b)
    return contract(x, omega).max_norm(), float(contract(x, eta)[()] + H)


def flat_map(sys, X, b: Mapping[str, float]) -> np.ndarray:
    """flat(X) = i(X) d eta + (i(X) eta) eta, as a covector."""
    b = sys.bind(b)
    eta = eval_form(sys.eta, b)
    d_eta = eval_form(sys.d_eta, b)
    x = field_at(X, b)
    if not np.any(x):
        return np.zeros(len(sys.coords))
    return (contract(x, d_eta) + contract(x, eta)[()] * eta).to_array()


def flat_matrix(sys, b: Mapping[str, float]) -> np.ndarray:
    """Matrix of the flat isomorphism at ``b``; column j is flat(e_j)."""
    d = len(sys.coords)
    return np.column_stack([flat_map(sys, np.eye(d)[j], b) for j in range(d)])


def dissipation_rate_residual(sys, b: Mapping[str, float]) -> float:
    """X(H) + (L_R H) H at ``b``; vanishes identically for the contact dynamics."""
    b = sys.bind(b)
    x = field_at(sys.dynamics, b)
    grad = evaluate_many(sys.grad_energy, b)
    H, rate = evaluate_many((sys.energy, sys.reeb_rate), b)
    return float(x @ grad + rate * H)
