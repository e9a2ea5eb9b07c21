"""Contact Lagrangian systems on TQ x R in natural coordinates (q^i, v^i, s).

A Lagrangian L(q, v, s) determines

* the energy E_L = v^i dL/dv^i - L,
* the Cartan form theta_L = (dL/dv^i) dq^i and contact form eta_L = ds - theta_L,
* the velocity Hessian W_ij = d2L/dv^i dv^j,
* the Reeb field R_L = d/ds - W^{ji} (d2L/ds dv^j) d/dv^i,
* the Euler-Lagrange field
  Gamma_L = L d/ds + v^i d/dq^i
            + W^{ik} (L_{q^k} - v^j L_{q^j v^k} - L L_{s v^k} + L_s L_{v^k}) d/dv^i.

The system object exposes the same interface as ``ContactHamiltonianSystem``
(``eta``, ``d_eta``, ``energy``, ``reeb_rate``, ``dynamics``) so the
residual routines of :mod:`contactmech.hamiltonian` apply to it directly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Mapping

import numpy as np

from .exterior import FormExpr, PointwiseVectorField, VectorField, contract, eval_form, exterior_derivative
from .expr import ONE, ZERO, Expr, Var, as_expr, diff, evaluate, evaluate_many, free_vars, is_zero, simplify
from .hamiltonian import _check_names, field_at, hamilton_equation_residuals

__all__ = [
    "ContactLagrangianSystem", "HessianValue", "HolonomicDissipationLagrangian", "SingularLagrangianError",
    "lagrangian_energy", "cartan_forms", "hessian", "reeb_lagrangian", "euler_lagrange_field",
    "lagrange_equation_residuals", "reeb_residuals", "reeb_lag_residual", "sode_check", "legendre_map",
    "check_legendre_equivalence", "holonomic_specialization_check", "dissipative_force",
    "SYMBOLIC_INVERSE_MAX_N",
]

SYMBOLIC_INVERSE_MAX_N = 3
REGULARITY_RTOL = 1e-10


class SingularLagrangianError(ArithmeticError):
    def __init__(self, message: str, point: Mapping[str, float] | None = None):
        self.point = dict(point) if point is not None else None
        super().__init__(message if point is None else f"{message} at {self.point}")


def _sym_det(M: list[list[Expr]]) -> Expr:
    n = len(M)
    if n == 1:
        return M[0][0]
    if n == 2:
        return M[0][0] * M[1][1] - M[0][1] * M[1][0]
    out = ZERO
    for j in range(n):
        if is_zero(M[0][j]):
            continue
        minor = [row[:j] + row[j + 1:] for row in M[1:]]
        term = M[0][j] * _sym_det(minor)
        out = out + term if j % 2 == 0 else out - term
    return out


def _sym_inverse(M: list[list[Expr]]) -> tuple[list[list[Expr]], Expr]:
    """Adjugate over determinant; fine for the n <= 3 matrices used here."""
    n = len(M)
    det = simplify(_sym_det(M))
    if n == 1:
        return [[simplify(ONE / det)]], det
    inv = [[ZERO] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            minor = [row[:j] + row[j + 1:] for k, row in enumerate(M) if k != i]
            cof = _sym_det(minor)
            if (i + j) % 2:
                cof = -cof
            inv[j][i] = simplify(cof / det)
    return inv, det


@dataclass(frozen=True)
class HessianValue:
    W: np.ndarray
    Winv: np.ndarray
    detW: float
    cond: float
    regular: bool
    point: Mapping[str, float] = field(default_factory=dict)

    def require_regular(self) -> "HessianValue":
        if not self.regular:
            raise SingularLagrangianError(f"not regular (det W = {self.detW:.3g})", self.point)
        return self


@dataclass(frozen=True)
class ContactLagrangianSystem:
    """(TQ x R, L) with coordinates q-block, v-block, s."""

    L: Expr
    q: tuple[str, ...] = ("q",)
    v: tuple[str, ...] = ("v",)
    s: str = "s"
    params: Mapping[str, float] = field(default_factory=dict)
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "L", simplify(as_expr(self.L)))
        object.__setattr__(self, "q", tuple(self.q))
        object.__setattr__(self, "v", tuple(self.v))
        object.__setattr__(self, "params", {k: float(val) for k, val in self.params.items()})
        if len(self.q) != len(self.v) or not self.q:
            raise ValueError(f"need n >= 1 positions and as many velocities, got {self.q} and {self.v}")
        _check_names(self.coords, self.params, {"L": self.L})

    @property
    def n(self) -> int:
        return len(self.q)

    @property
    def coords(self) -> tuple[str, ...]:
        return self.q + self.v + (self.s,)

    @property
    def dim(self) -> int:
        return 2 * self.n + 1

    def bind(self, x) -> dict[str, float]:
        if isinstance(x, Mapping):
            return {**self.params, **x}
        return {**self.params, **dict(zip(self.coords, map(float, x)))}

    def with_params(self, **updates) -> "ContactLagrangianSystem":
        return ContactLagrangianSystem(self.L, self.q, self.v, self.s, {**self.params, **updates}, self.label)

    # -- derivatives of L -------------------------------------------------

    @cached_property
    def L_v(self) -> tuple[Expr, ...]:
        return tuple(diff(self.L, vi) for vi in self.v)

    @cached_property
    def L_q(self) -> tuple[Expr, ...]:
        return tuple(diff(self.L, qi) for qi in self.q)

    @cached_property
    def L_s(self) -> Expr:
        return diff(self.L, self.s)

    @cached_property
    def L_sv(self) -> tuple[Expr, ...]:
        return tuple(diff(lv, self.s) for lv in self.L_v)

    @cached_property
    def L_qv(self) -> tuple[tuple[Expr, ...], ...]:
        """``L_qv[j][k]`` = d2L / dq^j dv^k."""
        return tuple(tuple(diff(lv, qj) for lv in self.L_v) for qj in self.q)

    @cached_property
    def W(self) -> tuple[tuple[Expr, ...], ...]:
        return tuple(tuple(diff(lv, vj) for vj in self.v) for lv in self.L_v)

    @cached_property
    def symbolic_inverse(self) -> tuple[list[list[Expr]], Expr] | None:
        """(W^{-1}, det W) as expressions, or None when n is too large."""
        if self.n > SYMBOLIC_INVERSE_MAX_N:
            return None
        inv, det = _sym_inverse([list(row) for row in self.W])
        if is_zero(det):
            raise SingularLagrangianError("velocity Hessian vanishes identically; the constraint algorithm is out of scope")
        return inv, det

    # -- contact structure ------------------------------------------------

    @cached_property
    def energy(self) -> Expr:
        return lagrangian_energy(self)

    @cached_property
    def theta(self) -> FormExpr:
        return cartan_forms(self)[0]

    @cached_property
    def eta(self) -> FormExpr:
        return cartan_forms(self)[1]

    @cached_property
    def d_eta(self) -> FormExpr:
        return exterior_derivative(self.eta)

    @cached_property
    def reeb(self):
        return reeb_lagrangian(self)

    @cached_property
    def reeb_rate(self) -> Expr:
        """L_{R_L} E_L, through the identity L_{R_L} E_L = -dL/ds."""
        return simplify(-self.L_s)

    @cached_property
    def dynamics(self):
        return euler_lagrange_field(self)

    @cached_property
    def grad_energy(self) -> tuple[Expr, ...]:
        return tuple(diff(self.energy, x) for x in self.coords)

    @cached_property
    def el_rhs(self) -> tuple[Expr, ...]:
        """Right-hand side of W vdot = (...) in the Euler-Lagrange equations."""
        return tuple(_rhs_exprs(self))

    @cached_property
    def legendre_jacobian(self) -> tuple[tuple[Expr, ...], ...]:
        rows = [Var(qi) for qi in self.q] + list(self.L_v) + [Var(self.s)]
        return tuple(tuple(diff(r, x) for x in self.coords) for r in rows)


def lagrangian_energy(sys: ContactLagrangianSystem) -> Expr:
    out = ZERO
    for vi, lv in zip(sys.v, sys.L_v):
        out = out + Var(vi) * lv
    return simplify(out - sys.L)


def cartan_forms(sys: ContactLagrangianSystem) -> tuple[FormExpr, FormExpr]:
    n = sys.n
    theta = FormExpr.one_form(list(sys.L_v) + [ZERO] * n + [ZERO], sys.coords)
    ds = FormExpr.one_form([ZERO] * (2 * n) + [ONE], sys.coords)
    return theta, ds - theta


def hessian(sys: ContactLagrangianSystem, b: Mapping[str, float]) -> HessianValue:
    """Velocity Hessian at ``b`` with LU-based inverse, determinant and condition number.

    Regular at ``b`` means |det W| >= 1e-10 (1 + ||W||_inf); otherwise ``Winv``
    is NaN and ``regular`` is False.
    """
    b = sys.bind(b)
    n = sys.n
    W = evaluate_many([w for row in sys.W for w in row], b).reshape(n, n)
    det = float(np.linalg.det(W))
    regular = abs(det) >= REGULARITY_RTOL * (1.0 + np.linalg.norm(W, np.inf))
    if regular:
        Winv = np.linalg.inv(W)
        cond = float(np.linalg.cond(W))
    else:
        Winv = np.full((n, n), np.nan)
        cond = float("inf")
    return HessianValue(W, Winv, det, cond, bool(regular), {c: b[c] for c in sys.coords})


def _rhs_exprs(sys: ContactLagrangianSystem) -> list[Expr]:
    """L_{q^k} - v^j L_{q^j v^k} - L L_{s v^k} + L_s L_{v^k}, one per k."""
    out = []
    for k in range(sys.n):
        r = sys.L_q[k]
        for j, vj in enumerate(sys.v):
            r = r - Var(vj) * sys.L_qv[j][k]
        r = r - sys.L * sys.L_sv[k] + sys.L_s * sys.L_v[k]
        out.append(simplify(r))
    return out


def reeb_lagrangian(sys: ContactLagrangianSystem):
    """R_L = d/ds - W^{ji} L_{s v^j} d/dv^i.

    For n above ``SYMBOLIC_INVERSE_MAX_N`` the v-block is computed point by
    point and a ``PointwiseVectorField`` is returned.
    """
    n = sys.n
    fixed = [ZERO] * n
    sym = sys.symbolic_inverse
    if sym is not None:
        Winv, _ = sym
        vblock = []
        for i in range(n):
            c = ZERO
            for j in range(n):
                c = c - Winv[j][i] * sys.L_sv[j]
            vblock.append(c)
        return VectorField(tuple(fixed + vblock + [ONE]), sys.coords, sys.params)

    def evaluator(b):
        H = hessian(sys, b).require_regular()
        lsv = evaluate_many(sys.L_sv, b)
        return np.concatenate([np.zeros(n), -np.linalg.solve(H.W.T, lsv), [1.0]])

    known = {i: ZERO for i in range(n)}
    known[2 * n] = ONE
    return PointwiseVectorField(sys.coords, evaluator, sys.params, known)


def euler_lagrange_field(sys: ContactLagrangianSystem):
    """The Euler-Lagrange SODE Gamma_L; refuses identically singular Lagrangians."""
    n = sys.n
    qblock = [Var(vi) for vi in sys.v]
    rhs = sys.el_rhs
    sym = sys.symbolic_inverse
    if sym is not None:
        Winv, _ = sym
        vblock = []
        for i in range(n):
            c = ZERO
            for k in range(n):
                c = c + Winv[i][k] * rhs[k]
            vblock.append(c)
        return VectorField(tuple(qblock + vblock + [sys.L]), sys.coords, sys.params)

    def evaluator(b):
        H = hessian(sys, b).require_regular()
        vals = evaluate_many([*qblock, *rhs, sys.L], b)
        return np.concatenate([vals[:n], np.linalg.solve(H.W, vals[n:2 * n]), vals[2 * n:]])

    known = {i: qblock[i] for i in range(n)}
    known[2 * n] = sys.L
    return PointwiseVectorField(sys.coords, evaluator, sys.params, known)


# ---------------------------------------------------------------------------
# checks


def lagrange_equation_residuals(sys: ContactLagrangianSystem, X, b: Mapping[str, float],
                                reeb_shortcut: bool = True) -> tuple[np.ndarray, float]:
    """Residuals of i(X) d eta_L = dE_L - (L_{R_L} E_L) eta_L and i(X) eta_L = -E_L.

    With ``reeb_shortcut`` the Reeb derivative of the energy is taken as
    -dL/ds; otherwise it is computed by contracting R_L with dE_L.
    """
    rate = None if reeb_shortcut else _reeb_rate_direct(sys)
    return hamilton_equation_residuals(sys, X, b, reeb_rate=rate)


def _reeb_rate_direct(sys: ContactLagrangianSystem):
    def rate(b):
        return float(field_at(sys.reeb, b) @ evaluate_many(sys.grad_energy, b))

    return rate


def reeb_lag_residual(sys: ContactLagrangianSystem, b: Mapping[str, float]) -> float:
    """R_L(E_L) + dL/ds at ``b``, with R_L(E_L) computed by direct contraction."""
    b = sys.bind(b)
    return _reeb_rate_direct(sys)(b) + evaluate(sys.L_s, b)


def reeb_residuals(sys, b: Mapping[str, float], R=None) -> tuple[float, float]:
    """(max |i(R) d eta|, i(R) eta - 1) at ``b``."""
    b = sys.bind(b)
    r = field_at(sys.reeb if R is None else R, b)
    d_eta = eval_form(sys.d_eta, b)
    eta = eval_form(sys.eta, b)
    return contract(r, d_eta).max_norm(), float(contract(r, eta)[()] - 1.0)


def sode_check(X, n: int | None = None) -> bool:
    """True iff the q-block of ``X`` is symbolically the velocity block of its coordinates."""
    if n is None:
        n = (len(X.coords) - 1) // 2
    vnames = X.coords[n:2 * n]
    if getattr(X, "symbolic", True):
        comps = [X.components[i] for i in range(n)]
    else:
        if any(i not in X.known for i in range(n)):
            return False
        comps = [X.known[i] for i in range(n)]
    return all(isinstance(c, Var) and c.name == vn for c, vn in zip(comps, vnames))


def legendre_map(sys: ContactLagrangianSystem, b: Mapping[str, float],
                 p_names=None) -> dict[str, float]:
    """FL(q, v, s) = (q, dL/dv, s) as bindings for the momentum chart.

    ``p_names`` defaults to ``p_<q>`` for each position name.
    """
    b = sys.bind(b)
    if p_names is None:
        p_names = tuple(f"p_{qi}" for qi in sys.q)
    p = evaluate_many(sys.L_v, b)
    out = {qi: b[qi] for qi in sys.q}
    out.update(zip(p_names, map(float, p)))
    out[sys.s] = b[sys.s]
    return out


def check_legendre_equivalence(sysL: ContactLagrangianSystem, sysH, b: Mapping[str, float]) -> float:
    """max(|H(FL(b)) - E_L(b)|, ||J_FL(b) Gamma_L(b) - X_H(FL(b))||_inf).

    ``sysH`` is matched to ``sysL`` by position: q^i -> q^i, v^i -> p_i, s -> s.
    """
    if sysH.n != sysL.n:
        raise ValueError("Lagrangian and Hamiltonian systems have different dimension")
    b = sysL.bind(b)
    hessian(sysL, b).require_regular()
    fl = legendre_map(sysL, b, p_names=sysH.p)
    fl_h = {**sysH.params, sysH.s: fl[sysL.s], **{qh: fl[ql] for qh, ql in zip(sysH.q, sysL.q)},
            **{ph: fl[ph] for ph in sysH.p}}
    energy_gap = abs(evaluate(sysH.H, fl_h) - evaluate(sysL.energy, b))
    d = sysL.dim
    J = evaluate_many([c for row in sysL.legendre_jacobian for c in row], b).reshape(d, d)
    pushed = J @ field_at(sysL.dynamics, b)
    xh = sysH.dynamics.evaluate(fl_h)
    return float(max(energy_gap, np.max(np.abs(pushed - xh))))


# ---------------------------------------------------------------------------
# holonomic dissipation


@dataclass(frozen=True)
class HolonomicDissipationLagrangian:
    """L = L0(q, v) + phi(q, s)."""

    base: Expr
    phi: Expr
    q: tuple[str, ...] = ("q",)
    v: tuple[str, ...] = ("v",)
    s: str = "s"
    params: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "base", simplify(as_expr(self.base)))
        object.__setattr__(self, "phi", simplify(as_expr(self.phi)))
        if self.s in free_vars(self.base):
            raise ValueError("the base Lagrangian must not depend on s")
        if set(self.v) & free_vars(self.phi):
            raise ValueError("the dissipation term must not depend on velocities")
        full = self.system
        for lsv in full.L_sv:
            if not is_zero(lsv):
                raise ValueError(f"d2L/dv ds = {lsv} does not vanish identically")

    @cached_property
    def system(self) -> ContactLagrangianSystem:
        return ContactLagrangianSystem(self.base + self.phi, self.q, self.v, self.s, self.params)

    @cached_property
    def base_system(self) -> ContactLagrangianSystem:
        return ContactLagrangianSystem(self.base, self.q, self.v, self.s, self.params)

    @cached_property
    def force(self) -> tuple[Expr, ...]:
        return dissipative_force(self)


def dissipative_force(hd: HolonomicDissipationLagrangian) -> tuple[Expr, ...]:
    """dphi/dq^i + (dphi/ds) dL0/dv^i, the right-hand side of the reduced equations."""
    phi_s = diff(hd.phi, hd.s)
    return tuple(simplify(diff(hd.phi, qi) + phi_s * lv) for qi, lv in zip(hd.q, hd.base_system.L_v))


def holonomic_specialization_check(hd: HolonomicDissipationLagrangian, b: Mapping[str, float]) -> float:
    """Largest discrepancy between the general and the specialised formulas at ``b``.

    Compares E_{L0+phi} with E_{L0} - phi, R_L with d/ds, and the general
    Euler-Lagrange force (W F) with the reduced form
    L0_q - v^j L0_{q^j v} + dphi/dq + (dphi/ds) dL0/dv.
    """
    full, base = hd.system, hd.base_system
    b = full.bind(b)
    gaps = [abs(evaluate(full.energy, b) - (evaluate(base.energy, b) - evaluate(hd.phi, b)))]
    R = field_at(full.reeb, b)
    gaps.append(float(np.max(np.abs(R - np.eye(full.dim)[-1]))))
    general = evaluate_many(full.el_rhs, b)
    reduced = evaluate_many(base.el_rhs, b) + evaluate_many(hd.force, b)
    # _rhs_exprs(base) has L0_s = 0 and L0_sv = 0, leaving L0_q - v^j L0_{q^j v}
    gaps.append(float(np.max(np.abs(general - reduced))))
    return max(gaps)
