"""Symmetries, dissipated and conserved quantities of contact dynamics.

Symmetry tests are pointwise and numerical over a seeded sample box.  A
candidate whose defining expression simplifies to zero passes without
sampling; anything else is sampled, since ``simplify`` cannot prove
identities.  All checks work for both Hamiltonian and Lagrangian systems
through the same duck-typed interface used in ``hamiltonian``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .exterior import FormExpr, VectorField, _merge_params, _same_frame, exterior_derivative, symbolic_contract
from .expr import ZERO, Expr, ExprError, as_expr, diff, free_vars, is_zero, lambdify, simplify, substitute
from .integrate import Trajectory, cumulative_quadrature
from .report import CheckReport, point_dict, sweep
from .sampling import DEFAULT_BOX, DEFAULT_SEED, sample_box

__all__ = [
    "SymmetryCandidate", "Quantity", "lie_bracket", "lie_derivative_one_form", "is_dynamical_symmetry",
    "is_contact_symmetry", "dissipated_from_symmetry", "check_dissipated", "quotient_quantity", "check_conserved",
    "complete_lift", "contactified_conservation_check", "dissipation_theorem_check", "cyclic_coordinates",
    "flow_step", "check_pullback_dissipated", "lift_for", "QUOTIENT_GUARD",
]

QUOTIENT_GUARD = 1e-6
KINDS = ("dissipated", "conserved", "unknown")


@dataclass(frozen=True)
class SymmetryCandidate:
    Y: VectorField
    label: str = ""


@dataclass(frozen=True)
class Quantity:
    """A function on the contact manifold with its claimed behaviour.

    ``guard`` is an optional denominator; points where it is below
    ``QUOTIENT_GUARD`` in magnitude are excluded from checks.
    """

    F: Expr
    kind: str = "unknown"
    label: str = ""
    guard: Expr | None = None

    def __post_init__(self):
        object.__setattr__(self, "F", simplify(as_expr(self.F)))
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")


def _require_symbolic(*fields):
    for X in fields:
        if not getattr(X, "symbolic", False):
            raise TypeError("symbolic vector field required")


def lie_bracket(X: VectorField, Y: VectorField) -> VectorField:
    """[X, Y]^i = X(Y^i) - Y(X^i)."""
    _require_symbolic(X, Y)
    _same_frame(X, Y)
    comps = tuple(X.apply(y) - Y.apply(x) for x, y in zip(X.components, Y.components))
    return VectorField(comps, X.coords, _merge_params(X.params, Y.params))


def lie_derivative_one_form(Y: VectorField, f: FormExpr) -> FormExpr:
    """L_Y f = i(Y) df + d(i(Y) f) for forms of degree 0 or 1."""
    if f.degree > 1:
        raise ValueError("Lie derivative is only provided for 0- and 1-forms")
    if tuple(f.coords) != tuple(Y.coords):
        raise ValueError(f"coordinate mismatch: {Y.coords} vs {f.coords}")
    if f.degree == 0:
        return FormExpr.function(Y.apply(f[()]), f.coords)
    df = exterior_derivative(f)
    return symbolic_contract(Y.components, df) + exterior_derivative(symbolic_contract(Y.components, f))


def _points(coords, box, seed, n_points):
    return sample_box(len(coords), n_points, box, seed, include_center=True)


def _pointwise_check(name: str, groups: dict[str, Sequence[Expr]], coords, params, box, seed, tol, n_points,
                     extra_scale: Sequence[Expr] = ()) -> CheckReport:
    """Evaluate each group of expressions at the sample points.

    The residual of a group is its max-norm divided by
    ``1 + max|x| + sum |extra_scale|``.  Groups that are symbolically zero are
    skipped.
    """
    live = {k: tuple(v) for k, v in groups.items() if not all(is_zero(e) for e in v)}
    per = {k: 0.0 for k in groups}
    if not live:
        return CheckReport(name, True, 0.0, None, {"residuals": per, "points": 0}, "symbolic zero")
    pts = _points(coords, box, seed, n_points)
    flat = [e for v in live.values() for e in v] + list(extra_scale)
    vals = sweep(flat, coords, params, pts)
    ok = ~np.any(np.isnan(vals), axis=1)
    if not np.any(ok):
        return CheckReport(name, False, float("inf"), None, {"residuals": per, "points": 0},
                           "no sample point was in the domain")
    scale = 1.0 + np.max(np.abs(pts), axis=1)
    if extra_scale:
        scale = scale + np.sum(np.abs(vals[:, -len(extra_scale):]), axis=1)
    worst, worst_k, col = 0.0, None, 0
    for key, v in live.items():
        r = np.max(np.abs(vals[:, col:col + len(v)]), axis=1) / scale
        col += len(v)
        r = np.where(ok, r, -1.0)
        k = int(np.argmax(r))
        per[key] = float(r[k])
        if r[k] > worst or worst_k is None:
            worst, worst_k = float(r[k]), k
    details = {"residuals": per, "points": int(np.sum(ok)), "skipped_points": int(np.sum(~ok)), "tol": tol}
    return CheckReport(name, worst <= tol, worst, point_dict(coords, pts[worst_k]), details)


def is_dynamical_symmetry(Y: VectorField, X: VectorField, box=DEFAULT_BOX, seed: int = DEFAULT_SEED,
                          tol: float = 1e-10, n_points: int = 100, kernel_eta: FormExpr | None = None,
                          name: str = "dynamical symmetry") -> CheckReport:
    """Is [Y, X] = 0 on the sample box?

    With ``kernel_eta`` the weaker condition [Y, X] in ker eta is tested
    instead; that still suffices for -i(Y) eta to be dissipated.
    """
    B = lie_bracket(Y, X)
    if kernel_eta is None:
        groups = {"[Y,X]": B.components}
    else:
        groups = {"eta([Y,X])": tuple(symbolic_contract(B.components, kernel_eta).components.values()) or (ZERO,)}
    rep = _pointwise_check(name, groups, X.coords, B.params, box, seed, tol, n_points)
    if kernel_eta is not None:
        rep.note = (rep.note + "; " if rep.note else "") + "kernel-eta mode"
    return rep


def is_contact_symmetry(Y: VectorField, sys, box=DEFAULT_BOX, seed: int = DEFAULT_SEED, tol: float = 1e-10,
                        n_points: int = 100, name: str = "contact symmetry") -> CheckReport:
    """L_Y eta = 0 and L_Y H = 0, plus the consequence [Y, R] = 0."""
    _same_frame(Y, sys)
    params = _merge_params(sys.params, Y.params)
    Leta = lie_derivative_one_form(Y, sys.eta)
    groups = {
        "L_Y eta": tuple(Leta.components.values()),
        "L_Y H": (Y.apply(sys.energy),),
        "[Y,R]": lie_bracket(Y, sys.reeb).components,
    }
    return _pointwise_check(name, groups, sys.coords, params, box, seed, tol, n_points, (sys.energy,))


def dissipated_from_symmetry(Y: VectorField, eta: FormExpr, label: str = "") -> Quantity:
    """F = -i(Y) eta."""
    F = ZERO
    for (i,), a in eta.components.items():
        if not is_zero(Y[i]):
            F = F - Y[i] * a
    return Quantity(F, "dissipated", label)


def quotient_quantity(F1: Quantity, F2: Quantity, label: str = "") -> Quantity:
    """F1 / F2 of two dissipated quantities, which is conserved."""
    if F1.kind != "dissipated" or F2.kind != "dissipated":
        raise ValueError("a conserved quotient needs two dissipated quantities")
    return Quantity(F1.F / F2.F, "conserved", label or f"({F1.label or F1.F})/({F2.label or F2.F})", guard=F2.F)


def _rate_exprs(sys, F: Quantity):
    """X(F) through the gradient of F, so pointwise fields work too."""
    return [diff(F.F, x) for x in sys.coords]


def _along(sys, traj: Trajectory, F: Quantity):
    """F, grad F, the Reeb rate and the guard along ``traj``, plus X at each state."""
    if tuple(traj.coords) != tuple(sys.coords):
        raise ValueError(f"trajectory coordinates {traj.coords} do not match {sys.coords}")
    exprs = [F.F, sys.reeb_rate] + _rate_exprs(sys, F) + ([F.guard] if F.guard is not None else [])
    vals = sweep(exprs, sys.coords, sys.params, traj.states)
    X = sys.dynamics.compile()
    xs = np.array([X(x) for x in traj.states])
    Fv, rate = vals[:, 0], vals[:, 1]
    grad = vals[:, 2:2 + len(sys.coords)]
    ok = ~np.any(np.isnan(vals), axis=1)
    if F.guard is not None:
        ok &= np.abs(vals[:, -1]) >= QUOTIENT_GUARD
    XF = np.einsum("ij,ij->i", grad, xs)
    return Fv, rate, XF, ok


def check_dissipated(F: Quantity, sys, traj: Trajectory, tol: float = 1e-9, global_tol: float = 1e-6,
                     name: str = "") -> CheckReport:
    """X(F) = -(L_R H) F along ``traj``, pointwise and in integrated form.

    The pointwise residual is |X(F) + (L_R H) F| / (1 + |F|).  The global
    error compares F(t) with F(0) exp(-int_0^t L_R H), divided by
    max(1, max|F(0) exp(...)|) so that F(0) = 0 stays well defined; the
    integral is done by Simpson's rule on the stored steps.
    """
    name = name or f"dissipated {F.label or F.F}"
    Fv, rate, XF, ok = _along(sys, traj, F)
    if not np.all(ok):
        k = int(np.argmin(ok))
        return CheckReport(name, False, float("inf"), traj.bindings(k, {}),
                           {"step": k}, f"not evaluable along the trajectory at step {k}")
    r = np.abs(XF + rate * Fv) / (1.0 + np.abs(Fv))
    k = int(np.argmax(r))
    predicted = Fv[0] * np.exp(-cumulative_quadrature(traj.times, rate))
    g = np.abs(Fv - predicted) / max(1.0, float(np.max(np.abs(predicted))))
    kg = int(np.argmax(g))
    passed = r[k] <= tol and g[kg] <= global_tol
    details = {"pointwise": float(r[k]), "global": float(g[kg]), "global_worst_t": float(traj.times[kg]),
               "tol": tol, "global_tol": global_tol}
    worst = traj.bindings(kg if g[kg] > global_tol else k, {})
    return CheckReport(name, bool(passed), float(r[k]), worst, details)


def check_conserved(G: Quantity, sys, traj: Trajectory, tol: float = 1e-6, name: str = "") -> CheckReport:
    """X(G) = 0 pointwise and no drift of G along ``traj``.

    Drift is reported absolute and relative; the pass test uses
    |G(t) - G(0)| / max(1, |G(0)|) and the pointwise |X(G)| / (1 + |G|).
    """
    name = name or f"conserved {G.label or G.F}"
    Gv, rate, XG, ok = _along(sys, traj, G)
    if not ok[0]:
        return CheckReport(name, False, float("inf"), traj.bindings(0, {}), {},
                           "quantity not evaluable at the initial state")
    idx = np.flatnonzero(ok)
    r = np.abs(XG[idx]) / (1.0 + np.abs(Gv[idx]))
    drift = np.abs(Gv[idx] - Gv[0])
    rel = drift / max(1.0, abs(Gv[0]))
    k = int(np.argmax(rel))
    worst = max(float(np.max(r)), float(rel[k]))
    details = {"pointwise": float(np.max(r)), "drift_abs": float(np.max(drift)), "drift_rel": float(rel[k]),
               "excluded_steps": int(len(ok) - len(idx)), "tol": tol}
    return CheckReport(name, worst <= tol, worst, traj.bindings(int(idx[k]), {}), details)


def complete_lift(Z: Sequence, q: Sequence[str], fiber: Sequence[str], s: str = "s", kind: str = "tangent",
                  params: Mapping[str, float] | None = None) -> VectorField:
    """Complete lift of Z = Z^i d/dq^i to (q, fiber, s).

    tangent:   Z^i d/dq^i + v^j dZ^i/dq^j d/dv^i
    cotangent: Z^i d/dq^i - p_j dZ^j/dq^i d/dp_i
    Both have zero s-component.
    """
    Z = [simplify(as_expr(z)) for z in Z]
    q, fiber = tuple(q), tuple(fiber)
    if len(Z) != len(q) or len(fiber) != len(q):
        raise ValueError("Z, q and the fiber coordinates must have the same length")
    for z in Z:
        bad = free_vars(z) & (set(fiber) | {s})
        if bad:
            raise ValueError(f"base field may depend on positions only, found {sorted(bad)}")
    n = len(q)
    lift = []
    for i in range(n):
        c = ZERO
        for j in range(n):
            if kind == "tangent":
                c = c + as_expr(fiber[j]) * diff(Z[i], q[j])
            elif kind == "cotangent":
                c = c - as_expr(fiber[j]) * diff(Z[j], q[i])
            else:
                raise ValueError(f"kind must be 'tangent' or 'cotangent', got {kind!r}")
        lift.append(c)
    return VectorField(tuple(Z) + tuple(lift) + (ZERO,), q + fiber + (s,), params or {})


def lift_for(sys, Z: Sequence) -> VectorField:
    """Complete lift matched to the system: tangent for Lagrangian, cotangent for Hamiltonian."""
    if hasattr(sys, "v"):
        return complete_lift(Z, sys.q, sys.v, sys.s, "tangent", sys.params)
    return complete_lift(Z, sys.q, sys.p, sys.s, "cotangent", sys.params)


def dissipation_theorem_check(Y: VectorField, sys, box=DEFAULT_BOX, seed: int = DEFAULT_SEED, tol: float = 1e-10,
                              n_points: int = 100, name: str = "") -> CheckReport:
    """X(F) + (L_R H) F at sampled points for F = -i(Y) eta."""
    F = dissipated_from_symmetry(Y, sys.eta)
    X = sys.dynamics
    _require_symbolic(X)
    expr = X.apply(F.F) + sys.reeb_rate * F.F
    return _pointwise_check(name or "dissipation theorem", {"X(F)+R(H)F": (expr,)}, sys.coords,
                            _merge_params(sys.params, Y.params), box, seed, tol, n_points, (F.F,))


def cyclic_coordinates(sys) -> tuple[str, ...]:
    """Positions q^i with dH/dq^i symbolically zero; their momenta are dissipated."""
    return tuple(qi for qi in sys.q if is_zero(diff(sys.energy, qi)))


def contactified_conservation_check(sys, Y: VectorField, traj: Trajectory, tol: float = 1e-7, box=DEFAULT_BOX,
                                    seed: int = DEFAULT_SEED, n_points: int = 100,
                                    sym_tol: float = 1e-10) -> CheckReport:
    """For s-independent energy, G = -i(Y) eta is conserved, not only dissipated."""
    name = "conservative limit"
    rate = simplify(substitute(sys.reeb_rate, sys.params))  # gamma = 0 counts as s-independent
    if not is_zero(rate):
        return CheckReport(name, False, float("nan"), None, {},
                           f"precondition violated: L_R H = {sys.reeb_rate} is not identically zero")
    sym = is_dynamical_symmetry(Y, sys.dynamics, box, seed, sym_tol, n_points)
    if not sym.passed:
        return CheckReport(name, False, sym.max_residual, sym.worst_point, {"symmetry": sym.to_dict()},
                           "precondition violated: Y is not a dynamical symmetry")
    G = dissipated_from_symmetry(Y, sys.eta)
    rep = check_conserved(Quantity(G.F, "conserved", G.label), sys, traj, tol, name)
    rep.details["G"] = str(G.F)
    return rep


def flow_step(Y: VectorField, eps: float = 0.01):
    """Time-eps map of Y approximated by one classical RK4 step."""
    f = Y.compile()

    def phi(x):
        x = np.asarray(x, dtype=float)
        k1 = f(x)
        k2 = f(x + 0.5 * eps * k1)
        k3 = f(x + 0.5 * eps * k2)
        k4 = f(x + eps * k3)
        return x + (eps / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)

    return phi


def check_pullback_dissipated(F: Quantity, Y: VectorField, sys, traj: Trajectory, eps: float = 0.01,
                              tol: float = 1e-6) -> CheckReport:
    """If Y generates contact symmetries, F o Phi_eps decays like F along ``traj``.

    Only the integrated law is checked; the flow map is approximate so the
    residual carries an O(eps^5) flow error on top of the integrator error.
    """
    phi = flow_step(Y, eps)
    fF = lambdify((F.F, sys.reeb_rate), sys.coords, sys.params)
    try:
        G = np.array([fF(phi(x))[0] for x in traj.states])
        rate = np.array([fF(x)[1] for x in traj.states])
    except ExprError as exc:
        return CheckReport("pullback dissipated", False, float("inf"), None, {}, f"evaluation failed: {exc}")
    predicted = G[0] * np.exp(-cumulative_quadrature(traj.times, rate))
    err = np.abs(G - predicted) / max(1.0, float(np.max(np.abs(predicted))))
    k = int(np.argmax(err))
    return CheckReport("pullback dissipated", bool(err[k] <= tol), float(err[k]), traj.bindings(k, {}),
                       {"eps": eps, "tol": tol})
