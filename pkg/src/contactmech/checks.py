"""Residual suites over a configured system: identities, symmetries, Legendre.

Each suite returns a list of ``CheckReport``.  Failures are entries, never
exceptions; numeric trouble at a single sample point (domain errors,
singular Hessian) excludes that point and is counted in the details.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .config import SystemConfig
from .exterior import contact_volume_coefficient
from .expr import ExprError, evaluate
from .hamiltonian import (OnZeroLocusError, _structure_at, dissipation_rate_residual, flat_map, hamilton_equation_residuals,
                          omega_residuals, residual_scale)
from .integrate import IntegrationError, integrate
from .lagrangian import (ContactLagrangianSystem, SingularLagrangianError, check_legendre_equivalence, hessian,
                         holonomic_specialization_check, lagrange_equation_residuals, reeb_lag_residual,
                         reeb_residuals, sode_check)
from .report import CheckReport, point_dict
from .sampling import sample_box
from .symmetry import (Quantity, check_conserved, check_dissipated, dissipation_theorem_check,
                       is_contact_symmetry, is_dynamical_symmetry)

__all__ = ["CheckOptions", "identity_suite", "symmetry_suite", "legendre_suite", "run_suites", "SUITES",
           "OMEGA_MIN_ENERGY", "ZERO_LOCUS_TOL", "DET_FLOOR"]

SUITES = ("identities", "symmetries", "legendre")
OMEGA_MIN_ENERGY = 0.1
ZERO_LOCUS_TOL = 1e-6
DET_FLOOR = 1e-6


@dataclass(frozen=True)
class CheckOptions:
    box: tuple[float, float] = (-2.0, 2.0)
    points: int = 100
    tol: float = 1e-10
    seed: int = 0
    t_max: float = 5.0
    traj_tol: float = 1e-9
    global_tol: float = 1e-6
    conserved_tol: float = 1e-6


def _regular_mask(sys, pts) -> np.ndarray:
    if not isinstance(sys, ContactLagrangianSystem):
        return np.ones(len(pts), dtype=bool)
    out = np.zeros(len(pts), dtype=bool)
    for k, x in enumerate(pts):
        try:
            out[k] = hessian(sys, sys.bind(x)).regular
        except (ExprError, ArithmeticError):
            pass
    return out


def _sweep(name: str, sys, pts, fn: Callable, tol: float, mask=None) -> CheckReport:
    """Max of ``fn(b)`` over the points; ``None`` or ``mask[k] == False`` excludes a point."""
    worst, worst_b, excluded, refused = 0.0, None, 0, 0
    for k, x in enumerate(pts):
        b = sys.bind(x)
        if mask is not None and not mask[k]:
            excluded += 1
            continue
        try:
            r = fn(b)
        except OnZeroLocusError:
            refused += 1
            continue
        except (ExprError, ArithmeticError):
            excluded += 1
            continue
        if r is None:
            excluded += 1
            continue
        if not r <= worst:  # also catches NaN
            worst, worst_b = float(r), b
    used = len(pts) - excluded - refused
    details = {"points": used, "excluded": excluded, "tol": tol}
    note = ""
    if refused:
        details["refused_zero_locus"] = refused
        note = f"{refused} point(s) on the H = 0 locus refused"
    if used == 0:
        return CheckReport(name, False, float("inf"), None, details, "no usable sample point")
    wp = None if worst_b is None else point_dict(sys.coords, [worst_b[c] for c in sys.coords])
    return CheckReport(name, bool(worst <= tol), worst, wp, details, note)


def _sample(cfg: SystemConfig, opts: CheckOptions, offset: int = 0):
    return sample_box(len(cfg.coords), opts.points, opts.box, opts.seed + offset, include_center=True)


def identity_suite(cfg: SystemConfig, opts: CheckOptions = CheckOptions()) -> list[CheckReport]:
    sys = cfg.system
    X = sys.dynamics
    lag = cfg.formalism == "lagrangian"
    pts = _sample(cfg, opts)
    regular = _regular_mask(sys, pts)
    tol = opts.tol
    out = []

    def eqs(b):
        r1, r2 = (lagrange_equation_residuals if lag else hamilton_equation_residuals)(sys, X, b)
        return max(float(np.max(np.abs(r1))), abs(r2)) / residual_scale(sys, b)

    out.append(_sweep("contact Hamilton equations", sys, pts, eqs, tol, regular))

    def omega(b):
        H = evaluate(sys.energy, b)
        if abs(H) <= OMEGA_MIN_ENERGY:
            if abs(H) <= ZERO_LOCUS_TOL:
                omega_residuals(sys, X, b, ZERO_LOCUS_TOL)  # raises: documented refusal
            return None
        r1, r2 = omega_residuals(sys, X, b, ZERO_LOCUS_TOL)
        return max(r1, abs(r2)) / residual_scale(sys, b)

    out.append(_sweep("Reeb-free Omega equations", sys, pts, omega, tol, regular))

    def flat(b):
        H, rate = evaluate(sys.energy, b), evaluate(sys.reeb_rate, b)
        lhs = flat_map(sys, X, b)
        _, eta, _, _, _, dH = _structure_at(sys, b)
        rhs = dH.to_array() - (rate + H) * eta.to_array()
        return float(np.max(np.abs(lhs - rhs)))

    out.append(_sweep("flat map of the dynamics", sys, pts, flat, tol, regular))

    def reeb(b):
        a, c = reeb_residuals(sys, b)
        return max(a, abs(c))

    out.append(_sweep("Reeb field", sys, pts, reeb, tol, regular))
    out.append(_sweep("dissipation rate X(H) = -R(H) H", sys, pts,
                      lambda b: abs(dissipation_rate_residual(sys, b)) / residual_scale(sys, b), tol, regular))

    if lag:
        out.append(_sweep("Reeb derivative of the energy", sys, pts, lambda b: abs(reeb_lag_residual(sys, b)), tol, regular))

        def volume(b):
            det = hessian(sys, b).detW
            if abs(det) <= DET_FLOOR:
                return None
            c = contact_volume_coefficient(sys.eta, b, sys.n, sys.d_eta)
            if c == 0:
                return float("inf")
            return abs(abs(c) - abs(det)) / abs(det)

        out.append(_sweep("contact volume vs det W", sys, pts, volume, 1e-9))
        ok = sode_check(X, sys.n)
        out.append(CheckReport("second-order (SODE) field", ok, 0.0 if ok else 1.0, None,
                               {}, "" if ok else "q-components differ from the velocities"))
        hd = cfg.holonomic_system
        if hd is not None:
            out.append(_sweep("holonomic dissipation specialisation", sys, pts,
                              lambda b: holonomic_specialization_check(hd, b), tol, regular))
        bad = [point_dict(sys.coords, x) for x, r in zip(pts, regular) if not r]
        out.append(CheckReport("regularity of the velocity Hessian", not bad, float(len(bad)),
                               bad[0] if bad else None, {"singular_points": len(bad)},
                               f"{len(bad)} singular sample point(s)" if bad else ""))
    else:
        def volume(b):
            return abs(abs(contact_volume_coefficient(sys.eta, b, sys.n, sys.d_eta)) - 1.0)

        out.append(_sweep("contact volume", sys, pts, volume, 1e-12))

    traj = _trajectory(cfg, opts, out)
    if traj is not None:
        E = Quantity(sys.energy, "dissipated", "energy")
        out.append(check_dissipated(E, sys, traj, opts.traj_tol, opts.global_tol, "energy dissipation along orbit"))
    return out


def _trajectory(cfg: SystemConfig, opts: CheckOptions, out: list[CheckReport]):
    if cfg.initial_state is None:
        out.append(CheckReport("trajectory checks", True, 0.0, skipped=True, note="no initial state in config"))
        return None
    try:
        return integrate(cfg.system.dynamics, cfg.initial_state, cfg.integrator(t_max=opts.t_max), cfg.name)
    except IntegrationError as exc:
        out.append(CheckReport("trajectory", False, float("inf"), None, {}, str(exc)))
        return None


def symmetry_suite(cfg: SystemConfig, opts: CheckOptions = CheckOptions()) -> list[CheckReport]:
    sys = cfg.system
    out = []
    cands = cfg.symmetry_candidates()
    if not cands and not cfg.quantities:
        return [CheckReport("symmetries", True, skipped=True, note="no symmetries or quantities declared")]
    kw = dict(box=opts.box, seed=opts.seed, tol=opts.tol, n_points=opts.points)
    for name, (cand, contact) in cands.items():
        dyn = is_dynamical_symmetry(cand.Y, sys.dynamics, name=f"{name}: dynamical symmetry", **kw)
        out.append(dyn)
        con = is_contact_symmetry(cand.Y, sys, name=f"{name}: contact symmetry", **kw)
        if contact:
            out.append(con)
        if con.passed and not dyn.passed:
            out.append(CheckReport(f"{name}: contact implies dynamical", False, dyn.max_residual,
                                   dyn.worst_point, {}, "contact symmetry that is not a dynamical symmetry"))
        if dyn.passed:
            out.append(dissipation_theorem_check(cand.Y, sys, name=f"{name}: -i(Y)eta dissipated at points", **kw))
    traj = _trajectory(cfg, opts, out) if cfg.quantities or cands else None
    if traj is not None:
        for name, qty in cfg.quantity_objects().items():
            if qty.kind == "dissipated":
                out.append(check_dissipated(qty, sys, traj, opts.traj_tol, opts.global_tol, f"{name}: dissipated"))
            elif qty.kind == "conserved":
                out.append(check_conserved(qty, sys, traj, opts.conserved_tol, f"{name}: conserved"))
    return out


def legendre_suite(cfg: SystemConfig, opts: CheckOptions = CheckOptions()) -> list[CheckReport]:
    if cfg.formalism != "lagrangian" or cfg.companion is None:
        return [CheckReport("Legendre equivalence", True, skipped=True, note="no companion Hamiltonian in config")]
    sysL, sysH = cfg.system, cfg.companion
    pts = _sample(cfg, opts)

    def gap(b):
        try:
            return check_legendre_equivalence(sysL, sysH, b)
        except SingularLagrangianError:
            return None

    return [_sweep("Legendre equivalence", sysL, pts, gap, max(opts.tol, 1e-9), _regular_mask(sysL, pts))]


def run_suites(cfg: SystemConfig, suite: str = "all", opts: CheckOptions = CheckOptions()) -> list[CheckReport]:
    names = SUITES if suite == "all" else (suite,)
    table = {"identities": identity_suite, "symmetries": symmetry_suite, "legendre": legendre_suite}
    out = []
    for s in names:
        out += table[s](cfg, opts)
    return out
