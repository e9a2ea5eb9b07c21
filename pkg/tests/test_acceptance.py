"""The nine acceptance criteria, each at its stated tolerance.

Every test records one PASS/FAIL line; the lines are printed at the end of
the pytest run (see conftest.py) and also to stdout with ``-s``.
"""

import itertools
import math
import time

import numpy as np

import conftest
from contactmech.checks import CheckOptions, identity_suite
from contactmech.config import catalog_names, load_config
from contactmech.exterior import FormValue, contact_volume_coefficient, contract, wedge
from contactmech.expr import diff, lambdify, parse, substitute
from contactmech.hamiltonian import OnZeroLocusError, hamilton_equation_residuals, omega_residuals, residual_scale
from contactmech.integrate import IntegratorConfig, integrate, observe
from contactmech.lagrangian import (ContactLagrangianSystem, check_legendre_equivalence, hessian, legendre_map,
                                    reeb_residuals)
from contactmech.sampling import sample_box
from contactmech.symmetry import (check_conserved, check_dissipated, contactified_conservation_check,
                                  dissipated_from_symmetry, is_contact_symmetry, is_dynamical_symmetry, lift_for,
                                  quotient_quantity)
from oracles import ael_field, central_fd, dense_contract, dense_from_components, dense_wedge, sym_equal


def record(num: int, ok: bool, summary: str):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {num}: {summary}"
    conftest.ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def underdamped(t, gamma=0.3, omega=2.0):
    wd = math.sqrt(omega ** 2 - gamma ** 2 / 4)
    return math.exp(-gamma * t / 2) * (math.cos(wd * t) + gamma / (2 * wd) * math.sin(wd * t))


def test_criterion_1_damped_oscillator():
    t0 = time.perf_counter()
    cfg = load_config("damped_oscillator")
    sys = cfg.system
    assert sys.params == {"m": 1.0, "omega": 2.0, "gamma": 0.3}
    X = sys.dynamics
    traj = integrate(X, [1.0, 0.0, 0.0], IntegratorConfig(dt=1e-3, t_max=5.0))
    E = observe(traj, sys.energy)
    elapsed = time.perf_counter() - t0  # the sympy oracle below is not part of the pipeline
    want = [parse("v"), parse("-(omega^2*q + gamma*v)"), sys.L]
    symbolic = all(sym_equal(substitute(a, {"m": 1.0}), substitute(b, {"m": 1.0})) for a, b in zip(X.components, want))
    decay = max(abs(E[k] / E[0] - math.exp(-0.3 * t)) / math.exp(-0.3 * t)
                for t in (1, 2, 5) for k in [int(np.argmin(np.abs(traj.times - t)))])
    q_err = abs(traj.column("q")[-1] - underdamped(5.0))
    ok = symbolic and decay <= 1e-6 and q_err <= 1e-7 and elapsed < 1.0
    record(1, ok, f"field symbolic={symbolic}, E decay rel err {decay:.2e} (<=1e-6), "
                  f"q(5) err {q_err:.2e} (<=1e-7), {elapsed:.2f}s (<1s)")


def test_criterion_2_gravity_with_friction():
    t0 = time.perf_counter()
    cfg = load_config("gravity_friction")
    sys = cfg.system
    Y = lift_for(sys, ["1", "0"])
    traj = integrate(sys.dynamics, cfg.initial_state, IntegratorConfig(dt=1e-3, t_max=5.0))
    px = dissipated_from_symmetry(Y, sys.eta, "p_x")
    pv = observe(traj, px.F)
    px_err = float(np.max(np.abs(pv - pv[0] * np.exp(-0.3 * traj.times)) / np.abs(pv[0] * np.exp(-0.3 * traj.times))))
    E = dissipated_from_symmetry(sys.dynamics, sys.eta, "E_L")
    Q = quotient_quantity(E, px)
    qv = observe(traj, Q.F)
    drift = float(np.max(np.abs(qv - qv[0])) / abs(qv[0]))
    conserved = check_conserved(Q, sys, traj, tol=1e-6).passed
    con = is_contact_symmetry(Y, sys, tol=1e-10)
    dyn = is_dynamical_symmetry(Y, sys.dynamics, tol=1e-10)
    elapsed = time.perf_counter() - t0
    ok = px_err <= 1e-6 and drift <= 1e-6 and conserved and con.passed and dyn.passed and elapsed < 1.0
    record(2, ok, f"p_x rel err {px_err:.2e} (<=1e-6), E_L/p_x drift {drift:.2e} (<=1e-6), "
                  f"d/dx contact {con.max_residual:.1e} dynamical {dyn.max_residual:.1e} (<=1e-10), "
                  f"{elapsed:.2f}s (<1s)")


def test_criterion_3_parachute():
    t0 = time.perf_counter()
    cfg = load_config("parachute")
    sys = cfg.system
    g, gamma, m = sys.params["g"], sys.params["gamma"], sys.params["m"]
    X, R = sys.dynamics, sys.reeb
    traj = integrate(X, [10.0, 0.0, 0.0], IntegratorConfig(dt=1e-3, t_max=10.0))
    worst = 0.0
    for x in sample_box(3, 100, seed=0):
        a, c = reeb_residuals(sys, sys.bind(x))
        worst = max(worst, a, abs(c))
    elapsed = time.perf_counter() - t0
    eq_ok = sym_equal(substitute(X[1], sys.params), substitute(parse("gamma*v^2 - g"), sys.params))
    reeb_ok = str(R[0]) == "0" and str(R[2]) == "1" and sym_equal(R[1], parse("-2*gamma/m"))
    v_err = abs(traj.column("v")[-1] + math.sqrt(g / gamma))
    ok = eq_ok and reeb_ok and v_err <= 1e-3 and worst <= 1e-12 and elapsed < 1.0 and m == 1.0
    record(3, ok, f"vdot = gamma v^2 - g: {eq_ok}, R_L symbolic: {reeb_ok}, |v(10) + sqrt(g/gamma)| "
                  f"{v_err:.2e} (<=1e-3), Reeb residual {worst:.1e} (<=1e-12), {elapsed:.2f}s (<1s)")


WANTED = ["contact Hamilton equations", "Reeb-free Omega equations", "flat map of the dynamics",
          "Reeb derivative of the energy", "contact volume vs det W"]


def test_criterion_4_identity_suite():
    t0 = time.perf_counter()
    opts = CheckOptions(points=1000, seed=0)
    worst, failures = {}, []
    for name in catalog_names():
        cfg = load_config(name)
        reps = {r.name: r for r in identity_suite(cfg, opts)}
        for key in WANTED:
            r = reps[key]
            worst[key] = max(worst.get(key, 0.0), r.max_residual)
            if not r.passed:
                failures.append(f"{name}/{key}")
        # the companion Hamiltonian, in Darboux coordinates
        H = cfg.companion
        for x in sample_box(H.dim, 1000, seed=1):
            b = H.bind(x)
            r1, r2 = hamilton_equation_residuals(H, H.dynamics, b)
            if max(np.max(np.abs(r1)), abs(r2)) > 1e-10 * residual_scale(H, b):
                failures.append(f"{name}/companion Hamilton equations")
                break
        # volume nonzero wherever det W is not small
        sys = cfg.system
        for x in sample_box(sys.dim, 200, seed=2):
            b = sys.bind(x)
            if abs(hessian(sys, b).detW) > 1e-6 and contact_volume_coefficient(sys.eta, b) == 0:
                failures.append(f"{name}/volume vanishes")
                break
    osc = load_config("damped_oscillator").system
    try:
        omega_residuals(osc, osc.dynamics, osc.bind({"q": 0.0, "v": 0.0, "s": 0.0}), 1e-6)
        refused = False
    except OnZeroLocusError:
        refused = True
    elapsed = time.perf_counter() - t0
    ok = not failures and refused and elapsed < 10.0
    summary = ", ".join(f"{k} {v:.1e}" for k, v in worst.items())
    record(4, ok, f"1000 pts x {len(catalog_names())} systems: {summary}; zero-locus refusal {refused}; "
                  f"{elapsed:.2f}s (<10s)" + (f"; failed: {failures}" if failures else ""))


def _dense_worst(dim, rng):
    worst = 0.0
    for _ in range(30):
        k = int(rng.integers(0, dim + 1))
        l = int(rng.integers(0, dim - k + 1))
        forms = []
        for deg in (k, l):
            idx = list(itertools.combinations(range(dim), deg))
            forms.append(FormValue(deg, dim, dict(zip(idx, rng.uniform(-3, 3, len(idx))))))
        a, b = forms
        got = wedge(a, b)
        want = dense_wedge(dense_from_components(k, dim, dict(a.components)),
                           dense_from_components(l, dim, dict(b.components)))
        for I in itertools.combinations(range(dim), k + l):
            worst = max(worst, abs(got[I] - (want[I] if k + l else float(want))) / max(1.0, abs(got[I])))
        if k >= 1:
            X = rng.uniform(-3, 3, dim)
            got = contract(X, a)
            want = dense_contract(X, dense_from_components(k, dim, dict(a.components)))
            for I in itertools.combinations(range(dim), k - 1):
                worst = max(worst, abs(got[I] - (want[I] if k > 1 else float(want))) / max(1.0, abs(got[I])))
    return worst


def test_criterion_5_oracles():
    # Euler-Lagrange field vs the pointwise linear system
    systems = [load_config("damped_oscillator").system, load_config("parachute").system,
               ContactLagrangianSystem("(1 + q^2/4)*v^2/2 + s*v*q - sin(q) - s^2/5 + v^4/24")]
    el = 0.0
    for sys in systems:
        oracle, f = ael_field(sys), sys.dynamics.compile()
        for x in sample_box(3, 500, seed=5):
            ref = oracle(x)
            el = max(el, float(np.max(np.abs(f(x) - ref))) / (1 + float(np.max(np.abs(ref)))))
    # derivatives vs central differences
    exprs = ["m*v^2/2 - m*omega^2*q^2/2 - gamma*s",
             "m*v^2/2 - m*g/(2*gamma)*(exp(2*gamma*q) - 1) + 2*gamma*v*s",
             "(v - 2*gamma*s)^2/(2*m) + sin(q)*cos(s)"]
    params = {"m": 1.3, "omega": 2.0, "gamma": 0.3, "g": 9.8}
    pts = sample_box(3, 1000, seed=6)
    fd = 0.0
    for text in exprs:
        e = parse(text)
        fe = lambdify([e], ("q", "v", "s"), params)
        for i, var in enumerate(("q", "v", "s")):
            fd_ = lambdify([diff(e, var)], ("q", "v", "s"), params)
            for x in pts:
                exact = fd_(x)[0]
                fd = max(fd, abs(exact - central_fd(lambda y: fe(y)[0], x, i)) / (1 + abs(exact)))
    rng = np.random.default_rng(7)
    dense = max(_dense_worst(3, rng), _dense_worst(5, rng))
    ok = el <= 1e-9 and fd <= 1e-5 and dense <= 1e-12
    record(5, ok, f"EL field vs linear system {el:.1e} (<=1e-9, 500 pts), d/dx vs FD {fd:.1e} (<=1e-5, 1000 pts), "
                  f"wedge/contract vs dense {dense:.1e} (<=1e-12, dims 3 and 5)")


def test_criterion_6_legendre():
    worst = {}
    for name in ("damped_oscillator", "gravity_friction"):
        cfg = load_config(name)
        L, H = cfg.system, cfg.companion
        worst[name] = max(check_legendre_equivalence(L, H, L.bind(x)) for x in sample_box(L.dim, 100, seed=8))
    ok = all(v <= 1e-9 for v in worst.values())
    record(6, ok, "Legendre residual " + ", ".join(f"{k} {v:.1e}" for k, v in worst.items()) + " (<=1e-9, 100 pts)")


def test_criterion_7_dissipation_theorem():
    rows, ok = [], True
    for name in catalog_names():
        cfg = load_config(name)
        sys = cfg.system
        traj = integrate(sys.dynamics, cfg.initial_state, cfg.integrator(t_max=5.0))
        for label, (cand, _) in cfg.symmetry_candidates().items():
            F = dissipated_from_symmetry(cand.Y, sys.eta, label)
            r = check_dissipated(F, sys, traj, tol=1e-9, global_tol=1e-6)
            ok &= r.passed
            rows.append(f"{name}/{label} {r.details['pointwise']:.1e}/{r.details['global']:.1e}")
    record(7, ok, "pointwise/global " + ", ".join(rows) + " (<=1e-9 / <=1e-6, t in [0,5])")


def _conservative_systems():
    out = []
    for name in ("damped_oscillator", "gravity_friction"):
        cfg = load_config(name)
        sys, H = cfg.system.with_params(gamma=0.0), cfg.companion.with_params(gamma=0.0)
        lifts = [lift_for(sys, ["1", "0"])] if name == "gravity_friction" else []
        out.append((name, sys, H, cfg.initial_state, lifts))
    # the parachute Lagrangian is singular at gamma = 0; its limit is free fall
    lim = ContactLagrangianSystem("m*v^2/2 - m*g*y", q=("y",), params={"m": 1.0, "g": 9.8})
    out.append(("parachute", lim, None, load_config("parachute").initial_state, []))
    return out


def test_criterion_8_conservative_limit():
    rows, ok = [], True
    icfg = IntegratorConfig(dt=1e-3, t_max=10.0)
    for name, sys, H, x0, lifts in _conservative_systems():
        traj = integrate(sys.dynamics, x0, icfg)
        E = observe(traj, sys.energy)
        drift = float(np.max(np.abs(E - E[0])) / max(1.0, abs(E[0])))
        if H is not None:
            y0 = legendre_map(sys, sys.bind(x0), H.p)
            trajH = integrate(H.dynamics, [y0[c] for c in H.coords], icfg)
            Hv = observe(trajH, H.H)
            drift = max(drift, float(np.max(np.abs(Hv - Hv[0])) / max(1.0, abs(Hv[0]))))
        ok &= drift <= 1e-8
        worst_g, n_sym = 0.0, 0
        for Y in [sys.dynamics, *lifts]:
            if not is_dynamical_symmetry(Y, sys.dynamics).passed:
                continue
            r = contactified_conservation_check(sys, Y, traj, tol=1e-8)
            ok &= r.passed
            worst_g, n_sym = max(worst_g, r.max_residual), n_sym + 1
        rows.append(f"{name}: drift {drift:.1e}, -i(Y)eta conserved for {n_sym} symmetries {worst_g:.1e}")
    record(8, ok, "; ".join(rows) + " (<=1e-8, t in [0,10])")


def test_criterion_9_rk4_order():
    cfg = load_config("damped_oscillator")

    def err(dt):
        traj = integrate(cfg.system.dynamics, [1.0, 0.0, 0.0], IntegratorConfig(dt=dt, t_max=5.0))
        return abs(traj.column("q")[-1] - underdamped(5.0))

    e1, e2, e3 = err(0.04), err(0.02), err(0.01)
    r1, r2 = e1 / e2, e2 / e3
    ok = 8 <= r1 <= 32 and 8 <= r2 <= 32
    record(9, ok, f"error ratios under dt halving {r1:.2f}, {r2:.2f} (in [8,32])")
