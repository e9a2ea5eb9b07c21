"""RK4 convergence on the damped oscillator against its closed-form solution.

    python3 scripts/order_study.py --dt 0.08 --levels 6
"""

import argparse
import math
from dataclasses import dataclass

from contactmech.config import load_config
from contactmech.integrate import IntegratorConfig, integrate


@dataclass
class StudyConfig:
    dt: float = 0.08
    levels: int = 6
    t_max: float = 5.0


def q_exact(t, gamma, omega):
    wd = math.sqrt(omega ** 2 - gamma ** 2 / 4)
    return math.exp(-gamma * t / 2) * (math.cos(wd * t) + gamma / (2 * wd) * math.sin(wd * t))


def run(cfg: StudyConfig):
    sys = load_config("damped_oscillator").system
    gamma, omega = sys.params["gamma"], sys.params["omega"]
    exact = q_exact(cfg.t_max, gamma, omega)
    rows, prev = [], None
    for k in range(cfg.levels):
        dt = cfg.dt / 2 ** k
        traj = integrate(sys.dynamics, [1.0, 0.0, 0.0], IntegratorConfig(dt=dt, t_max=cfg.t_max))
        err = abs(traj.column("q")[-1] - exact)
        rows.append((dt, err, prev / err if prev else float("nan")))
        prev = err
    return rows


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--dt", type=float, default=StudyConfig.dt)
    ap.add_argument("--levels", type=int, default=StudyConfig.levels)
    ap.add_argument("--t-max", type=float, default=StudyConfig.t_max)
    a = ap.parse_args()
    print(f"{'dt':>10} {'|q(T) - exact|':>16} {'ratio':>8}")
    for dt, err, ratio in run(StudyConfig(a.dt, a.levels, a.t_max)):
        print(f"{dt:10.5f} {err:16.3e} {ratio:8.2f}")
    # ratios drift away from 16 once the error reaches round-off


if __name__ == "__main__":
    main()
