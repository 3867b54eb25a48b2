"""Pick leg link length, spring rate, and leg mass with a particle swarm.

The landing leg must absorb a 2.5 m/s touchdown without the peak force
exceeding the airframe limit, while staying light and springy enough to
damp the bounce quickly.  ``leg_cost_batch`` folds those goals into one
scalar; this script minimizes it over the design box and compares the
optimum with the stock leg.

Run: python3 demos/leg_design_pso.py
"""

from perchsim.leg import DESIGN_BOUNDS, LegParams, leg_cost_batch, simulate_impact
from perchsim.pso import PsoConfig, pso_minimize

import numpy as np


def main():
    cfg = PsoConfig(bounds=DESIGN_BOUNDS, particles=40, iterations=60,
                    seed=2024)
    result = pso_minimize(leg_cost_batch, cfg, vectorized=True)
    link, rate, mass = result.best_x

    print("== Swarm optimum ==")
    print(f"link length : {link * 100:.1f} cm")
    print(f"spring rate : {rate:.0f} N/m")
    print(f"leg mass    : {mass * 1000:.0f} g")
    print(f"cost        : {result.best_cost:.4f} "
          f"(stock leg: {float(leg_cost_batch(np.array([[0.2, 1200.0, 0.1]]))[0]):.4f})")

    print("\n== Convergence (best cost per iteration) ==")
    for i, c in enumerate(result.history[::10]):
        print(f"iter {i * 10:3d}: {c:.4f}")

    best = LegParams(link_length_m=float(link),
                     leg_spring_rate_n_m=float(rate),
                     leg_mass_kg=float(mass))
    rec = simulate_impact(best)
    print(f"\noptimized leg at 2.5 m/s: peak {rec.peak_force_n:.1f} N, "
          f"bounce settles in {rec.time_to_bounce_ms:.1f} ms")


if __name__ == "__main__":
    main()
