"""Decay rates in three dimensions.

With finite mass and uniform decay, the solution approaches M Gamma_t at the
heat-kernel rate: the sup norm falls like t^{-3/2} and the first nonlinear
correction is the self-similar profile W_star at order t^{-2}.  This script
runs a radial n = 3 solution out to t = 200 and fits both rates.
"""

import math

import numpy as np

from pkslab import SolverConfig, evolve, fields
from pkslab.asymptotics import fit_rate
from pkslab.grids import radial_grid

mass = 2.0
nodes = radial_grid(2048, 160.0)
values = mass * (4.0 * math.pi) ** -1.5 * np.exp(-nodes**2 / 4.0)
u0 = fields.RadialField(dim=3, nodes=nodes, values=values)

cfg = SolverConfig(t_init=1.0, t_end=200.0, reference="m_gamma_t")
traj = evolve(u0, cfg)

t = traj.times()
mask = t >= 10.0
sup_slope, _, r2 = fit_rate(t[mask], traj.sup_norms()[mask])
print(f"sup-norm exponent over t in [10, 200]: {sup_slope:.4f}  (theory -3/2,"
      f" r^2 = {r2:.6f})")

l1 = traj.l1_errors()
l1_slope, _, _ = fit_rate(t[mask], l1[mask])
print(f"|u - M Gamma_t|_1 exponent:            {l1_slope:.4f}  (theory -1/2)")

weighted = t**1.5 * np.array([
    np.abs(rec.field.values
           - mass * (4 * math.pi * rec.time) ** -1.5
           * np.exp(-nodes**2 / (4 * rec.time))).max()
    for rec in traj.records
])
print("\nt^{3/2} |u - M Gamma_t|_inf (decreasing -> the correction is a"
      " genuinely higher-order term):")
for k in range(0, len(t), 16):
    print(f"  t = {t[k]:8.2f}   {weighted[k]:.3e}")
