"""The backward-kernel density Phi and its monotonicity margin.

Phi weights the solution at time s1 - rho^2 with a backward heat kernel of
width rho.  For subcritical mass it obeys d Phi/d rho >= (1 - M/8pi)(2/rho) Phi,
which is the small-scale regularity mechanism: Phi cannot pile up mass at
small scales.  The pure-heat control has the closed form M rho^2 / (4 pi s1).
"""

import math

import numpy as np

from pkslab import SolverConfig, evolve, fields
from pkslab.diagnostics import phi_scan, phi_scan_csv, rho_grid_from_records
from pkslab.grids import radial_grid

mass = 4.0 * math.pi
nodes = radial_grid(1536, 40.0)
values = mass / (4 * math.pi * 0.99) * np.exp(-nodes**2 / (4 * 0.99))
u0 = fields.RadialField(dim=2, nodes=nodes, values=values)

record_times = tuple(np.round(np.arange(0.99, 2.0001, 0.0025), 6))
cfg = SolverConfig(t_init=0.99, t_end=2.0, record_times=record_times)
traj = evolve(u0, cfg)

s1 = 2.0
rho = rho_grid_from_records(traj, s1, 0.1, 1.0)
rho_vals, phi, margin = phi_scan(traj, (0.0, s1), rho)
phi_scan_csv(traj, (0.0, s1), rho, "phi_scan.csv")

print("subcritical M = 4pi run, peak-centered Phi over rho in [0.1, 1]:")
print("rho        Phi          margin/Phi")
for k in range(1, len(rho_vals) - 1, 40):
    print(f"{rho_vals[k]:6.3f}  {phi[k]:.6f}   {margin[k] / phi[k]:+.4f}")
print(f"\nminimum relative margin: {(margin[1:-1] / phi[1:-1]).min():+.4f}"
      "  (the bound guarantees >= 0 in the continuum)")
print("full scan written to phi_scan.csv")
