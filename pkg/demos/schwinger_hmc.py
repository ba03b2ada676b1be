"""Hybrid Monte Carlo for the two-flavour Schwinger model on an 8x8 lattice.

Thermalize with leapfrog, then compare leapfrog (BAB) and the Hessian-free
force-gradient scheme BADAB: the variance of the energy violation falls like
h^4 and h^8 respectively, and the acceptance follows erfc(sqrt(sigma^2/8)).
The last block converts a step-count scan into force evaluations per unit
trajectory length at 90% acceptance.

    python demos/schwinger_hmc.py
"""

import numpy as np

from hfgi import hmc
from hfgi.models.schwinger import SchwingerModel
from hfgi.schemes import count_forces, get_scheme

model = SchwingerModel(L=8, T=8, beta=1.0, m0=0.352443, solver="lu")

therm = hmc.run_chain(model, hmc.HmcConfig(n_steps=10, scheme="BAB", n_traj=200, seed=1),
                      model.state(model.cold_start()))
start = model.state(therm.final_state.q)
print(f"thermalized: plaquette {therm.plaquette[-50:].mean():.4f}, acceptance {therm.acceptance:.2f}")

for name, N in (("BAB", 5), ("BADAB", 2)):
    stats = hmc.run_chain(model, hmc.HmcConfig(n_steps=N, scheme=name, n_traj=400, n_therm=20, seed=2), start)
    s = stats.summary()
    print(f"\n{name} with N = {N} ({s['force_evals_per_traj']:.0f} force evaluations per trajectory)")
    print(f"  <exp(-dH)>  {s['exp_minus_dH']:.3f} +- {s['exp_minus_dH_err']:.3f}")
    print(f"  sigma^2     {s['sigma2']:.4f} +- {s['sigma2_err']:.4f}")
    print(f"  acceptance  {s['acc']:.3f} +- {s['acc_err']:.3f}   erfc model {s['acc_erfc']:.3f}")
    print(f"  plaquette   {s['plaquette']:.4f} +- {s['plaquette_err']:.4f}")

# same configurations, momenta and pseudofermions for every N
configs = hmc.equilibrium_samples(model, hmc.HmcConfig(n_steps=10, scheme="BAB", seed=3), start, 40)
for name, p, grid in (("BAB", 2, [8, 12, 16, 24]), ("BADAB", 4, [6, 8, 12, 16])):
    scan = hmc.delta_h_scan(model, name, grid, configs)
    slope, err = hmc.scaling_exponent(scan)
    points = [(N, float(np.var(scan[N], ddof=1))) for N in grid]
    fit = hmc.nf_per_unit_at_target(points, count_forces(get_scheme(name)), 1.0, 0.9)
    print(f"\n{name}: sigma^2 ~ h^{slope:.2f} +- {err:.2f} (expected {2 * p})")
    print("  " + "  ".join(f"N={N}: {v:.2e}" for N, v in points))
    print(f"  90% acceptance needs N* = {fit.n_star:.1f}, i.e. {fit.nf_per_unit:.1f} forces per unit time")
