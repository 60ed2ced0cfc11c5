"""A population front invades empty territory at a predictable speed.

We evolve front-like initial data (occupied on the left, empty on the
right) under Laplacian dispersal with growth f(u) = 1 - u, track where
the solution crosses half the carrying level, and compare the fitted
front speed with the dispersion-relation prediction
c* = inf_{mu>0} (1 + mu^2)/mu = 2.
"""

import kpplab as K

habitat = K.Habitat("continuum", 1, 100.0, 0.1)
reaction = K.Reaction.linear(1.0, 1.0)
op = K.DispersalOperator.random()

u0 = K.make_front_initial(habitat, xi=1.0, sigma0=1.0)
dt = 0.95 * K.stability_dt_bound(op, reaction, u0)
print(f"integrating to T = 30 with dt = {dt:.5f} (rk4) ...")
traj = K.evolve(op, reaction, u0, T=30.0, dt=dt, record_every=60)

trace = K.track_front(traj, xi=1.0, level=0.5)
for k in range(0, len(trace.times), len(trace.times) // 8):
    print(f"  t = {trace.times[k]:5.1f}   front at x = {trace.positions[k]:7.2f}")

est = K.estimate_speed(trace, burn_in_fraction=0.5)
theory = K.theoretical_speed("random", reaction, xi=1.0)
print(f"\nfitted speed   : {est.slope:.4f} (rms residual {est.rms_residual:.1e})")
print(f"predicted speed: {theory.c_star:.4f} at mu* = {theory.mu_star:.4f}")
print(f"relative error : {abs(est.slope - theory.c_star) / theory.c_star:.2%}")
print("(pulled fronts approach their speed slowly; the small negative "
      "bias shrinks like 1/T)")
