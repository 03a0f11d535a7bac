"""Simulated annealing against the closed form for N = 1.

Both agree while the eps_out constraint binds.  Once it goes slack the
annealer keeps eps_1 below eps_out and settles on the constant policy.

Run:  python demos/02_annealing_vs_closed_form.py
"""
import numpy as np

from losstolerant import ChannelModel, LossConstraints, SaConfig, sa_optimize, solve_n1

model = ChannelModel.rayleigh()
sa = SaConfig(temperature_iterations=100, steps_per_temperature=80, seed=1)

print("eps_out  closed-form   annealed   eps_1 (SA)")
for eps_out in np.arange(0.05, 0.96, 0.1):
    c = LossConstraints(0.2, 1, float(eps_out))
    cf = solve_n1(c, model)
    opt = sa_optimize(c, model, sa)
    print(f"{eps_out:7.2f} {cf.p_avg:11.4f} {opt.p_avg:10.4f} {opt.best_analysis.eps_n:10.4f}")

print(f"\nconstant policy eps = gamma costs {-1 / np.log(0.8):.4f} W")
