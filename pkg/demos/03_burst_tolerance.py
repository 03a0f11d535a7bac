"""Tolerating longer loss bursts saves power.

Run:  python demos/03_burst_tolerance.py
"""
from losstolerant import ChannelModel, LossConstraints, sa_optimize, watts_to_dbw

model = ChannelModel.rayleigh()
for eps_out in (0.05, 0.1):
    print(f"gamma = 0.2, eps_out = {eps_out}")
    for n_max in (1, 2, 3, 4):
        opt = sa_optimize(LossConstraints(0.2, n_max, eps_out), model)
        eps = " ".join(f"{e:.4f}" for e in opt.best_policy.eps)
        print(f"  N={n_max}: P_a = {opt.p_avg:.4f} W ({watts_to_dbw(opt.p_avg):.3f} dBW)  eps = {eps}")
