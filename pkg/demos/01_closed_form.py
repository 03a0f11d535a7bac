"""Single tolerated loss: the boundary policy and how its cost moves with eps_out.

Run:  python demos/01_closed_form.py
"""
import numpy as np

from losstolerant import ChannelModel, LossConstraints, solve_n1, sweep_n1, watts_to_dbw

model = ChannelModel.rayleigh(rate=1.0, noise=1.0)

# One operating point: at most 20% of packets lost, and once a packet is
# lost the next one may be lost with probability at most 0.1.
res = solve_n1(LossConstraints(gamma=0.2, n_max=1, eps_out=0.1), model)
print("policy eps      :", res.eps)
print("powers (W)      :", np.round(res.powers, 6))
print("state occupancy :", res.pi)
print(f"loss rate       : {res.gamma_r:.6f}")
print(f"average power   : {res.p_avg:.6f} W = {watts_to_dbw(res.p_avg):.3f} dBW")

# Sweeping eps_out traces a bowl.  Past the bottom the pinned policy spends
# less power after a loss than before one, and stops being the best choice.
print("\neps_out   P_a (W)   P_0 <= P_1")
for row in sweep_n1(LossConstraints(0.2, 1, 0.5), np.arange(0.05, 0.96, 0.1), model):
    print(f"{row.eps_out:7.2f} {row.p_avg:9.4f}   {row.power_monotone}")
