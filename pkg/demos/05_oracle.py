"""Exhaustive grid search as an independent check on the annealer.

The grid is coarse, so the annealer can land slightly below it.

Run:  python demos/05_oracle.py
"""
import time

from losstolerant import ChannelModel, LossConstraints, grid_search_oracle, sa_optimize

model = ChannelModel.rayleigh()
for n_max, resolution in ((1, 1e-3), (2, 5e-3), (3, 1e-2)):
    c = LossConstraints(0.2, n_max, 0.05)
    t = time.perf_counter()
    oracle = grid_search_oracle(c, model, resolution)
    t_oracle = time.perf_counter() - t
    opt = sa_optimize(c, model)
    gap = (opt.p_avg - oracle.p_avg) / oracle.p_avg
    print(f"N={n_max} step {resolution:g}: oracle {oracle.p_avg:.5f} W in {t_oracle:.1f}s, "
          f"annealer {opt.p_avg:.5f} W ({gap:+.3%})")
