"""Check the Markov-chain predictions with a slot-level simulation.

Run:  python demos/04_monte_carlo.py
"""
from losstolerant import ChannelModel, LossConstraints, solve_n1, validate_against_chain

for model in (ChannelModel.rayleigh(), ChannelModel.diversity(2)):
    print(f"{model.kind} channel")
    policy = solve_n1(LossConstraints(0.2, 1, 0.1), model)
    rep = validate_against_chain(policy.eps, model, slots=1_000_000, seed=3)
    print(rep.summary())
    hist = rep.stats.burst_histogram
    print("ACKs by preceding loss-run length:", hist[:6].tolist(), "\n")
