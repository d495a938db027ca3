"""A temporary boosting field and whether its price effect outlives it.

The market starts with 60% sellers, so below T_c it settles into a
seller-dominated state with a price under the clearing level A = 3.  A
field H = 0.2 favouring buyers is switched on for sweeps [400, 600).  Just
below T_c the pulse can tip the market into the buyer-dominated state,
which then persists after the field is removed.  Far above T_c the price
drops back as soon as the field ends.

Both regimes show up with the weak coupling a = 0.1.  With a = 3 the market
never orders, so there is no state for the pulse to flip.
"""
from spinmarket import ModelParams, RunConfig, SpinSpace, build_fcc, pulse_verdict

graph = build_fcc(12)

for a in (0.1, 3.0):
    base = RunConfig(graph, ModelParams(SpinSpace.discrete(1), J=1.0, a=a, T=1.0), 800, init=(0.4, 0.6), seed=7)
    print(f"\na = {a}")
    for T in (6.5, 7.872):
        verdict, reports = pulse_verdict(base, T, 0.2, 400, 600, horizon=200, n_seeds=5)
        r = reports[0]
        print(
            f"T = {T:5.3f}: persistent = {verdict} ({sum(x.persistent for x in reports)}/5)   "
            f"replica 0 price {r.baseline:.3f} -> {r.during:.3f} -> {r.after:.3f}"
        )
