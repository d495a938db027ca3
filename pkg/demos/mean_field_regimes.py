"""Two communities in the mean-field map.

Group 1 imitates itself (J1 = 1) and group 2 (K12 = 1); group 2 imitates
itself weakly (J2 = 0.5) and leans against group 1 (K21 = -0.5).  Both feel
the price feedback a (s1 - s2).  The script iterates the map from
(s1, s2) = (1, -1) and classifies the late-time behaviour, together with the
linear stability of the cleared market (0, 0).

Both readings of the feedback term are shown: ``a`` as given, and ``a / T``.
"""
import numpy as np

from spinmarket import MeanFieldParams, TransientError, classify_regime, mf_run, origin_is_stable
from spinmarket.meanfield import origin_jacobian

for scale_a in (False, True):
    print(f"\nprice feedback {'a / T' if scale_a else 'a'}")
    print("    T   regime        period  |lambda|max  origin stable")
    for T in (2.0, 3.0, 4.0, 4.98, 6.78, 10.82, 12.62):
        p = MeanFieldParams(J1=1, J2=0.5, K12=1, K21=-0.5, a=5, T=T, scale_a=scale_a)
        traj = mf_run(p, 2000)
        try:
            rep = classify_regime(traj)
            regime, period = rep.regime, rep.period
        except TransientError:
            regime, period = "transient", float("nan")
        lam = np.abs(np.linalg.eigvals(origin_jacobian(p))).max()
        print(f"{T:6.2f}  {regime:12s}  {period:6.1f}  {lam:10.3f}  {origin_is_stable(p)}")
