"""
How well the proximity matrix is preserved
==========================================

Compares the stitched-together factors with a Nystrom approximation from
the same landmarks and with the best rank-d approximation.
r_all scores every entry of M, r_nz only the non-zero ones.
"""

import numpy as np

from sepne import ProximityConfig, SmfConfig, partition_louvain, run_pipeline, select_dd
from sepne.datasets import planted_partition
from sepne.evaluation import full_proximity, nystrom_baseline, r_scores, svd_oracle

g = planted_partition(1200, 12, avg_degree=8, seed=2).graph
m = full_proximity(g, ProximityConfig("second"))
d = 32
cache = np.linalg.svd(m.toarray())
best = svd_oracle(m, d, cache)

print(" k   method    r_all   r_nz")
for k in (40, 80, 160):
    landmarks = select_dd(g, k)
    plan = partition_louvain(g, landmarks.nodes, seed=0, max_set_size=10 * k)
    res = run_pipeline(g, plan, landmarks, SmfConfig(d=d, k=k, iters=30))
    order = np.argsort(res.nodes)
    w, c = res.factors()
    ours = r_scores(m, w[:, order], c[:, order])
    nys = nystrom_baseline(m, landmarks, d)
    for name, rep in (("sepne", ours), ("nystrom", nys), ("svd", best)):
        print(f"{k:>3}   {name:<8} {rep.r_all:6.3f} {rep.r_nz:6.3f}")
