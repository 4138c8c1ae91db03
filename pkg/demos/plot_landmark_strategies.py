"""
Choosing landmarks
==================

Four strategies: top degree (DD), degree-weighted sampling (DP), uniform
sampling (UF) and a greedy dominating set (GDS). The dominating set spreads
landmarks out so more nodes sit next to one. Whether that helps
reconstruction depends on the graph; here it is printed next to r_all.
"""

import warnings

import numpy as np

from sepne import ProximityConfig, SmfConfig, partition_random, run_pipeline, select_landmarks
from sepne.datasets import planted_partition
from sepne.evaluation import full_proximity, r_scores

g = planted_partition(1000, 10, avg_degree=6, seed=3).graph
m = full_proximity(g, ProximityConfig("second"))
k = d = 40
# sampled landmarks often leave some directions of M00 empty
warnings.filterwarnings("ignore", message=".*singular values of M00 are zero")

for strategy in ("DD", "DP", "UF", "GDS"):
    landmarks = select_landmarks(g, k, strategy, seed=0)
    plan = partition_random(g, landmarks.nodes, 4, seed=0)
    res = run_pipeline(g, plan, landmarks, SmfConfig(d=min(d, landmarks.k), k=landmarks.k, iters=30))
    order = np.argsort(res.nodes)
    w, c = res.factors()
    covered = np.unique(np.concatenate([landmarks.nodes] + [g.neighbors(v) for v in landmarks.nodes]))
    print(f"{strategy:<4} k={landmarks.k:<3} covers {len(covered):>4} nodes  "
          f"r_all {r_scores(m, w[:, order], c[:, order]).r_all:.3f}")
