"""
Embedding only the nodes you need
=================================

When a few hundred nodes matter out of many thousands, the other nodes
never need vectors of their own. Only the landmarks and the requested
nodes get solved, and the cost of solving barely moves as the graph grows.
"""

import time

import numpy as np

from sepne import SmfConfig, partition_interested, run_pipeline, select_dd
from sepne.datasets import planted_partition

for n in (5_000, 20_000):
    g = planted_partition(n, 20, avg_degree=10, seed=1).graph
    landmarks = select_dd(g, 100)
    wanted = np.random.default_rng(0).choice(np.setdiff1d(np.arange(n), landmarks.nodes), 200,
                                             replace=False)
    plan = partition_interested(g, landmarks.nodes, wanted)
    t = time.perf_counter()
    result = run_pipeline(g, plan, landmarks, SmfConfig(d=32, k=100, iters=20))
    total = time.perf_counter() - t
    print(f"n={n:>6}: {len(result)} vectors, optimization {result.timings['optimization']:.2f}s "
          f"of {total:.2f}s total")

###############################################################################
# Any section can also be rebuilt by hand. Its blocks only touch the
# section's own rows and columns plus the landmarks.
from sepne import SectionBuilder, embed_landmarks, solve_set
from sepne.proximity import ProximityConfig

builder = SectionBuilder(g, ProximityConfig("second"), landmarks.nodes)
lm = embed_landmarks(builder.m00(), 32)
sol = solve_set(builder.blocks(np.sort(wanted[:10])), lm, SmfConfig(d=32, k=100, iters=20))
# With few landmarks near these nodes, most of the loss is out of reach.
print("ten nodes alone: loss %.4f -> %.4f" % (sol.loss_trace[0], sol.loss_trace[-1]))
