"""
Embedding a graph in separate pieces
====================================

A planted-community graph is split into Louvain communities, a landmark
set is factorized once, and every community is then solved on its own.
The resulting vectors live in one shared space, so a classifier trained
on some communities applies to the rest.
"""

import numpy as np

from sepne import SmfConfig, partition_louvain, run_pipeline, select_dd
from sepne.datasets import planted_partition
from sepne.evaluation import classify

###############################################################################
# A directed graph with 8 planted groups. The group ids double as labels.
data = planted_partition(2000, 8, avg_degree=10, seed=0)
g = data.graph
print(g.node_count, "nodes,", g.edge_count, "arcs")

###############################################################################
# Landmarks are the highest-degree nodes; the remaining nodes are grouped
# by community, at most 10*k per set.
k, d = 100, 32
landmarks = select_dd(g, k)
plan = partition_louvain(g, landmarks.nodes, seed=0, max_set_size=10 * k)
print(plan.s, "sets, sizes", sorted(len(s) for s in plan.sets))

###############################################################################
# Each set is an independent least-squares problem, so sets can run on
# several threads without changing the answer.
result = run_pipeline(g, plan, landmarks, SmfConfig(d=d, k=k, iters=30), workers=2)
print("optimization took %.2fs" % result.timings["optimization"])
for rep in result.sections[:3]:
    print("set", rep.index, "size", rep.size, "final loss %.3f" % rep.losses["total"])

###############################################################################
# Micro-F1 with half the labels used for training.
score = classify(result.as_dict(), data.labels, 0.5, runs=3)
print("micro-F1 %.3f" % score)
