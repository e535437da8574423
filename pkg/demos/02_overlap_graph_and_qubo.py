"""From three disagreeing clusterings to a consensus via a QUBO.

Clusters become graph vertices, overlaps become edges, and picking a
non-overlapping subset of maximum total (size-proportional) weight is a
weighted maximum-independent-set problem:

    minimise  - sum_i w_i x_i + penalty * sum_{(i,j) in E} x_i x_j

The annealer plays the role of the quantum device; the exact enumerator
verifies it.
"""

import numpy as np

from hqsched import (
    SaParams,
    build_graph,
    build_qubo,
    dbscan,
    decode,
    evaluate,
    generate_blobs,
    hierarchical,
    kmeans,
    solve_exact,
    solve_sa,
)

ds = generate_blobs(n_points=1200, n_centers=4, cluster_std=0.65,
                    box=(-10, -10, 10, 10), seed=1)

# deliberately disagreeing views: too few centroids, too coarse a radius,
# and the right k
c_km = kmeans(ds, k=3, seed=7)
c_db = dbscan(ds, eps=4.5, min_pts=5)
c_hc = hierarchical(ds, k=4)
print("cluster counts:", len(c_km.clusters), len(c_db.clusters), len(c_hc.clusters))

graph = build_graph(c_km, c_db, c_hc)
problem = build_qubo(graph)
print(f"overlap graph: {graph.n} vertices, {len(graph.edges)} edges, "
      f"penalty = {problem.penalty:.0f}")
print("vertex weights:", np.round(problem.weights, 3))

empty = np.zeros(graph.n, dtype=np.uint8)
print("objective of selecting nothing:", evaluate(problem, empty))

sa = solve_sa(problem, SaParams(seed=3))
exact = solve_exact(problem)
print(f"annealer best: f = {sa.best_f:.6f}, bits = {sa.best_x.tolist()}")
print(f"exact    best: f = {exact.best_f:.6f} (they agree: "
      f"{abs(sa.best_f - exact.best_f) < 1e-9})")

consensus = decode(problem, graph, sa.best_x, ds)
print(f"consensus: {consensus.n_clusters} non-overlapping clusters, sizes "
      f"{sorted(len(c) for c in consensus.clusters)}, "
      f"{consensus.unassigned.size} points repaired to nearest centroid")
