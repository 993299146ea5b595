"""From posterior draws to a graph: credible-region paths, then FDR control.

Every node gets an exact homotopy path of its penalized credible-region
problem. The paths are read off a shared penalty grid, which gives a nested
sequence of graphs. Edge inclusion frequencies along that sequence feed the
Bayesian FDR rule that picks one point estimate.

Run: python demos/selection_and_fdr.py
"""

from riwgm import RngStream, build_path, default_hyperparameters, run_chain, standardize
from riwgm.core import sample_mvn_zero, spd_inverse
from riwgm.fdr import fdr_threshold, inclusion_matrix, point_estimate
from riwgm.selection import credible_path, node_posterior
from riwgm.simbench import confusion, roc_auc, sparse_precision_generator, true_edge_set

p, n = 12, 400
truth = sparse_precision_generator(p, 1, 5, RngStream(3), extra_edges=6)
e0 = true_edge_set(truth.omega0, 0.0)
print(f"{p} nodes, {e0.sum() // 2} true edges, hub node {truth.hubs[0] + 1}")

x = sample_mvn_zero(spd_inverse(truth.omega0), n, RngStream(4))
s = run_chain(standardize(x), default_hyperparameters(n, p), 4000, 1000, RngStream(5), log_every=0)

# one node in detail
node = truth.hubs[0]
path = credible_path(node_posterior(s, node))
print(f"\nnode {node + 1}: knots at which coefficients enter (in penalty units)")
for d, act in zip(path.path.knots[:8], path.path.active[:8]):
    print(f"  delta {d:10.4g}  active {len(act)}")

sel = build_path(s, delta_count=50)
adjs = sel.adjacencies()
print("\nedges along the grid (every 7th point):", [int(a.sum() // 2) for a in adjs[::7]])
print("AUC of the path against the truth:", round(roc_auc(adjs, e0), 3))

inc = inclusion_matrix(sel)
for eta in (0.05, 0.1, 0.2):
    res = fdr_threshold(inc, eta)
    est = point_estimate(inc, res.threshold, s.omega_mean)
    c = confusion(est.adjacency, e0)
    print(f"eta {eta:4}: threshold {res.threshold:.2f}, {len(est.edges):2d} edges, SP {c.sp:.2f}, SE {c.se:.2f}, min eigenvalue {est.min_eigenvalue:.3f}")
