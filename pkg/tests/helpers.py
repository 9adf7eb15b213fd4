"""Shared builders for test instances."""
import numpy as np
import scipy.sparse as sp

from opinion_opt.instance import (
    Instance,
    RowStochasticMatrix,
    generate_instance,
    random_connected_graph,
)


def two_node_instance(s=(0.0, 1.0), alpha_init=(0.5, 0.5), k=10.0, p=1,
                      l=1e-3, u=1.0):
    P = RowStochasticMatrix(sp.csr_matrix(np.array([[0.0, 1.0], [1.0, 0.0]])))
    return Instance(s=np.array(s, dtype=float), P=P,
                    l=np.full(2, l), u=np.full(2, u),
                    alpha_init=np.array(alpha_init, dtype=float), k=k, p=p)


def random_instance(n, seed, k=0.5, p=1):
    m = min(2 * n, n * (n - 1) // 2)
    g = random_connected_graph(n, m, seed=seed)
    return generate_instance(g, seed=seed + 1000, p=p, k=k)


def two_node_objective_closed_form(s, a1, a2):
    """f on the 2-cycle: explicit solve of the 2x2 system, vectorized."""
    det = 1.0 - (1.0 - a1) * (1.0 - a2)
    z1 = (a1 * s[0] + (1.0 - a1) * a2 * s[1]) / det
    z2 = ((1.0 - a2) * a1 * s[0] + a2 * s[1]) / det
    return z1 + z2
