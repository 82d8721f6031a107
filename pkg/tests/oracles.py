"""Independent brute-force reference implementations used as test oracles.

These deliberately avoid the package's spatial indexes and library clustering
so they can stand as a second, slower route to the same answers.
"""

import numpy as np


def cdist(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    return np.sqrt(((a[:, None, :] - b[None, :, :]) ** 2).sum(axis=2))


def chamfer_brute(p: np.ndarray, g: np.ndarray) -> tuple[float, float, float]:
    """(cd_sym, mean p->g, mean g->p) via the full distance matrix."""
    d = cdist(p, g)
    d_pg = float(np.mean(d.min(axis=1)))
    d_gp = float(np.mean(d.min(axis=0)))
    return d_pg + d_gp, d_pg, d_gp


def precision_recall_f_brute(p, g, tau: float) -> tuple[float, float, float]:
    d = cdist(p, g)
    precision = float(np.count_nonzero(d.min(axis=1) < tau)) / p.shape[0]
    recall = float(np.count_nonzero(d.min(axis=0) < tau)) / g.shape[0]
    if precision + recall > 0:
        f = 2 * precision * recall / (precision + recall)
    else:
        f = 0.0
    return precision, recall, f


def dbscan_brute(points: np.ndarray, eps: float, min_samples: int) -> np.ndarray:
    """Textbook DBSCAN: eps-neighborhood graph plus core-point expansion.

    Neighborhoods include the point itself; seeds are visited in index order,
    so border points go to the first cluster that reaches them.
    """
    n = points.shape[0]
    d = cdist(points, points)
    neighbors = [np.flatnonzero(d[i] <= eps) for i in range(n)]
    core = np.array([len(nb) >= min_samples for nb in neighbors])
    labels = np.full(n, -1, dtype=np.int64)
    cluster = 0
    for seed in range(n):
        if labels[seed] != -1 or not core[seed]:
            continue
        labels[seed] = cluster
        stack = [seed]
        while stack:
            v = stack.pop()
            if not core[v]:
                continue
            for nb in neighbors[v]:
                if labels[nb] == -1:
                    labels[nb] = cluster
                    stack.append(nb)
        cluster += 1
    return labels


def relabel_first_occurrence(labels: np.ndarray) -> np.ndarray:
    out = np.full(labels.shape, -1, dtype=np.int64)
    mapping = {}
    for i, lab in enumerate(labels):
        if lab < 0:
            continue
        if lab not in mapping:
            mapping[lab] = len(mapping)
        out[i] = mapping[lab]
    return out
