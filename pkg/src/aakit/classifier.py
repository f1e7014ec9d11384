"""Nearest-archetype-hull classification.

Each class keeps its own archetype matrix; a query is assigned to the class
whose archetype hull it can be reconstructed from with the smallest squared
residual. With all training points kept as archetypes this is the nearest
convex hull classifier.
"""

from dataclasses import dataclass

import numpy as np

from . import fitting, simplex_qp
from .errors import DataError, DimensionError
from .numcore import as_dense


@dataclass
class ClassifierModel:
    labels: list
    archetypes: list  # one m x p_k matrix per class, ordered as labels
    mode: str  # "learned-archetypes" or "all-training-points"

    @property
    def dim(self):
        return self.archetypes[0].shape[0]


def train(class_data, p="all", n_iter=100, seed=0, tol=1e-9):
    """Build a per-class archetype model.

    class_data maps labels to m x n_k matrices (dict or sequence of
    (label, matrix) pairs). p="all" stores every training point as an
    archetype; an integer p fits that many archetypes per class, with a
    distinct derived seed per class for reproducibility.
    """
    if isinstance(class_data, dict):
        items = list(class_data.items())
    else:
        items = list(class_data)
    if len(items) < 2:
        raise DataError("need at least two classes")
    labels = [lab for lab, _ in items]
    mats = [as_dense(Xk, f"class {lab}") for lab, Xk in items]
    dims = {Xk.shape[0] for Xk in mats}
    if len(dims) != 1:
        raise DimensionError("inconsistent feature dimension across classes")
    if p == "all":
        return ClassifierModel(labels, mats, "all-training-points")
    archetypes = []
    for k, Xk in enumerate(mats):
        if p > Xk.shape[1]:
            raise DataError(f"class {labels[k]} has fewer than p={p} points")
        cfg = fitting.FitConfig(p=p, n_iter=n_iter, seed=seed + k, tol=tol)
        archetypes.append(fitting.fit(Xk, cfg).Z)
    return ClassifierModel(labels, archetypes, "learned-archetypes")


def classify(X, model, tol=1e-9, normalize=False):
    """Assign each column of X to the nearest archetype hull.

    Returns (labels, residuals) where residuals is a k x n matrix of
    per-class squared reconstruction errors. Ties go to the earliest class
    in the model's label order. normalize rescales each query to unit
    l2 norm first (useful for digit-style data).
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    X = as_dense(X, "X")
    if X.shape[0] != model.dim:
        raise DimensionError("query dimension does not match the model")
    if normalize:
        norms = np.sqrt(np.einsum("ij,ij->j", X, X))
        X = X / np.where(norms > 0, norms, 1.0)
    n = X.shape[1]
    residuals = np.empty((len(model.labels), n))
    xsq = np.einsum("ij,ij->j", X, X)
    opts = simplex_qp.SolverOptions(tol=tol)
    for k, Zk in enumerate(model.archetypes):
        Q = Zk.T @ Zk
        ZtX = Zk.T @ X
        for i in range(n):
            inst = simplex_qp.QpInstance(gram=Q, ztx=ZtX[:, i], x_sqnorm=xsq[i])
            residuals[k, i] = simplex_qp.solve(inst, opts).objective
    winners = np.argmin(residuals, axis=0)  # argmin takes the earliest on ties
    labels = [model.labels[k] for k in winners]
    return labels, residuals
