"""Geometry of the eigenvalue simplex.

The spectra of n-level density matrices live on the probability simplex
T in R^n.  Everything downstream works in the (n-1)-dimensional hyperplane
coordinates produced by the projection matrix Pi with rows

    Pi[j] = (1, ..., 1, -j, 0, ..., 0) / sqrt(j (j+1))      (j ones)

so that x = Pi lambda, lambda = iota + Pi^T x with iota = (1/n, ..., 1/n).
Pi kills the constant vector, is a partial isometry (Pi Pi^T = I), and
Pi^T Pi = I - n iota iota^T, which makes distances between points on the
simplex hyperplane equal in both pictures.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .errors import InvalidDimensionError, NotOnSimplexHyperplaneError

SIMPLEX_SUM_TOL = 1e-9


def projection_matrix(n: int) -> np.ndarray:
    """The (n-1) x n matrix Pi described in the module docstring."""
    pi = np.zeros((n - 1, n))
    for j in range(1, n):
        c = 1.0 / np.sqrt(j * (j + 1))
        pi[j - 1, :j] = c
        pi[j - 1, j] = -j * c
    return pi


@dataclass(frozen=True)
class SpectrumPoint:
    """A spectrum and its hyperplane coordinates."""

    lam: np.ndarray
    x: np.ndarray


@dataclass(frozen=True)
class ProjectionMap:
    dim: int
    pi: np.ndarray
    iota: np.ndarray

    def project(self, lam, tol: float = SIMPLEX_SUM_TOL) -> SpectrumPoint:
        """Map a spectrum (summing to 1) to hyperplane coordinates."""
        v = np.asarray(lam, dtype=float)
        if v.shape != (self.dim,):
            raise InvalidDimensionError(f"expected length-{self.dim} vector, got {v.shape}")
        defect = abs(float(v.sum()) - 1.0)
        if defect > tol:
            raise NotOnSimplexHyperplaneError(f"sum is {v.sum():.12g}, off by {defect:.3e}")
        return SpectrumPoint(lam=v.copy(), x=self.pi @ v)

    def lift(self, x) -> np.ndarray:
        """Inverse of project onto the hyperplane: iota + Pi^T x."""
        v = np.asarray(x, dtype=float)
        if v.shape != (self.dim - 1,):
            raise InvalidDimensionError(f"expected length-{self.dim - 1} vector, got {v.shape}")
        return self.iota + self.pi.T @ v

    def lift_many(self, xs: np.ndarray) -> np.ndarray:
        return self.iota[None, :] + xs @ self.pi

    def project_many(self, lams: np.ndarray) -> np.ndarray:
        return lams @ self.pi.T

    def vertices(self) -> np.ndarray:
        """Hyperplane coordinates of the n pure-state vertices, row per vertex."""
        return np.eye(self.dim) @ self.pi.T


def build_projection(n: int) -> ProjectionMap:
    if n < 2:
        raise InvalidDimensionError(f"need n >= 2, got {n}")
    return ProjectionMap(dim=n, pi=projection_matrix(n), iota=np.full(n, 1.0 / n))


def weyl_chamber(lam) -> np.ndarray:
    """Permutation (as an index array) sorting lam into non-increasing order.

    Stable: ties keep their original relative order, so the result is a
    deterministic chamber representative.
    """
    v = np.asarray(lam, dtype=float)
    return np.argsort(-v, kind="stable")


@dataclass(frozen=True)
class ChamberFace:
    """One face of the closed positive chamber.

    kind "vanishing" is the face lambda_n = 0; kind "crossing" with index j
    is the face lambda_j = lambda_{j+1} (1-based j).  ``evaluate`` returns a
    signed value that vanishes exactly on the face and is positive strictly
    inside the chamber.
    """

    kind: str
    index: int
    label: str

    def evaluate(self, lam) -> float:
        v = np.asarray(lam, dtype=float)
        if self.kind == "vanishing":
            return float(v[-1])
        return float(v[self.index - 1] - v[self.index])


def chamber_faces(n: int):
    """Faces of the chamber: n-1 crossing faces plus the vanishing face."""
    if n < 2:
        raise InvalidDimensionError(f"need n >= 2, got {n}")
    faces = [
        ChamberFace(kind="crossing", index=j, label=f"lambda_{j} = lambda_{j + 1}")
        for j in range(1, n)
    ]
    faces.append(ChamberFace(kind="vanishing", index=n, label=f"lambda_{n} = 0"))
    return faces


def barycentric_lattice(n: int, resolution: int) -> np.ndarray:
    """All spectra (i_1, ..., i_n)/resolution with non-negative integer parts.

    Row-ordered lexicographically; C(resolution + n - 1, n - 1) rows.  This
    is the grid used to rasterize regions of the projected simplex: every
    lattice point lifts to a valid spectrum by construction.
    """
    if resolution < 1:
        raise InvalidDimensionError(f"resolution must be >= 1, got {resolution}")
    # stars and bars: divider positions in a row of resolution + n - 1 slots
    slots = resolution + n - 1
    rows = []
    for dividers in combinations(range(slots), n - 1):
        prev = -1
        parts = []
        for d in dividers:
            parts.append(d - prev - 1)
            prev = d
        parts.append(slots - 1 - prev)
        rows.append(parts)
    return np.asarray(rows, dtype=float) / float(resolution)
