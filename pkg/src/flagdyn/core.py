"""Density matrices, Lindblad generators, and spectral decompositions.

Conventions used throughout the package:

* hbar = 1 and every rate is carried by the jump operators themselves, so a
  jump operator has units of sqrt(rate).
* The generator splits as drho/dt = -i[H, rho] + D(rho) with the dissipator

      D(rho) = sum_k ( L_k rho L_k^dag - 1/2 {L_k^dag L_k, rho} )

  where {.,.} is the anti-commutator.
* Spectral decompositions are kept in the non-increasing eigenvalue order,
  and eigenvalues closer than ``crossing_tol`` are merged into degenerate
  groups (transitive closure, so a chain of near-ties forms one group).
* Eigenvector phases are fixed by making the largest-magnitude component of
  each column real and positive; degenerate eigenspaces are only ever
  compared through their group projectors.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionMismatchError,
    EigensolverFailure,
    NegativeEigenvalueError,
    NotHermitianError,
    TraceNotOneError,
)

HERMITICITY_TOL = 1e-10
POSITIVITY_TOL = 1e-10
TRACE_TOL = 1e-10
CROSSING_TOL = 1e-9


def dagger(a: np.ndarray) -> np.ndarray:
    return a.conj().T


def as_complex_matrix(a, name: str = "matrix") -> np.ndarray:
    """Coerce to a square complex ndarray, rejecting anything else."""
    m = np.array(a, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionMismatchError(f"{name} must be square, got shape {m.shape}")
    if not np.all(np.isfinite(m.view(float))):
        raise DimensionMismatchError(f"{name} contains non-finite entries")
    return m


def hermiticity_defect(a: np.ndarray) -> float:
    """Relative Frobenius distance of ``a`` from its Hermitian part."""
    scale = max(1.0, float(np.linalg.norm(a)))
    return float(np.linalg.norm(a - dagger(a))) / scale


def hermitize(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + dagger(a))


@dataclass(frozen=True)
class DensityMatrix:
    """A validated density matrix (Hermitian, positive, unit trace)."""

    mat: np.ndarray

    @property
    def dim(self) -> int:
        return self.mat.shape[0]


@dataclass(frozen=True)
class LindbladSystem:
    """Dimension, jump operators, and an optional drift Hamiltonian.

    The drift Hamiltonian is a fixed Hermitian contribution present in
    addition to whatever control Hamiltonian a simulation applies.
    """

    dim: int
    lindblad_ops: tuple
    drift: np.ndarray | None = None

    def __post_init__(self):
        if self.dim < 2:
            raise DimensionMismatchError(f"dimension must be >= 2, got {self.dim}")
        ops = tuple(as_complex_matrix(op, "lindblad operator") for op in self.lindblad_ops)
        for op in ops:
            if op.shape != (self.dim, self.dim):
                raise DimensionMismatchError(
                    f"lindblad operator shape {op.shape} != ({self.dim}, {self.dim})"
                )
        object.__setattr__(self, "lindblad_ops", ops)
        if self.drift is not None:
            h = as_complex_matrix(self.drift, "drift hamiltonian")
            if h.shape != (self.dim, self.dim):
                raise DimensionMismatchError(
                    f"drift shape {h.shape} != ({self.dim}, {self.dim})"
                )
            defect = hermiticity_defect(h)
            if defect > HERMITICITY_TOL:
                raise NotHermitianError(
                    f"drift hamiltonian not Hermitian, defect {defect:.3e}"
                )
            object.__setattr__(self, "drift", h)

    @property
    def num_ops(self) -> int:
        return len(self.lindblad_ops)

    def dissipation_scale(self) -> float:
        """Sum of squared spectral norms of the jump operators.

        This is the rate scale that bounds both integrator steps and the
        book-end transport error.
        """
        return float(sum(np.linalg.norm(op, 2) ** 2 for op in self.lindblad_ops))


def make_system(dim: int, ops, drift=None) -> LindbladSystem:
    return LindbladSystem(dim=dim, lindblad_ops=tuple(ops), drift=drift)


def validate_density(mat, tol: float = POSITIVITY_TOL) -> DensityMatrix:
    """Check Hermiticity, positivity (eigenvalues >= -tol) and unit trace.

    Raises the error naming the first violated property; the message carries
    the measured residual.
    """
    m = as_complex_matrix(mat, "density matrix")
    defect = hermiticity_defect(m)
    if defect > HERMITICITY_TOL:
        raise NotHermitianError(f"density matrix not Hermitian, defect {defect:.3e}")
    tr = complex(np.trace(m))
    if abs(tr - 1.0) > TRACE_TOL:
        raise TraceNotOneError(f"trace is {tr:.12g}, not 1")
    try:
        evals = np.linalg.eigvalsh(hermitize(m))
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise EigensolverFailure(str(exc)) from exc
    lo = float(evals.min())
    if lo < -tol:
        raise NegativeEigenvalueError(f"eigenvalue {lo:.3e} below -{tol:.1e}")
    return DensityMatrix(mat=m)


def _mat(state) -> np.ndarray:
    return state.mat if isinstance(state, DensityMatrix) else np.asarray(state, dtype=complex)


def apply_dissipator(sys: LindbladSystem, rho) -> np.ndarray:
    """Evaluate D(rho) = sum_k L_k rho L_k^dag - 1/2 {L_k^dag L_k, rho}."""
    r = _mat(rho)
    if r.shape != (sys.dim, sys.dim):
        raise DimensionMismatchError(f"state shape {r.shape} != ({sys.dim}, {sys.dim})")
    out = np.zeros_like(r)
    for op in sys.lindblad_ops:
        opd = dagger(op)
        gram = opd @ op
        out += op @ r @ opd - 0.5 * (gram @ r + r @ gram)
    return out


def apply_lindblad(sys: LindbladSystem, hamiltonian, rho) -> np.ndarray:
    """Full generator -i[H, rho] + D(rho); H must be Hermitian.

    ``hamiltonian`` may be None for purely dissipative evolution.  The
    system's drift Hamiltonian, if any, is always included.
    """
    r = _mat(rho)
    out = apply_dissipator(sys, r)
    h_total = None
    if hamiltonian is not None:
        h = as_complex_matrix(hamiltonian, "hamiltonian")
        defect = hermiticity_defect(h)
        if defect > 1e-8:
            raise NotHermitianError(f"hamiltonian not Hermitian, defect {defect:.3e}")
        h_total = h
    if sys.drift is not None:
        h_total = sys.drift if h_total is None else h_total + sys.drift
    if h_total is not None:
        out += -1j * (h_total @ r - r @ h_total)
    return out


def fix_phases(frame: np.ndarray) -> np.ndarray:
    """Make the largest-magnitude component of each column real positive."""
    out = frame.copy()
    for j in range(out.shape[1]):
        col = out[:, j]
        k = int(np.argmax(np.abs(col)))
        a = col[k]
        if abs(a) > 0:
            out[:, j] = col * (a.conjugate() / abs(a))
    return out


def group_spectrum(values: np.ndarray, crossing_tol: float = CROSSING_TOL):
    """Partition spectrum indices into near-degenerate groups.

    ``values`` is taken in the order given; groups are formed by transitive
    closure of |v_i - v_j| < crossing_tol, so chains of near-ties merge.
    Returned groups are tuples of indices into ``values``, ordered by
    decreasing value.
    """
    order = np.argsort(-values, kind="stable")
    groups = []
    current = [int(order[0])]
    for prev, cur in zip(order[:-1], order[1:]):
        if values[prev] - values[cur] < crossing_tol:
            current.append(int(cur))
        else:
            groups.append(tuple(current))
            current = [int(cur)]
    groups.append(tuple(current))
    return tuple(groups)


@dataclass(frozen=True)
class SpectralDecomposition:
    """Eigenvalues in non-increasing order, a phase-fixed eigenframe, and
    the near-degenerate grouping of the eigenvalues."""

    lam: np.ndarray
    frame: np.ndarray
    groups: tuple

    @property
    def dim(self) -> int:
        return self.lam.shape[0]

    def projector(self, alpha: int) -> np.ndarray:
        """Group projector P_alpha = sum of rank-one projectors in the group."""
        cols = self.frame[:, list(self.groups[alpha])]
        return cols @ dagger(cols)

    def group_value(self, alpha: int) -> float:
        """Representative (mean) eigenvalue of group alpha."""
        return float(np.mean(self.lam[list(self.groups[alpha])]))

    def reassemble(self) -> np.ndarray:
        return (self.frame * self.lam) @ dagger(self.frame)


def decompose_hermitian(mat: np.ndarray, crossing_tol: float = CROSSING_TOL) -> SpectralDecomposition:
    """Spectral decomposition of a (numerically) Hermitian matrix.

    The input is symmetrized before the eigensolve so that round-off level
    anti-Hermitian noise cannot push the solver off the Hermitian branch.
    """
    m = hermitize(as_complex_matrix(mat, "matrix"))
    try:
        evals, vecs = np.linalg.eigh(m)
    except np.linalg.LinAlgError as exc:
        raise EigensolverFailure(str(exc)) from exc
    # eigh returns ascending order; flip to the chamber representative.
    lam = evals[::-1].copy()
    frame = fix_phases(vecs[:, ::-1].copy())
    groups = group_spectrum(lam, crossing_tol)
    return SpectralDecomposition(lam=lam, frame=frame, groups=groups)


def spectral_decompose(rho, crossing_tol: float = CROSSING_TOL) -> SpectralDecomposition:
    """Spectral decomposition of a validated density matrix."""
    if not isinstance(rho, DensityMatrix):
        rho = validate_density(rho)
    return decompose_hermitian(rho.mat, crossing_tol)


def trace_distance(a, b) -> float:
    """d(a, b) = 1/2 sum_k |eigenvalues of (a - b)|."""
    ma, mb = _mat(a), _mat(b)
    if ma.shape != mb.shape:
        raise DimensionMismatchError(f"shape mismatch {ma.shape} vs {mb.shape}")
    delta = hermitize(ma - mb)
    try:
        evals = np.linalg.eigvalsh(delta)
    except np.linalg.LinAlgError as exc:
        raise EigensolverFailure(str(exc)) from exc
    return 0.5 * float(np.abs(evals).sum())
