"""Flags and the spectral transfer dynamics they generate.

A flag is an ordered orthonormal frame U; column j carries the rank-one
projector pi_j = u_j u_j^dag.  Against a set of jump operators L_k the flag
produces non-negative transfer rates

    w[j, k] = sum_k' |u_j^dag L_k' u_k|^2 .

Index convention, fixed everywhere in this package: ``w[j, k]`` is the rate
INTO slot j FROM slot k.  The spectrum therefore obeys the master equation

    d lambda_j / dt = sum_k ( w[j, k] lambda_k - w[k, j] lambda_j )

whose rate matrix Omega has the off-diagonal of w and diagonal
Omega[j, j] = -sum_{l != j} w[l, j]; every column of Omega sums to zero, so
the flow preserves both the trace and (exactly, for the continuous flow)
the positivity of the spectrum.  In hyperplane coordinates the same flow is
the affine field dx/dt = b + A x with b = Pi Omega iota, A = Pi Omega Pi^T.

For a single jump operator sqrt(g) e_{jk} the only nonzero rate is
w[j, k] = g: population flows from basis state k to basis state j, matching
the stochastic-jump reading of that operator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import (
    CROSSING_TOL,
    LindbladSystem,
    SpectralDecomposition,
    apply_dissipator,
    dagger,
    fix_phases,
    group_spectrum,
)
from .errors import (
    DegenerateGapError,
    DimensionMismatchError,
    NonUnitaryFlagError,
    StepTooLargeError,
    TangentNotOffDiagonalError,
)
from .flagpath import as_flag_path
from .simplex import ProjectionMap, build_projection

UNITARITY_TOL = 1e-10
POSITIVITY_TOL = 1e-9
GAP_TOL = 1e-6


@dataclass(frozen=True)
class Flag:
    """An ordered unitary frame; column j carries projector pi_j."""

    frame: np.ndarray

    def __post_init__(self):
        f = np.array(self.frame, dtype=complex)
        if f.ndim != 2 or f.shape[0] != f.shape[1]:
            raise DimensionMismatchError(f"flag frame must be square, got {f.shape}")
        defect = np.linalg.norm(dagger(f) @ f - np.eye(f.shape[0]))
        if defect > UNITARITY_TOL * math.sqrt(f.shape[0]):
            raise NonUnitaryFlagError(f"frame unitarity defect {defect:.3e}")
        object.__setattr__(self, "frame", f)

    @property
    def dim(self) -> int:
        return self.frame.shape[0]

    def projector(self, j: int) -> np.ndarray:
        u = self.frame[:, j]
        return np.outer(u, u.conj())

    def permuted(self, perm) -> "Flag":
        """Flag with slot j carrying the old slot perm[j]."""
        return Flag(self.frame[:, list(perm)])


def identity_flag(n: int) -> Flag:
    return Flag(np.eye(n, dtype=complex))


@dataclass(frozen=True)
class OmegaMatrix:
    """Transfer rates w (zero diagonal) and the rate matrix Omega."""

    w: np.ndarray
    omega: np.ndarray

    @property
    def dim(self) -> int:
        return self.w.shape[0]


def compute_w(sys: LindbladSystem, flag: Flag) -> OmegaMatrix:
    """Transfer rates of a flag and the associated rate matrix."""
    if flag.dim != sys.dim:
        raise DimensionMismatchError(f"flag dim {flag.dim} != system dim {sys.dim}")
    u = flag.frame
    w = np.zeros((sys.dim, sys.dim))
    for op in sys.lindblad_ops:
        m = dagger(u) @ op @ u
        w += np.abs(m) ** 2
    np.fill_diagonal(w, 0.0)
    omega = w.copy()
    omega[np.diag_indices(sys.dim)] = -w.sum(axis=0)
    return OmegaMatrix(w=w, omega=omega)


@dataclass(frozen=True)
class AffineField:
    """dx/dt = b + a x on the projected simplex."""

    b: np.ndarray
    a: np.ndarray

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self.b + self.a @ x


def project_field(pmap: ProjectionMap, om: OmegaMatrix) -> AffineField:
    if om.dim != pmap.dim:
        raise DimensionMismatchError(f"omega dim {om.dim} != map dim {pmap.dim}")
    return AffineField(b=pmap.pi @ om.omega @ pmap.iota, a=pmap.pi @ om.omega @ pmap.pi.T)


@dataclass(frozen=True)
class LambdaTrajectory:
    """Fixed-step spectral trajectory with hyperplane coordinates."""

    times: np.ndarray
    lambdas: np.ndarray
    xs: np.ndarray

    @property
    def dim(self) -> int:
        return self.lambdas.shape[1]

    def min_gap(self) -> float:
        srt = np.sort(self.lambdas, axis=1)
        return float(np.min(np.diff(srt, axis=1)))


def default_step(sys: LindbladSystem) -> float:
    """1e-3 divided by the total squared jump-operator norm (floored at 1)."""
    return 1e-3 / max(1.0, sys.dissipation_scale())


def _segment_times(t0: float, t1: float, breakpoints, step: float):
    """Split [t0, t1] at path breakpoints; RK4 never strides across one."""
    cuts = [t0] + [b for b in sorted(breakpoints) if t0 < b < t1] + [t1]
    segments = []
    for a, b in zip(cuts[:-1], cuts[1:]):
        nsteps = max(1, int(math.ceil((b - a) / step - 1e-12)))
        segments.append((a, b, nsteps))
    return segments


def integrate_lambda(
    sys: LindbladSystem,
    flag_path,
    lambda0,
    t_span,
    step: float | None = None,
    positivity_tol: float = POSITIVITY_TOL,
    pmap: ProjectionMap | None = None,
) -> LambdaTrajectory:
    """Integrate d lambda/dt = Omega(t) lambda with classic RK4.

    ``flag_path`` may be a Flag (constant), a frame, or any flag-path object.
    Fails with StepTooLargeError if the step lets the trajectory leave the
    simplex beyond ``positivity_tol``; the exact flow never does, so a
    violation always means under-resolution.
    """
    path = as_flag_path(flag_path)
    lam = np.asarray(lambda0, dtype=float).copy()
    if lam.shape != (sys.dim,):
        raise DimensionMismatchError(f"lambda0 shape {lam.shape} != ({sys.dim},)")
    t0, t1 = float(t_span[0]), float(t_span[1])
    if not t1 > t0:
        raise DimensionMismatchError(f"need t1 > t0, got {t_span}")
    if step is None:
        step = default_step(sys)

    constant = not path.breakpoints() and np.allclose(
        path.frame(t0), path.frame(t1), atol=1e-14
    )
    omega_const = compute_w(sys, Flag(path.frame(t0))).omega if constant else None
    cache: dict[float, np.ndarray] = {}

    def omega_at(t: float) -> np.ndarray:
        if omega_const is not None:
            return omega_const
        if t in cache:
            return cache[t]
        om = compute_w(sys, Flag(path.frame(t))).omega
        cache.clear()
        cache[t] = om
        return om

    times = [t0]
    lams = [lam.copy()]
    for a, b, nsteps in _segment_times(t0, t1, path.breakpoints(), step):
        h = (b - a) / nsteps
        for i in range(nsteps):
            t = a + i * h
            k1 = omega_at(t) @ lam
            om_mid = omega_at(t + 0.5 * h)
            k2 = om_mid @ (lam + 0.5 * h * k1)
            k3 = om_mid @ (lam + 0.5 * h * k2)
            k4 = omega_at(t + h) @ (lam + h * k3)
            lam = lam + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            drift = abs(float(lam.sum()) - 1.0)
            low = float(lam.min())
            if drift > 1e-9 or low < -positivity_tol:
                raise StepTooLargeError(
                    f"simplex left at t={t + h:.6g}: sum drift {drift:.3e}, "
                    f"min lambda {low:.3e}; reduce the step (currently {step:.3e})"
                )
            times.append(t + h)
            lams.append(lam.copy())
    pmap = pmap or build_projection(sys.dim)
    lam_arr = np.asarray(lams)
    return LambdaTrajectory(times=np.asarray(times), lambdas=lam_arr, xs=pmap.project_many(lam_arr))


def crossing_block(sys: LindbladSystem, lam, flag: Flag, i: int, j: int) -> np.ndarray:
    """The dissipator block pi_i D(rho) pi_j at rho = sum_l lambda_l pi_l.

    For a complete flag this is a rank-one matrix whose single frame-basis
    entry u_i^dag D(rho) u_j is the coupling that must vanish for the flag
    to be admissible when lambda_i = lambda_j.
    """
    u = flag.frame
    rho = (u * np.asarray(lam, dtype=float)) @ dagger(u)
    d = apply_dissipator(sys, rho)
    scalar = u[:, i].conj() @ d @ u[:, j]
    return np.outer(u[:, i], u[:, j].conj()) * scalar


def admissible_flag_at_crossing(
    sys: LindbladSystem, lam, base: Flag, crossing_tol: float = CROSSING_TOL
):
    """Rotate ``base`` inside each near-degenerate eigenvalue group so the
    dissipator's group blocks become diagonal.

    Returns (flag, groups).  Groups of size one need no rotation; if the
    spectrum is simple the base flag is returned unchanged (the groups tell
    the caller that nothing was at a crossing).  Within each rotated group
    the columns are ordered by non-increasing block eigenvalue, i.e. by the
    spectral derivative the dissipator assigns to them.

    The state is assembled from the group-averaged spectrum, so the result
    is exactly invariant under rotations inside each group.
    """
    values = np.asarray(lam, dtype=float)
    groups = group_spectrum(values, crossing_tol)
    if all(len(g) == 1 for g in groups):
        return base, groups
    averaged = values.copy()
    for g in groups:
        averaged[list(g)] = values[list(g)].mean()
    u = base.frame.copy()
    rho = (u * averaged) @ dagger(u)
    d = apply_dissipator(sys, rho)
    for g in groups:
        if len(g) == 1:
            continue
        cols = list(g)
        block = dagger(u[:, cols]) @ d @ u[:, cols]
        block = 0.5 * (block + dagger(block))
        evals, vecs = np.linalg.eigh(block)
        order = np.argsort(-evals, kind="stable")
        u[:, cols] = u[:, cols] @ vecs[:, order]
    return Flag(fix_phases(u)), groups


def projector_derivative(
    rho_dot: np.ndarray,
    decomp: SpectralDecomposition,
    alpha: int,
    gap_tol: float = GAP_TOL,
) -> np.ndarray:
    """Time derivative of the group projector P_alpha along rho(t).

    dP_alpha/dt = sum_{beta != alpha} ( P_alpha rho' P_beta
                                        + P_beta rho' P_alpha )
                                      / (lambda_alpha - lambda_beta)

    with group-representative eigenvalues.  Requires every gap to alpha to
    exceed ``gap_tol``; inside a group the formula has nothing to say and
    between groups a collapsing gap makes it blow up, so both are refused.
    """
    n_groups = len(decomp.groups)
    if not 0 <= alpha < n_groups:
        raise DimensionMismatchError(f"group index {alpha} out of range ({n_groups} groups)")
    p_alpha = decomp.projector(alpha)
    v_alpha = decomp.group_value(alpha)
    out = np.zeros_like(p_alpha)
    for beta in range(n_groups):
        if beta == alpha:
            continue
        gap = v_alpha - decomp.group_value(beta)
        if abs(gap) < gap_tol:
            raise DegenerateGapError(
                f"gap |{gap:.3e}| between groups {alpha} and {beta} below {gap_tol:.1e}"
            )
        p_beta = decomp.projector(beta)
        out += (p_alpha @ rho_dot @ p_beta + p_beta @ rho_dot @ p_alpha) / gap
    return out


def w_derivative(sys: LindbladSystem, flag: Flag, h: np.ndarray, tol: float = 1e-8) -> np.ndarray:
    """Directional derivative of the transfer rates under frame motion
    U(eps) = exp(eps h) U.

    ``h`` must be anti-Hermitian and off-diagonal in the flag frame (the
    diagonal part only spins column phases, which w cannot see; it is
    rejected rather than silently projected out).  Entry [j, k] is
    d/d eps w[j, k] at eps = 0:

        sum_l  ([Lf_l, hf])[j, k] conj(Lf_l[j, k])
             + Lf_l[j, k] ([Lf_l^dag, hf])[k, j]

    in frame coordinates Lf = U^dag L U, hf = U^dag h U.
    """
    hm = np.asarray(h, dtype=complex)
    if hm.shape != (sys.dim, sys.dim):
        raise DimensionMismatchError(f"tangent shape {hm.shape} != ({sys.dim}, {sys.dim})")
    scale = max(1.0, float(np.linalg.norm(hm)))
    anti_defect = float(np.linalg.norm(hm + dagger(hm)))
    if anti_defect > tol * scale:
        raise TangentNotOffDiagonalError(f"tangent not anti-Hermitian, defect {anti_defect:.3e}")
    u = flag.frame
    hf = dagger(u) @ hm @ u
    diag_norm = float(np.linalg.norm(np.diag(hf)))
    if diag_norm > tol * scale:
        raise TangentNotOffDiagonalError(
            f"tangent has diagonal part {diag_norm:.3e} in the flag frame"
        )
    dw = np.zeros((sys.dim, sys.dim))
    for op in sys.lindblad_ops:
        lf = dagger(u) @ op @ u
        comm = lf @ hf - hf @ lf
        comm_dag = dagger(lf) @ hf - hf @ dagger(lf)
        dw += (comm * lf.conj()).real
        dw += (lf * comm_dag.T).real
    np.fill_diagonal(dw, 0.0)
    return dw
