"""Hamiltonian reconstruction and closed-loop transport.

Given a planned spectral trajectory lambda(t) and a differentiable flag path
pi(t), the Hamiltonian that makes the full Lindblad flow track
rho(t) = sum_j lambda_j(t) pi_j(t) is

    H = i ( - sum_j pi_j pi_j'
            + sum_{alpha != beta} M_alphabeta / (lam_alpha - lam_beta) )

where M_alphabeta = P_alpha D(rho) P_beta are the dissipator blocks between
distinct eigenvalue groups.  Near a crossing the divisor collapses; the
reconstruction stays finite exactly when the flag is admissible there (the
in-group blocks vanish), and it refuses to fabricate a diverging control
otherwise.

Transport between arbitrary states with matching spectra adds two short
"book-end" rotations: a constant Hamiltonian h/Delta applied for a time
Delta realizes the frame alignment exp(-i h) up to an error that shrinks
linearly in Delta; the trace-distance overhead of both book-ends together
is bounded by 2 n Delta sum_m ||L_m||^2 (spectral norms).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import (
    CROSSING_TOL,
    LindbladSystem,
    apply_dissipator,
    apply_lindblad,
    dagger,
    decompose_hermitian,
    group_spectrum,
    hermitize,
    trace_distance,
)
from .errors import (
    DimensionMismatchError,
    NearCrossingBlowupError,
    PlanSpectrumMismatchError,
    StepTooLargeError,
    ValidationError,
)
from .flagpath import as_flag_path, principal_log_unitary
from .orbit import Flag, compute_w, default_step
from .simplex import build_projection

COUPLING_TOL = 1e-10
POS_GUARD = 1e-9


# -- control basis -----------------------------------------------------------


@dataclass(frozen=True)
class ControlBasis:
    """Hermitian traceless generators, pairwise orthogonal, Tr(H_i^2) = 2.

    Order: for each column pair j < k the symmetric then the antisymmetric
    generator, followed by the n - 1 diagonal generators.
    """

    dim: int
    mats: tuple

    def __len__(self) -> int:
        return len(self.mats)


def control_basis(n: int) -> ControlBasis:
    mats = []
    for k in range(n):
        for j in range(k):
            sym = np.zeros((n, n), dtype=complex)
            sym[j, k] = sym[k, j] = 1.0
            mats.append(sym)
            asym = np.zeros((n, n), dtype=complex)
            asym[j, k] = -1j
            asym[k, j] = 1j
            mats.append(asym)
    for l in range(1, n):
        d = np.zeros((n, n), dtype=complex)
        c = math.sqrt(2.0 / (l * (l + 1)))
        for m in range(l):
            d[m, m] = c
        d[l, l] = -l * c
        mats.append(d)
    return ControlBasis(dim=n, mats=tuple(mats))


def decompose_control(h: np.ndarray, basis: ControlBasis):
    """Coefficients u_i = Tr(H H_i)/2 and the identity offset Tr(H)/n."""
    m = np.asarray(h, dtype=complex)
    if m.shape != (basis.dim, basis.dim):
        raise DimensionMismatchError(f"shape {m.shape} != ({basis.dim}, {basis.dim})")
    offset = float(np.trace(m).real) / basis.dim
    coeffs = np.array([float(np.trace(m @ b).real) / 2.0 for b in basis.mats])
    return coeffs, offset


def assemble_control(coeffs, offset: float, basis: ControlBasis) -> np.ndarray:
    out = offset * np.eye(basis.dim, dtype=complex)
    for c, b in zip(np.asarray(coeffs, dtype=float), basis.mats):
        out += c * b
    return out


# -- reconstruction ----------------------------------------------------------


def reconstruct_hamiltonian(
    sys: LindbladSystem,
    lam,
    flag: Flag,
    flag_dot: np.ndarray | None = None,
    crossing_tol: float = CROSSING_TOL,
    coupling_tol: float = COUPLING_TOL,
) -> np.ndarray:
    """Hamiltonian that holds the flow on (lambda, pi) at this instant.

    ``flag_dot`` is the frame derivative dU/dt (zero if omitted).  Eigenvalue
    groups are formed at ``crossing_tol``; inside a group the coupling block
    of the dissipator must vanish (below ``coupling_tol``, scaled), otherwise
    no finite Hamiltonian can hold the frame and NearCrossingBlowupError is
    raised.
    """
    values = np.asarray(lam, dtype=float)
    if values.shape != (sys.dim,):
        raise DimensionMismatchError(f"lambda shape {values.shape} != ({sys.dim},)")
    u = flag.frame
    if flag_dot is None:
        s_term = np.zeros((sys.dim, sys.dim), dtype=complex)
    else:
        udot = np.asarray(flag_dot, dtype=complex)
        if udot.shape != u.shape:
            raise DimensionMismatchError(f"flag_dot shape {udot.shape} != {u.shape}")
        hf = dagger(u) @ udot
        defect = float(np.linalg.norm(hf + dagger(hf)))
        if defect > 1e-8 * max(1.0, float(np.linalg.norm(udot))):
            raise ValidationError(
                f"flag_dot is not tangent to the unitary frame (defect {defect:.3e})"
            )
        # sum_j pi_j pi_j' = U diag(diag(U^dag Udot)) U^dag + U Udot^dag
        s_term = (u * np.diag(hf)) @ dagger(u) + u @ dagger(udot)

    rho = (u * values) @ dagger(u)
    d_frame = dagger(u) @ apply_dissipator(sys, rho) @ u
    groups = group_spectrum(values, crossing_tol)
    group_of = np.empty(sys.dim, dtype=int)
    rep = np.empty(sys.dim, dtype=float)
    for a, g in enumerate(groups):
        idx = list(g)
        group_of[idx] = a
        rep[idx] = values[idx].mean()

    # in-group couplings must vanish for the frame to be holdable
    d_scale = max(1.0, float(np.linalg.norm(d_frame)))
    b_frame = np.zeros_like(d_frame)
    for i in range(sys.dim):
        for j in range(sys.dim):
            if i == j:
                continue
            if group_of[i] == group_of[j]:
                coupling = abs(d_frame[i, j])
                if coupling > coupling_tol * d_scale:
                    raise NearCrossingBlowupError(
                        f"eigenvalues {i} and {j} are within {crossing_tol:.1e} "
                        f"but their coupling block is {coupling:.3e}: holding this "
                        "flag would need an unbounded Hamiltonian"
                    )
                continue
            b_frame[i, j] = d_frame[i, j] / (rep[i] - rep[j])

    h = -1j * s_term + 1j * (u @ b_frame @ dagger(u))
    return hermitize(h)


# -- full simulation ---------------------------------------------------------


@dataclass(frozen=True)
class DensityTrajectory:
    times: np.ndarray
    rhos: np.ndarray
    trace_defects: np.ndarray
    min_eigs: np.ndarray

    @property
    def final(self) -> np.ndarray:
        return self.rhos[-1]


def _as_h_source(hamiltonian):
    if hamiltonian is None:
        return lambda t: None
    if callable(hamiltonian):
        return hamiltonian
    h_const = np.asarray(hamiltonian, dtype=complex)
    return lambda t: h_const


def simulate_full(
    sys: LindbladSystem,
    hamiltonian,
    rho0,
    t_span,
    step: float | None = None,
    breakpoints=(),
    store_stride: int = 1,
) -> DensityTrajectory:
    """Classic RK4 for drho/dt = -i[H(t), rho] + D(rho).

    ``hamiltonian`` may be None, a constant matrix, or a callable of t; it
    must be piecewise smooth with the rough times listed in ``breakpoints``.
    Trace drift beyond 1e-9 per unit scale or eigenvalues below -1e-6 abort
    with StepTooLargeError.
    """
    h_at = _as_h_source(hamiltonian)
    rho = np.array(rho0.mat if hasattr(rho0, "mat") else rho0, dtype=complex)
    t0, t1 = float(t_span[0]), float(t_span[1])
    if step is None:
        step = default_step(sys)
    from .orbit import _segment_times  # shared segmentation helper

    times = [t0]
    rhos = [rho.copy()]
    for a, b, nsteps in _segment_times(t0, t1, breakpoints, step):
        h_seg = (b - a) / nsteps
        for i in range(nsteps):
            t = a + i * h_seg
            k1 = apply_lindblad(sys, h_at(t), rho)
            h_mid = h_at(t + 0.5 * h_seg)
            k2 = apply_lindblad(sys, h_mid, rho + 0.5 * h_seg * k1)
            k3 = apply_lindblad(sys, h_mid, rho + 0.5 * h_seg * k2)
            k4 = apply_lindblad(sys, h_at(t + h_seg), rho + h_seg * k3)
            rho = rho + (h_seg / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            times.append(t + h_seg)
            rhos.append(rho.copy())
    times = np.asarray(times)
    rhos = np.asarray(rhos)
    if store_stride > 1:
        keep = np.unique(np.r_[np.arange(0, len(times), store_stride), len(times) - 1])
        times, rhos = times[keep], rhos[keep]
    trace_defects = np.abs(np.einsum("tii->t", rhos) - 1.0)
    min_eigs = np.array([float(np.linalg.eigvalsh(hermitize(r)).min()) for r in rhos])
    if trace_defects.max() > 1e-6 or min_eigs.min() < -1e-6:
        raise StepTooLargeError(
            f"trajectory left the density cone: max trace defect "
            f"{trace_defects.max():.3e}, min eigenvalue {min_eigs.min():.3e}"
        )
    return DensityTrajectory(
        times=times, rhos=rhos, trace_defects=trace_defects, min_eigs=min_eigs
    )


# -- planned transport -------------------------------------------------------


@dataclass(frozen=True)
class TransportPlan:
    """A spectral starting point moved along a flag path for a duration."""

    flag_path: object
    lambda0: np.ndarray
    duration: float
    t0: float = 0.0


@dataclass(frozen=True)
class ControlledTrajectory:
    """Joint record of the plan (lambda, flag) and the driven state rho."""

    times: np.ndarray
    lambdas: np.ndarray
    xs: np.ndarray
    rhos: np.ndarray
    h_norms: np.ndarray

    @property
    def final(self) -> np.ndarray:
        return self.rhos[-1]

    def planned_state(self, i: int, path) -> np.ndarray:
        u = path.frame(float(self.times[i]))
        return (u * self.lambdas[i]) @ dagger(u)


def integrate_controlled(
    sys: LindbladSystem,
    plan: TransportPlan,
    rho0,
    step: float | None = None,
    crossing_tol: float = CROSSING_TOL,
) -> ControlledTrajectory:
    """Integrate plan and state together with one RK4 clock.

    The spectral plan d lambda/dt = Omega(t) lambda is one-way coupled into
    the state equation through the reconstructed Hamiltonian, which at every
    stage is evaluated from the stage's own plan variables, so the driven
    rho tracks the plan to integrator accuracy when started on it.
    """
    path = as_flag_path(plan.flag_path)
    lam = np.asarray(plan.lambda0, dtype=float).copy()
    rho = np.array(rho0.mat if hasattr(rho0, "mat") else rho0, dtype=complex)
    if lam.shape != (sys.dim,):
        raise DimensionMismatchError(f"lambda0 shape {lam.shape} != ({sys.dim},)")
    if step is None:
        step = default_step(sys)
    t0, t1 = plan.t0, plan.t0 + plan.duration

    cache: dict[float, tuple] = {}

    def frame_data(t: float):
        if t not in cache:
            u = path.frame(t)
            udot = path.frame_dot(t)
            om = compute_w(sys, Flag(u)).omega
            if len(cache) > 4:
                cache.clear()
            cache[t] = (u, udot, om)
        return cache[t]

    def rates(t: float, lam_s: np.ndarray, rho_s: np.ndarray):
        u, udot, om = frame_data(t)
        lam_dot = om @ lam_s
        h = reconstruct_hamiltonian(
            sys, lam_s, Flag(u), flag_dot=udot, crossing_tol=crossing_tol
        )
        rho_dot = apply_lindblad(sys, h, rho_s)
        return lam_dot, rho_dot, h

    from .orbit import _segment_times

    times = [t0]
    lams = [lam.copy()]
    rhos = [rho.copy()]
    h_norms_list = []
    h0 = rates(t0, lam, rho)[2]
    h_norms_list.append(float(np.linalg.norm(h0, 2)))
    for a, b, nsteps in _segment_times(t0, t1, path.breakpoints(), step):
        dt = (b - a) / nsteps
        for i in range(nsteps):
            t = a + i * dt
            l1, r1, _ = rates(t, lam, rho)
            l2, r2, _ = rates(t + 0.5 * dt, lam + 0.5 * dt * l1, rho + 0.5 * dt * r1)
            l3, r3, _ = rates(t + 0.5 * dt, lam + 0.5 * dt * l2, rho + 0.5 * dt * r2)
            l4, r4, h_end = rates(t + dt, lam + dt * l3, rho + dt * r3)
            lam = lam + (dt / 6.0) * (l1 + 2.0 * l2 + 2.0 * l3 + l4)
            rho = rho + (dt / 6.0) * (r1 + 2.0 * r2 + 2.0 * r3 + r4)
            if lam.min() < -POS_GUARD or abs(float(lam.sum()) - 1.0) > 1e-9:
                raise StepTooLargeError(
                    f"plan left the simplex at t={t + dt:.6g} (step {step:.3e})"
                )
            times.append(t + dt)
            lams.append(lam.copy())
            rhos.append(rho.copy())
            h_norms_list.append(float(np.linalg.norm(h_end, 2)))
    pmap = build_projection(sys.dim)
    lam_arr = np.asarray(lams)
    return ControlledTrajectory(
        times=np.asarray(times),
        lambdas=lam_arr,
        xs=pmap.project_many(lam_arr),
        rhos=np.asarray(rhos),
        h_norms=np.asarray(h_norms_list),
    )


@dataclass(frozen=True)
class RoundtripReport:
    """Deviation of the driven state from the plan it was built from."""

    traj: ControlledTrajectory
    eig_dev: float
    proj_dev: float
    min_gap: float


def roundtrip_report(
    sys: LindbladSystem,
    plan: TransportPlan,
    rho0=None,
    step: float | None = None,
    crossing_tol: float = CROSSING_TOL,
) -> RoundtripReport:
    """Drive rho along the plan's reconstructed Hamiltonian and measure how
    far its spectral data drifts from the plan.

    Requires the planned spectrum to stay simple (projector matching is done
    slot-by-slot in sorted order).
    """
    path = as_flag_path(plan.flag_path)
    if rho0 is None:
        u0 = path.frame(plan.t0)
        rho0 = (u0 * np.asarray(plan.lambda0, dtype=float)) @ dagger(u0)
    traj = integrate_controlled(sys, plan, rho0, step=step, crossing_tol=crossing_tol)
    eig_dev = 0.0
    proj_dev = 0.0
    min_gap = math.inf
    for i in range(traj.times.shape[0]):
        lam_plan = traj.lambdas[i]
        order = np.argsort(-lam_plan, kind="stable")
        gaps = -np.diff(lam_plan[order])
        min_gap = min(min_gap, float(gaps.min()))
        dec = decompose_hermitian(traj.rhos[i], crossing_tol=crossing_tol)
        eig_dev = max(eig_dev, float(np.abs(dec.lam - lam_plan[order]).max()))
        u = path.frame(float(traj.times[i]))
        for r, slot in enumerate(order):
            planned = np.outer(u[:, slot], u[:, slot].conj())
            measured = np.outer(dec.frame[:, r], dec.frame[:, r].conj())
            proj_dev = max(proj_dev, float(np.linalg.norm(planned - measured)))
    return RoundtripReport(traj=traj, eig_dev=eig_dev, proj_dev=proj_dev, min_gap=min_gap)


# -- book-end transport ------------------------------------------------------


@dataclass(frozen=True)
class BookendResult:
    delta: float
    distance: float
    bound: float
    rho_final: np.ndarray
    h_head: np.ndarray
    h_tail: np.ndarray
    traj_mid: ControlledTrajectory


def _alignment_generator(rho_from: np.ndarray, rho_to: np.ndarray, crossing_tol: float):
    """Hermitian h with exp(-i h) rho_from exp(i h) = rho_to (matched spectra)."""
    dec_from = decompose_hermitian(rho_from, crossing_tol)
    dec_to = decompose_hermitian(rho_to, crossing_tol)
    v = dec_to.frame @ dagger(dec_from.frame)
    return 1j * principal_log_unitary(v)


def bookend_transport(
    sys: LindbladSystem,
    rho_i,
    rho_t,
    plan: TransportPlan,
    delta: float,
    step: float | None = None,
    crossing_tol: float = CROSSING_TOL,
    spectrum_tol: float = 1e-6,
    bookend_steps: int = 1024,
) -> BookendResult:
    """Transport rho_i toward rho_t: alignment book-end, planned middle leg,
    closing book-end.

    The plan must carry the spectrum of rho_i to the spectrum of rho_t
    (checked against ``spectrum_tol``, sorted order).  The achieved final
    state differs from rho_t in trace distance by at most
    2 n delta sum_m ||L_m||^2 plus integration error.
    """
    rho_i = np.array(rho_i.mat if hasattr(rho_i, "mat") else rho_i, dtype=complex)
    rho_t = np.array(rho_t.mat if hasattr(rho_t, "mat") else rho_t, dtype=complex)
    if delta <= 0:
        raise ValidationError(f"delta must be positive, got {delta}")
    path = as_flag_path(plan.flag_path)
    if step is None:
        step = default_step(sys)

    # the plan's own spectral endpoints
    from .orbit import integrate_lambda

    lam_traj = integrate_lambda(
        sys, path, plan.lambda0, (plan.t0, plan.t0 + plan.duration), step=step
    )
    lam_start = np.sort(lam_traj.lambdas[0])[::-1]
    lam_end = np.sort(lam_traj.lambdas[-1])[::-1]
    spec_i = np.linalg.eigvalsh(hermitize(rho_i))[::-1]
    spec_t = np.linalg.eigvalsh(hermitize(rho_t))[::-1]
    dev_i = float(np.abs(spec_i - lam_start).max())
    dev_t = float(np.abs(spec_t - lam_end).max())
    if dev_i > spectrum_tol or dev_t > spectrum_tol:
        raise PlanSpectrumMismatchError(
            f"plan endpoints miss the state spectra by ({dev_i:.3e}, {dev_t:.3e})"
        )

    u0 = path.frame(plan.t0)
    u1 = path.frame(plan.t0 + plan.duration)
    rho_plan_start = (u0 * np.asarray(plan.lambda0, dtype=float)) @ dagger(u0)
    rho_plan_end = (u1 * lam_traj.lambdas[-1]) @ dagger(u1)

    h_head = _alignment_generator(rho_i, rho_plan_start, crossing_tol)
    h_tail = _alignment_generator(rho_plan_end, rho_t, crossing_tol)

    head = simulate_full(
        sys, h_head / delta, rho_i, (plan.t0 - delta, plan.t0),
        step=delta / bookend_steps,
    )
    mid = integrate_controlled(
        sys, plan, head.final, step=step, crossing_tol=crossing_tol
    )
    tail = simulate_full(
        sys, h_tail / delta, mid.final,
        (plan.t0 + plan.duration, plan.t0 + plan.duration + delta),
        step=delta / bookend_steps,
    )
    dist = trace_distance(tail.final, rho_t)
    bound = 2.0 * sys.dim * delta * sys.dissipation_scale()
    return BookendResult(
        delta=delta,
        distance=dist,
        bound=bound,
        rho_final=tail.final,
        h_head=h_head,
        h_tail=h_tail,
        traj_mid=mid,
    )
