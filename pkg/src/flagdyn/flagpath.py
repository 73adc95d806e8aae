"""Time-parametrized flag frames.

A flag path supplies, for any time t in its domain, a unitary frame U(t)
whose columns carry the rank-one projectors of the flag, plus the
anti-Hermitian generator h(t) with U'(t) = h(t) U(t) wherever the path is
differentiable.  Integrators never step across ``breakpoints()``;
``discontinuities()`` lists the breakpoints where the frame actually jumps
(instantaneous splices), which is the only kind of non-smoothness allowed.

Three concrete paths cover what the rest of the package needs:

* ConstantFlagPath: frozen frame, zero generator.
* GeodesicFlagPath: piecewise one-parameter rotations exp(tau h) U_i through
  a list of waypoint frames; h is the principal logarithm of the transition
  unitary divided by the segment duration.
* SampledFlagPath: a table of (time, frame) samples, geodesically
  interpolated inside each interval.  A large inter-sample jump must be
  declared as a splice, otherwise the constructor refuses it rather than
  silently interpolating through a discontinuity.
"""

from __future__ import annotations

import bisect

import numpy as np
import scipy.linalg

from .core import dagger
from .errors import FlagPathDiscontinuityError, ValidationError

# Frobenius jump per unit sqrt(dim) beyond which two consecutive samples are
# treated as a splice rather than a resolvable rotation.
JUMP_TOL = 0.5


def principal_log_unitary(v: np.ndarray) -> np.ndarray:
    """Anti-Hermitian logarithm of a unitary with eigenphases in (-pi, pi].

    Computed from a complex Schur form, which is stable for the normal
    matrices we feed it (unitaries), including repeated eigenvalues.
    """
    t, q = scipy.linalg.schur(v, output="complex")
    phases = np.angle(np.diag(t))
    log = (q * (1j * phases)) @ dagger(q)
    return 0.5 * (log - dagger(log))


class ConstantFlagPath:
    def __init__(self, frame: np.ndarray):
        self._frame = np.array(frame, dtype=complex)
        self._zero = np.zeros_like(self._frame)

    @property
    def dim(self) -> int:
        return self._frame.shape[0]

    def frame(self, t: float) -> np.ndarray:
        return self._frame

    def generator(self, t: float) -> np.ndarray:
        return self._zero

    def frame_dot(self, t: float) -> np.ndarray:
        return self._zero

    def breakpoints(self):
        return ()

    def discontinuities(self):
        return ()


class GeodesicFlagPath:
    """Piecewise-geodesic path through waypoint frames.

    waypoints: sequence of unitary frames (length m >= 2)
    durations: m - 1 positive segment durations
    t0: absolute start time of the path
    """

    def __init__(self, waypoints, durations, t0: float = 0.0):
        frames = [np.array(w, dtype=complex) for w in waypoints]
        if len(frames) < 2:
            raise ValidationError("geodesic path needs at least two waypoints")
        durations = [float(d) for d in durations]
        if len(durations) != len(frames) - 1:
            raise ValidationError(
                f"{len(frames)} waypoints need {len(frames) - 1} durations, got {len(durations)}"
            )
        if any(d <= 0 for d in durations):
            raise ValidationError("segment durations must be positive")
        self._frames = frames
        self._t0 = float(t0)
        self._times = np.concatenate([[t0], t0 + np.cumsum(durations)])
        self._gens = []
        for a, b, d in zip(frames[:-1], frames[1:], durations):
            self._gens.append(principal_log_unitary(b @ dagger(a)) / d)

    @property
    def dim(self) -> int:
        return self._frames[0].shape[0]

    def _segment(self, t: float) -> int:
        i = bisect.bisect_right(self._times, t) - 1
        return min(max(i, 0), len(self._gens) - 1)

    def frame(self, t: float) -> np.ndarray:
        i = self._segment(t)
        tau = np.clip(t, self._times[0], self._times[-1]) - self._times[i]
        return scipy.linalg.expm(tau * self._gens[i]) @ self._frames[i]

    def generator(self, t: float) -> np.ndarray:
        return self._gens[self._segment(t)]

    def frame_dot(self, t: float) -> np.ndarray:
        return self.generator(t) @ self.frame(t)

    def breakpoints(self):
        return tuple(float(t) for t in self._times[1:-1])

    def discontinuities(self):
        return ()


class SampledFlagPath:
    """Geodesic interpolation through a sampled table of frames.

    ``splices`` lists sample times where the frame is allowed to jump: on a
    spliced interval the earlier frame is held until the splice time.  An
    undeclared jump (Frobenius distance > jump_tol * sqrt(dim) between
    consecutive samples) raises FlagPathDiscontinuityError.
    """

    def __init__(self, times, frames, splices=(), jump_tol: float = JUMP_TOL):
        self._times = np.asarray(times, dtype=float)
        self._frames = [np.array(f, dtype=complex) for f in frames]
        if self._times.ndim != 1 or len(self._frames) != self._times.shape[0]:
            raise ValidationError("times and frames must have equal length")
        if len(self._frames) < 2:
            raise ValidationError("sampled path needs at least two samples")
        if np.any(np.diff(self._times) <= 0):
            raise ValidationError("sample times must be strictly increasing")
        self._splices = tuple(sorted(float(s) for s in splices))
        n = self._frames[0].shape[0]
        scale = jump_tol * np.sqrt(n)
        spliced = set()
        for k, (a, b) in enumerate(zip(self._frames[:-1], self._frames[1:])):
            if np.linalg.norm(b - a) > scale:
                t_jump = float(self._times[k + 1])
                if not any(abs(t_jump - s) < 1e-12 for s in self._splices):
                    raise FlagPathDiscontinuityError(
                        f"frame jump of {np.linalg.norm(b - a):.3g} at t={t_jump:.6g} "
                        "is not declared as a splice"
                    )
                spliced.add(k)
        self._spliced_intervals = spliced
        self._gens = {}
        for k in range(len(self._frames) - 1):
            if k in spliced:
                continue
            d = self._times[k + 1] - self._times[k]
            self._gens[k] = principal_log_unitary(
                self._frames[k + 1] @ dagger(self._frames[k])
            ) / d

    @property
    def dim(self) -> int:
        return self._frames[0].shape[0]

    def _interval(self, t: float) -> int:
        i = int(np.searchsorted(self._times, t, side="right")) - 1
        return min(max(i, 0), len(self._frames) - 2)

    def frame(self, t: float) -> np.ndarray:
        i = self._interval(t)
        if i in self._spliced_intervals:
            # held frame; the jump happens exactly at the right endpoint
            if t >= self._times[i + 1]:
                return self._frames[i + 1]
            return self._frames[i]
        tau = np.clip(t, self._times[0], self._times[-1]) - self._times[i]
        return scipy.linalg.expm(tau * self._gens[i]) @ self._frames[i]

    def generator(self, t: float) -> np.ndarray:
        i = self._interval(t)
        if i in self._spliced_intervals:
            return np.zeros_like(self._frames[0])
        return self._gens[i]

    def frame_dot(self, t: float) -> np.ndarray:
        return self.generator(t) @ self.frame(t)

    def breakpoints(self):
        return tuple(float(t) for t in self._times[1:-1])

    def discontinuities(self):
        return self._splices


def as_flag_path(path_or_frame):
    """Accept a path object, a Flag, or a bare frame array."""
    if hasattr(path_or_frame, "breakpoints"):
        return path_or_frame
    frame = getattr(path_or_frame, "frame", path_or_frame)
    return ConstantFlagPath(np.asarray(frame, dtype=complex))
