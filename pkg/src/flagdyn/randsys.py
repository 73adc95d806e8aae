"""Deterministic random matrices from a named, seeded bit stream.

Randomized examples must reproduce bit-for-bit across platforms, so all
floating-point variates are derived from one fixed mapping: the PCG64
stream seeded with the given integer yields 53-bit integers, and a uniform
double in [0, 1) is that integer divided by 2^53.  Normals come from the
Box-Muller transform of consecutive uniform pairs, never from library
normal samplers whose algorithms are free to change.
"""

from __future__ import annotations

import math

import numpy as np


class SeededStream:
    """Uniform/normal/complex variates with a frozen integer-to-float map."""

    def __init__(self, seed: int):
        self.seed = int(seed)
        self._gen = np.random.Generator(np.random.PCG64(self.seed))

    def uniform(self, size=None) -> np.ndarray | float:
        """Uniform doubles in [0, 1): 53-bit integers / 2^53."""
        ints = self._gen.integers(0, 1 << 53, size=size, dtype=np.int64)
        return ints / float(1 << 53)

    def uniform_range(self, low: float, high: float, size=None):
        return low + (high - low) * self.uniform(size)

    def normal(self, size=None) -> np.ndarray | float:
        """Standard normals via Box-Muller on consecutive uniform pairs."""
        shape = () if size is None else (
            (size,) if np.isscalar(size) else tuple(size)
        )
        count = int(np.prod(shape)) if shape else 1
        pairs = (count + 1) // 2
        u = self.uniform(size=(pairs, 2))
        r = np.sqrt(-2.0 * np.log1p(-u[:, 0]))
        theta = 2.0 * math.pi * u[:, 1]
        z = np.empty(2 * pairs)
        z[0::2] = r * np.cos(theta)
        z[1::2] = r * np.sin(theta)
        out = z[:count]
        if size is None:
            return float(out[0])
        return out.reshape(shape)

    def complex_entries(self, shape, magnitude: float = 1.0) -> np.ndarray:
        """Entries with real and imaginary parts uniform on [0, magnitude]."""
        re = self.uniform_range(0.0, magnitude, size=shape)
        im = self.uniform_range(0.0, magnitude, size=shape)
        return re + 1j * im

    def haar_unitary(self, n: int) -> np.ndarray:
        """Haar-distributed unitary: QR of a complex Gaussian matrix with
        the R-diagonal phases absorbed."""
        z = (self.normal((n, n)) + 1j * self.normal((n, n))) / math.sqrt(2.0)
        q, r = np.linalg.qr(z)
        d = np.diag(r)
        return q * (d / np.abs(d))

    def simplex_point(self, n: int) -> np.ndarray:
        """Uniform (Dirichlet(1,..,1)) point on the probability simplex."""
        g = -np.log1p(-self.uniform(size=n))
        return g / g.sum()

    def hermitian(self, n: int, scale: float = 1.0) -> np.ndarray:
        z = self.normal((n, n)) + 1j * self.normal((n, n))
        return scale * 0.5 * (z + z.conj().T)

    def tangent_off_diagonal(self, n: int) -> np.ndarray:
        """Unit-norm anti-Hermitian matrix with exactly zero diagonal."""
        h = np.zeros((n, n), dtype=complex)
        for k in range(n):
            for j in range(k):
                h[j, k] = self.normal() + 1j * self.normal()
                h[k, j] = -h[j, k].conjugate()
        return h / np.linalg.norm(h)


def random_dense_operators(seed: int, n: int, count: int, magnitude: float) -> list:
    """Jump operators with entries drawn as in the random figure systems:
    real and imaginary parts uniform on [0, magnitude]."""
    stream = SeededStream(seed)
    return [stream.complex_entries((n, n), magnitude) for _ in range(count)]
