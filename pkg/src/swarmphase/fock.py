"""Two-mode Fock-space numerics.

States with a fixed total photon number ``M`` are stored densely: ``amps[n]``
is the amplitude of ``|n, M - n>``, i.e. ``n`` photons in mode ``a``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from fractions import Fraction
from numbers import Real

import numpy as np

from .errors import DomainError

__all__ = [
    "HalfInteger",
    "FockVector",
    "wigner_small_d",
    "wigner_d_matrix",
    "min_uncertainty_state",
    "kraus_apply",
    "kraus_step",
    "MAX_STATE_PHOTONS",
]

MAX_STATE_PHOTONS = 32
_NORM_SLACK = 1e-12


@dataclass(frozen=True, order=True)
class HalfInteger:
    """An integer or half-integer, stored as twice its value."""

    twice_value: int

    def __post_init__(self):
        if not isinstance(self.twice_value, (int, np.integer)):
            raise TypeError(f"twice_value must be an integer, got {self.twice_value!r}")
        object.__setattr__(self, "twice_value", int(self.twice_value))

    @classmethod
    def of(cls, value) -> HalfInteger:
        """Coerce an int, float, Fraction or HalfInteger to a HalfInteger."""
        if isinstance(value, HalfInteger):
            return value
        if isinstance(value, (int, np.integer)):
            return cls(2 * int(value))
        if isinstance(value, (Real, Fraction)) and math.isfinite(value):
            twice = 2 * value
            if twice == int(twice):
                return cls(int(twice))
        raise DomainError(f"{value!r} is not an integer or half-integer")

    def __float__(self) -> float:
        return self.twice_value / 2

    def __repr__(self) -> str:
        if self.twice_value % 2:
            return f"HalfInteger({self.twice_value}/2)"
        return f"HalfInteger({self.twice_value // 2})"


def wigner_small_d(j, m_row, m_col, beta: float) -> float:
    """Wigner small-d matrix element ``d^j_{m_row, m_col}(beta)``.

    Indices may be given as ints, half-integer floats/Fractions or
    :class:`HalfInteger`. Uses the factorial sum; each prefactor is formed
    as an exact rational before its square root.

    Raises
    ------
    DomainError
        If ``|m| > j`` or ``j - m`` is not an integer for either index.
    """
    j2 = HalfInteger.of(j).twice_value
    a2 = HalfInteger.of(m_row).twice_value
    b2 = HalfInteger.of(m_col).twice_value
    if j2 < 0:
        raise DomainError(f"j must be nonnegative, got {j2}/2")
    for m2 in (a2, b2):
        if abs(m2) > j2 or (j2 - m2) % 2:
            raise DomainError(f"index {m2}/2 is not a valid projection for j={j2}/2")

    # integer offsets: j+m', j-m', j+m, j-m, m'-m
    jp_row, jm_row = (j2 + a2) // 2, (j2 - a2) // 2
    jp_col, jm_col = (j2 + b2) // 2, (j2 - b2) // 2
    diff = (a2 - b2) // 2

    half = beta / 2
    c, s = math.cos(half), math.sin(half)
    fact = math.factorial
    numerator = fact(jp_row) * fact(jm_row) * fact(jp_col) * fact(jm_col)
    total = 0.0
    for k in range(max(0, -diff), min(jp_col, jm_row) + 1):
        denominator = fact(jp_col - k) * fact(k) * fact(diff + k) * fact(jm_row - k)
        # exact rational square before the single rounding
        coeff = math.sqrt(Fraction(numerator, denominator * denominator))
        sign = -1.0 if (diff + k) % 2 else 1.0
        cos_pow = jp_col + jm_row - 2 * k
        sin_pow = diff + 2 * k
        total += sign * coeff * c**cos_pow * s**sin_pow
    return total


def wigner_d_matrix(j, beta: float) -> np.ndarray:
    """Full ``(2j+1) x (2j+1)`` matrix; row/column ``i`` is ``m = i - j``."""
    j2 = HalfInteger.of(j).twice_value
    size = j2 + 1
    out = np.empty((size, size))
    for r in range(size):
        for c in range(size):
            out[r, c] = wigner_small_d(HalfInteger(j2), HalfInteger(2 * r - j2), HalfInteger(2 * c - j2), beta)
    return out


@dataclass(frozen=True, eq=False)
class FockVector:
    """Two-mode state with ``photons`` photons in total.

    The amplitude array is copied and made read-only on construction.
    Sub-normalized vectors are allowed: in a measurement chain the squared
    norm is the probability of the record that produced the state.
    """

    photons: int
    amps: np.ndarray

    def __post_init__(self):
        if int(self.photons) != self.photons or self.photons < 0:
            raise DomainError(f"photon count must be a nonnegative integer, got {self.photons!r}")
        amps = np.array(self.amps, dtype=complex)
        if amps.shape != (self.photons + 1,):
            raise DomainError(f"expected {self.photons + 1} amplitudes, got shape {amps.shape}")
        if not np.all(np.isfinite(amps)):
            raise DomainError("amplitudes must be finite")
        norm2 = float(np.vdot(amps, amps).real)
        if norm2 > 1 + _NORM_SLACK:
            raise DomainError(f"squared norm {norm2!r} exceeds 1")
        amps.setflags(write=False)
        object.__setattr__(self, "photons", int(self.photons))
        object.__setattr__(self, "amps", amps)

    def norm2(self) -> float:
        return float(np.vdot(self.amps, self.amps).real)

    def to_json(self) -> dict:
        return {"photons": self.photons, "amps": [[float(z.real), float(z.imag)] for z in self.amps]}

    @classmethod
    def from_json(cls, data: dict) -> FockVector:
        try:
            amps = [complex(re, im) for re, im in data["amps"]]
            return cls(int(data["photons"]), np.array(amps, dtype=complex))
        except (KeyError, TypeError, ValueError) as exc:
            raise DomainError(f"malformed FockVector JSON: {exc}") from exc

    def __eq__(self, other):
        if not isinstance(other, FockVector):
            return NotImplemented
        return self.photons == other.photons and np.array_equal(self.amps, other.amps)

    __hash__ = None


@lru_cache(maxsize=None)
def _min_uncertainty_amps(n: int) -> np.ndarray:
    d = wigner_d_matrix(HalfInteger(n), math.pi / 2)
    idx = np.arange(n + 1)
    weights = np.sin((idx + 1) * math.pi / (n + 2))
    # phase[n, k] = exp(i*pi*(k - n)/2)
    phase = np.exp(0.5j * math.pi * (idx[None, :] - idx[:, None]))
    amps = (phase * d) @ weights / math.sqrt(n / 2 + 1)
    amps.setflags(write=False)
    return amps


def min_uncertainty_state(n: int) -> FockVector:
    """The permutation-symmetric minimum-uncertainty input state of ``n`` photons.

    ``amps[n]`` sums over ``k`` with weights ``sin((k+1) pi / (N+2))``, the
    phase ``exp(i pi (k-n)/2)`` and ``d^{N/2}_{n-N/2, k-N/2}(pi/2)``.
    """
    if int(n) != n or not 1 <= n <= MAX_STATE_PHOTONS:
        raise DomainError(f"photon count must be in 1..{MAX_STATE_PHOTONS}, got {n!r}")
    return FockVector(int(n), _min_uncertainty_amps(int(n)))


def kraus_step(amps: np.ndarray, cos_t, sin_t) -> np.ndarray:
    """Apply the outcome-0 detection operator along the last axis of ``amps``.

    ``cos_t``/``sin_t`` broadcast against ``amps[..., 0]``. Outcome 1 is the
    same operator at ``theta - pi/2``, i.e. ``(cos_t, sin_t) -> (sin_t, -cos_t)``.
    """
    m = amps.shape[-1] - 1
    n = np.arange(m)
    up = np.sqrt((n + 1) / m)
    down = np.sqrt((m - n) / m)
    cos_t = np.asarray(cos_t)[..., None]
    sin_t = np.asarray(sin_t)[..., None]
    return cos_t * up * amps[..., 1:] - sin_t * down * amps[..., :-1]


def kraus_apply(state: FockVector, u: int, theta: float) -> FockVector:
    """Detect one photon with outcome ``u`` at interferometer phase ``theta``.

    Returns the unnormalized ``(M-1)``-photon state; its squared norm is
    the conditional probability of ``u``.
    """
    if state.photons < 1:
        raise DomainError("cannot detect a photon in the vacuum state")
    if u not in (0, 1):
        raise DomainError(f"outcome must be 0 or 1, got {u!r}")
    angle = theta - u * math.pi / 2
    out = kraus_step(state.amps, math.cos(angle), math.sin(angle))
    return FockVector(state.photons - 1, out)
