"""Exact sharpness and Holevo variance of feedback policies.

Every record probability is a trigonometric polynomial of degree at most
``N`` in the true phase, so the frequency-one Fourier coefficient needed for
the flat-prior average is recovered exactly by a discrete Fourier sum over
``Q >= 2N + 2`` equally spaced phases (default ``Q = 4N``).
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ResourceError
from .fock import min_uncertainty_state
from .policy import ENUMERATION_CAP, TRUNCATED_RULES, Policy

__all__ = [
    "SharpnessReport",
    "LossModel",
    "branch_sums",
    "batch_sharpness",
    "sharpness",
    "sharpness_with_loss",
    "binomial_weight",
    "fit_power_law",
    "PolicyFitness",
]

# S below this is quadrature round-off around an exact zero
_ZERO_SHARPNESS = 1e-12
# complex entries per chunk of the breadth-first sweep
_CHUNK_BUDGET = 1 << 21


@dataclass(frozen=True)
class SharpnessReport:
    sharpness: float
    holevo_variance: float
    n: int | None = None
    eta: float = 0.0

    @classmethod
    def from_sharpness(cls, s: float, n: int | None = None, eta: float = 0.0) -> SharpnessReport:
        s = float(s)
        if s < _ZERO_SHARPNESS:
            return cls(0.0, math.inf, n, eta)
        s = min(s, 1.0)
        return cls(s, s**-2 - 1, n, eta)

    def to_json(self) -> dict:
        v = self.holevo_variance
        return {
            "n": self.n,
            "eta": self.eta,
            "sharpness": self.sharpness,
            "holevo_variance": None if math.isinf(v) else v,
        }

    def csv_row(self) -> list[str]:
        return [str(self.n), _fmt(self.eta), _fmt(self.sharpness), _fmt(self.holevo_variance)]


def _fmt(x: float) -> str:
    return "inf" if math.isinf(x) else f"{x:.17g}"


@dataclass(frozen=True)
class LossModel:
    """Independent per-photon loss with probability ``eta``."""

    eta: float

    def __post_init__(self):
        if not (0.0 <= float(self.eta) <= 1.0):
            raise DomainError(f"loss rate must lie in [0, 1], got {self.eta!r}")
        object.__setattr__(self, "eta", float(self.eta))


def binomial_weight(k: int, n: int, eta: float) -> float:
    """Probability that exactly ``k`` of ``n`` photons are detected."""
    if not 0 <= k <= n:
        raise DomainError(f"k must be in 0..{n}, got {k}")
    if not 0.0 <= eta <= 1.0:
        raise DomainError(f"loss rate must lie in [0, 1], got {eta!r}")
    return math.comb(n, k) * eta ** (n - k) * (1 - eta) ** k


def _check_samples(n: int, n_samples: int | None) -> int:
    q = 4 * n if n_samples is None else int(n_samples)
    if q < 2 * n + 2:
        raise DomainError(f"need at least {2 * n + 2} phase samples for N={n}, got {q}")
    return q


def _sweep(
    increments: np.ndarray, q: int, initial_feedback: float, truncated: str, final_only: bool
) -> np.ndarray:
    b, n = increments.shape
    phis = 2 * math.pi * np.arange(q) / q
    fourier = np.exp(-1j * phis) / q
    # axes: (re/im, policy, branch, photon number, phase sample); the
    # operators are real, so the two parts evolve independently
    psi = min_uncertainty_state(n).amps
    amps = np.broadcast_to(np.stack([psi.real, psi.imag])[:, None, None, :, None], (2, b, 1, n + 1, q))
    feedback = np.full((b, 1), float(initial_feedback))
    # outcome u moves a phase by -(-1)**u * increment
    step = np.array([-1.0, 1.0])
    out = np.zeros((b, n), dtype=complex)
    for m in range(n):
        photons = n - m
        r = feedback.shape[1]
        theta = (phis[None, None, :] - feedback[:, :, None]) / 2
        c = np.cos(theta)[:, :, None, :]
        s = np.sin(theta)[:, :, None, :]
        idx = np.arange(photons)
        up = amps[..., 1:, :] * np.sqrt((idx + 1) / photons)[:, None]
        down = amps[..., :-1, :] * np.sqrt((photons - idx) / photons)[:, None]
        children = np.empty((2, b, r, 2, photons, q))
        children[:, :, :, 0] = c * up - s * down
        children[:, :, :, 1] = s * up + c * down
        amps = children.reshape(2, b, 2 * r, photons, q)
        advanced = (feedback[:, :, None] + step * increments[:, m, None, None]).reshape(b, 2 * r)
        if m == n - 1 or not final_only:
            prob = np.sum(amps * amps, axis=(0, 3))
            coeff = prob @ fourier
            # the estimate after m + 1 bits is the feedback phase they lead to
            if truncated == "final" and m < n - 1:
                est = (feedback[:, :, None] + step * increments[:, -1, None, None]).reshape(b, 2 * r)
            else:
                est = advanced
            out[:, m] = np.sum(np.exp(1j * est) * coeff, axis=1)
        feedback = advanced
    return out


def branch_sums(
    increments,
    n_samples: int | None = None,
    initial_feedback: float = 0.0,
    threads: int = 1,
    truncated: str = "feedback",
    final_only: bool = False,
) -> np.ndarray:
    """Complex flat-prior phasor averages for every record length.

    ``increments`` has shape ``(B, N)`` (or ``(N,)``). Column ``k - 1`` of
    the result is the sum over length-``k`` records of
    ``exp(i * estimate) * E[P(record | phi) exp(-i phi)]``; its modulus at
    ``k = N`` is the lossless sharpness.

    Policies are processed in fixed-size chunks, so results do not depend on
    ``threads``.
    """
    inc = np.atleast_2d(np.asarray(increments, dtype=float))
    b, n = inc.shape
    if n > ENUMERATION_CAP:
        raise ResourceError(f"N={n} would enumerate 2**{n} = {2**n} records (cap {ENUMERATION_CAP})")
    q = _check_samples(n, n_samples)
    if truncated not in TRUNCATED_RULES:
        raise DomainError(f"truncated must be one of {TRUNCATED_RULES}, got {truncated!r}")
    chunk = max(1, _CHUNK_BUDGET // (q * 2**n))
    starts = range(0, b, chunk)
    work = lambda i: _sweep(inc[i : i + chunk], q, initial_feedback, truncated, final_only)  # noqa: E731
    if threads > 1 and len(starts) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(work, starts))
    else:
        parts = [work(i) for i in starts]
    return np.concatenate(parts, axis=0)


def _loss_weights(n: int, eta: float) -> np.ndarray:
    return np.array([binomial_weight(k, n, eta) for k in range(1, n + 1)])


def batch_sharpness(
    increments, eta: float | None = None, n_samples: int | None = None, threads: int = 1
) -> np.ndarray:
    """Sharpness of each row of ``increments``; photon loss if ``eta`` is given."""
    sums = branch_sums(increments, n_samples, threads=threads, final_only=eta is None)
    if eta is None:
        s = np.abs(sums[:, -1])
    else:
        s = np.abs(sums @ _loss_weights(sums.shape[1], LossModel(eta).eta))
    s[s < _ZERO_SHARPNESS] = 0.0
    return np.minimum(s, 1.0)


def _check_policy(policy, n: int) -> Policy:
    policy = policy if isinstance(policy, Policy) else Policy(policy)
    if policy.n != n:
        raise DomainError(f"policy length {policy.n} ≠ {n}")
    return policy


def sharpness(
    policy, n: int, n_samples: int | None = None, initial_feedback: float = 0.0
) -> SharpnessReport:
    """Lossless sharpness and Holevo variance of ``policy`` on ``n`` photons."""
    policy = _check_policy(policy, n)
    s = abs(branch_sums(policy.increments, n_samples, initial_feedback, final_only=True)[0, -1])
    return SharpnessReport.from_sharpness(s, n, 0.0)


def sharpness_with_loss(
    policy, n: int, loss, n_samples: int | None = None, truncated: str = "feedback"
) -> SharpnessReport:
    """Sharpness when each photon is lost independently.

    Records of length ``k`` are weighted by the binomial probability of
    detecting ``k`` photons; ``k = 0`` carries no phase information and
    contributes nothing.
    """
    loss = loss if isinstance(loss, LossModel) else LossModel(loss)
    policy = _check_policy(policy, n)
    sums = branch_sums(policy.increments, n_samples, truncated=truncated)[0]
    s = abs(sums @ _loss_weights(n, loss.eta))
    return SharpnessReport.from_sharpness(s, n, loss.eta)


def fit_power_law(points) -> tuple[float, float]:
    """OLS fit of ``ln V = a + b ln N``; returns ``(b, stderr(b))``.

    With exactly two points the fit is exact and the standard error is 0.
    """
    pts = [(float(n), float(v)) for n, v in points]
    if len(pts) < 2:
        raise DomainError(f"need at least 2 points, got {len(pts)}")
    ns = [n for n, _ in pts]
    if len(set(ns)) != len(ns):
        raise DomainError("photon counts must be distinct")
    if any(not (v > 0 and math.isfinite(v)) or n <= 0 for n, v in pts):
        raise DomainError("all N and V must be positive and finite")
    x = np.log(ns)
    y = np.log([v for _, v in pts])
    xc = x - x.mean()
    sxx = xc @ xc
    slope = (xc @ (y - y.mean())) / sxx
    resid = y - y.mean() - slope * xc
    dof = len(pts) - 2
    stderr = math.sqrt((resid @ resid) / dof / sxx) if dof else 0.0
    return float(slope), float(stderr)


class PolicyFitness:
    """Batch fitness for the optimizer: maps a ``(B, N)`` position array to sharpness."""

    def __init__(self, n: int, eta: float | None = None, threads: int = 1):
        self.n = n
        self.eta = None if eta is None else LossModel(eta).eta
        self.threads = threads

    def __call__(self, positions) -> np.ndarray:
        positions = np.atleast_2d(positions)
        if positions.shape[1] != self.n:
            raise DomainError(f"policy length {positions.shape[1]} ≠ {self.n}")
        return batch_sharpness(positions, self.eta, threads=self.threads)

    def __repr__(self):
        kind = "lossless" if self.eta is None else f"loss(eta={self.eta})"
        return f"PolicyFitness(n={self.n}, {kind})"
