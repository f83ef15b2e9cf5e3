"""Feedback policies and simulation of the adaptive measurement record.

A policy of length ``N`` holds ``N - 1`` feedback increments followed by one
estimate increment. After detection ``k`` with outcome ``u_k`` the feedback
phase moves by ``-(-1)**u_k * dPhi_k``; after the final detection the estimate
increment takes the place of ``dPhi_N``, so the estimate is simply the phase
the feedback sequence has reached.

When photons are lost only ``k < N`` bits arrive. By default the estimate is
then the feedback phase after the last detected bit (``truncated="feedback"``);
``truncated="final"`` instead resolves that bit with the estimate increment.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .errors import DomainError, ResourceError
from .fock import FockVector, kraus_apply

__all__ = [
    "TWO_PI",
    "ENUMERATION_CAP",
    "Policy",
    "MeasurementRecord",
    "EstimationContext",
    "Branch",
    "feedback_phase",
    "estimate",
    "TRUNCATED_RULES",
    "record_probability",
    "outcome_tree",
]

TWO_PI = 2 * math.pi
ENUMERATION_CAP = 16


def wrap(angle: float) -> float:
    """Reduce an angle into [0, 2pi)."""
    out = math.fmod(angle, TWO_PI)
    if out < 0:
        out += TWO_PI
    # fmod of a tiny negative number can round up to exactly 2pi
    return 0.0 if out >= TWO_PI else out


@dataclass(frozen=True, eq=False)
class Policy:
    """Increment vector ``(dPhi_1, ..., dPhi_{N-1}, dphi)`` in radians, stored mod 2pi."""

    increments: np.ndarray

    def __post_init__(self):
        inc = np.array(self.increments, dtype=float).ravel()
        if inc.size < 1:
            raise DomainError("a policy needs at least one increment")
        if not np.all(np.isfinite(inc)):
            raise DomainError(f"policy increments must be finite, got {inc.tolist()}")
        inc = np.array([wrap(x) for x in inc])
        inc.setflags(write=False)
        object.__setattr__(self, "increments", inc)

    @property
    def n(self) -> int:
        return self.increments.size

    @property
    def feedback(self) -> np.ndarray:
        return self.increments[:-1]

    @property
    def estimate_increment(self) -> float:
        return float(self.increments[-1])

    @classmethod
    def parse(cls, text: str) -> Policy:
        """Parse a comma-separated list of radians, e.g. ``"1.57,0.79,0.35"``."""
        try:
            values = [float(tok) for tok in text.split(",")]
        except ValueError as exc:
            raise DomainError(f"malformed policy string {text!r}") from exc
        return cls(values)

    def to_json(self) -> dict:
        return {"n": self.n, "increments": [float(x) for x in self.increments]}

    @classmethod
    def from_json(cls, data: dict) -> Policy:
        policy = cls(data["increments"])
        if "n" in data and int(data["n"]) != policy.n:
            raise DomainError(f"policy length {policy.n} ≠ {data['n']}")
        return policy

    def __eq__(self, other):
        if not isinstance(other, Policy):
            return NotImplemented
        return np.array_equal(self.increments, other.increments)

    __hash__ = None

    def __repr__(self):
        return f"Policy({self.increments.tolist()})"


@dataclass(frozen=True)
class MeasurementRecord:
    """Detector outcomes ``u_1 ... u_m`` in detection order."""

    bits: tuple[int, ...] = ()

    def __post_init__(self):
        bits = tuple(int(b) for b in self.bits)
        if any(b not in (0, 1) for b in bits):
            raise DomainError(f"record bits must be 0 or 1, got {bits}")
        object.__setattr__(self, "bits", bits)

    def __len__(self):
        return len(self.bits)

    def __iter__(self):
        return iter(self.bits)

    def extend(self, u: int) -> MeasurementRecord:
        return MeasurementRecord(self.bits + (u,))

    def __str__(self):
        return "".join(map(str, self.bits))


@dataclass(frozen=True)
class EstimationContext:
    """True phase and initial feedback phase, both reduced mod 2pi."""

    true_phase: float
    initial_feedback: float = 0.0

    def __post_init__(self):
        for name in ("true_phase", "initial_feedback"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise DomainError(f"{name} must be finite, got {value!r}")
            object.__setattr__(self, name, wrap(value))


def _as_record(record) -> MeasurementRecord:
    return record if isinstance(record, MeasurementRecord) else MeasurementRecord(tuple(record))


def _sign(u: int) -> float:
    return -1.0 if u else 1.0


def _raw_feedback(policy: Policy, bits: Sequence[int], initial_feedback: float) -> float:
    phase = initial_feedback
    for k, u in enumerate(bits):
        phase -= _sign(u) * policy.increments[k]
    return phase


def feedback_phase(policy: Policy, record, initial_feedback: float = 0.0) -> float:
    """Feedback phase applied after the detections in ``record``, mod 2pi."""
    record = _as_record(record)
    if len(record) > policy.n - 1:
        raise DomainError(
            f"record of length {len(record)} exceeds the {policy.n - 1} feedback steps of an N={policy.n} policy"
        )
    return wrap(_raw_feedback(policy, record.bits, initial_feedback))


TRUNCATED_RULES = ("feedback", "final")


def estimate(policy: Policy, record, initial_feedback: float = 0.0, truncated: str = "feedback") -> float:
    """Phase estimate after the detections in ``record``, mod 2pi.

    A full record ends with the estimate increment. For a shorter record
    ``truncated`` selects the increment applied to its last bit: the
    matching feedback increment (``"feedback"``) or the estimate increment
    (``"final"``).
    """
    record = _as_record(record)
    if not 1 <= len(record) <= policy.n:
        raise DomainError(f"estimate needs 1..{policy.n} bits, got {len(record)}")
    if truncated not in TRUNCATED_RULES:
        raise DomainError(f"truncated must be one of {TRUNCATED_RULES}, got {truncated!r}")
    *head, last = record.bits
    k = len(record)
    if k == policy.n or truncated == "final":
        step = policy.estimate_increment
    else:
        step = policy.increments[k - 1]
    phase = _raw_feedback(policy, head, initial_feedback)
    return wrap(phase - _sign(last) * step)


def record_probability(state: FockVector, policy: Policy, ctx: EstimationContext, record) -> float:
    """Probability of observing ``record`` for the normalized input ``state``."""
    record = _as_record(record)
    if abs(state.norm2() - 1) > 1e-9:
        raise DomainError(f"input state must be normalized, squared norm is {state.norm2()!r}")
    if len(record) > state.photons:
        raise DomainError(f"record of length {len(record)} exceeds {state.photons} photons")
    if policy.n != state.photons:
        raise DomainError(f"policy length {policy.n} ≠ {state.photons}")
    phase = ctx.initial_feedback
    for k, u in enumerate(record.bits):
        state = kraus_apply(state, u, (ctx.true_phase - phase) / 2)
        if k < policy.n - 1:
            phase -= _sign(u) * policy.increments[k]
    return min(1.0, state.norm2())


class Branch(NamedTuple):
    record: MeasurementRecord
    probability: float
    state: FockVector


def outcome_tree(
    state: FockVector, policy: Policy, ctx: EstimationContext, depth: int, cap: int = ENUMERATION_CAP
) -> list[Branch]:
    """Enumerate all ``2**depth`` measurement branches depth-first.

    Children reuse the parent's post-measurement state. Branches are
    returned in lexicographic order of their records.
    """
    if depth > cap:
        raise ResourceError(f"depth {depth} would enumerate 2**{depth} = {2**depth} branches (cap {cap})")
    if not 0 <= depth <= state.photons:
        raise DomainError(f"depth must be in 0..{state.photons}, got {depth}")
    if policy.n != state.photons:
        raise DomainError(f"policy length {policy.n} ≠ {state.photons}")

    out: list[Branch] = []

    def visit(node: FockVector, bits: tuple[int, ...], phase: float):
        if len(bits) == depth:
            out.append(Branch(MeasurementRecord(bits), node.norm2(), node))
            return
        theta = (ctx.true_phase - phase) / 2
        k = len(bits)
        for u in (0, 1):
            child = kraus_apply(node, u, theta)
            next_phase = phase - _sign(u) * policy.increments[k] if k < policy.n - 1 else phase
            visit(child, bits + (u,), next_phase)

    visit(state, (), ctx.initial_feedback)
    return out
