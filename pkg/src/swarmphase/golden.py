"""Published optimizer settings and best policies, shipped as CSV."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path

from .errors import DomainError
from .policy import Policy

__all__ = ["GoldenPolicy", "SettingsRow", "table_s1", "table_s2", "load_policies"]

S2_COLUMNS = ["n", *(f"d_phi_{i}" for i in range(1, 14)), "d_varphi", "v_phi"]


@dataclass(frozen=True)
class GoldenPolicy:
    n: int
    policy: Policy
    v_phi: float


@dataclass(frozen=True)
class SettingsRow:
    n: int
    xi: int
    steps: int
    phi1: float
    phi2: float
    omega: float
    nu_max: float
    r: int
    success_fraction: float


def _read(name: str) -> str:
    return (resources.files(__package__) / "data" / name).read_text()


def _parse_policies(text: str, source: str) -> dict[int, GoldenPolicy]:
    out = {}
    for line_no, row in enumerate(csv.DictReader(io.StringIO(text)), start=2):
        try:
            n = int(row["n"])
            feedback = [float(row[f"d_phi_{i}"]) for i in range(1, n)]
            policy = Policy(feedback + [float(row["d_varphi"])])
            v_phi = float(row["v_phi"]) if row.get("v_phi") not in (None, "") else float("nan")
        except (KeyError, TypeError, ValueError) as exc:
            raise DomainError(f"{source}:{line_no}: malformed policy row ({exc})") from exc
        out[n] = GoldenPolicy(n, policy, v_phi)
    return out


@lru_cache(maxsize=None)
def table_s2() -> dict[int, GoldenPolicy]:
    """Best published policies for N = 4..14, keyed by N."""
    return _parse_policies(_read("table_s2.csv"), "table_s2.csv")


def load_policies(path) -> dict[int, GoldenPolicy]:
    """Read a policy file with the same columns as the shipped table."""
    path = Path(path)
    return _parse_policies(path.read_text(), str(path))


@lru_cache(maxsize=None)
def table_s1() -> dict[int, SettingsRow]:
    """Published optimizer settings for N = 4..14, keyed by N."""
    out = {}
    for row in csv.DictReader(io.StringIO(_read("table_s1.csv"))):
        n = int(row["n"])
        out[n] = SettingsRow(
            n=n,
            xi=int(row["xi"]),
            steps=int(row["steps"]),
            phi1=float(row["phi1"]),
            phi2=float(row["phi2"]),
            omega=float(row["omega"]),
            nu_max=float(row["nu_max"]),
            r=int(row["r"]),
            success_fraction=float(row["lambda"]),
        )
    return out
