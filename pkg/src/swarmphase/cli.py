"""Command-line front end.

Commands print JSON to standard output; files are CSV with a header row
(floats written with 17 significant digits) or JSON. Errors go to standard
error with a nonzero exit code.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path

from . import __version__
from .errors import DomainError, FitnessError, ResourceError
from .fitness import LossModel, SharpnessReport, fit_power_law, sharpness, sharpness_with_loss
from .fock import FockVector, min_uncertainty_state
from .golden import load_policies, table_s2
from .policy import Policy
from .swarm import RunResult, SwarmConfig, optimize, table_s1_config

REPORT_HEADER = ["n", "eta", "sharpness", "holevo_variance"]


class CliError(Exception):
    pass


def fmt_float(x: float) -> str:
    return "inf" if math.isinf(x) else f"{x:.17g}"


def dump_json(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def write_text(path, text: str):
    try:
        Path(path).write_text(text)
    except OSError as exc:
        raise CliError(f"cannot write {path}: {exc.strerror or exc}") from exc


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def parse_photon_range(text: str) -> list[int]:
    """Accept ``"4..14"``, ``"4-14"``, ``"4,6,8"`` or a single ``"7"``."""
    try:
        for sep in ("..", "-"):
            if sep in text:
                lo, hi = (int(t) for t in text.split(sep))
                return list(range(lo, hi + 1))
        return [int(t) for t in text.split(",")]
    except ValueError as exc:
        raise CliError(f"malformed photon range {text!r}") from exc


def parse_floats(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",")]
    except ValueError as exc:
        raise CliError(f"malformed number list {text!r}") from exc


# ---------------------------------------------------------------- evaluate


def _policy_from_args(args) -> Policy:
    if (args.policy is None) == (args.golden_row is None):
        raise CliError("give exactly one of --policy or --golden-row")
    if args.policy is not None:
        policy = Policy.parse(args.policy)
    else:
        rows = table_s2()
        if args.golden_row not in rows:
            raise CliError(f"no golden policy for N={args.golden_row}; table covers N={min(rows)}..{max(rows)}")
        policy = rows[args.golden_row].policy
    if policy.n != args.photons:
        raise CliError(f"policy length {policy.n} ≠ {args.photons}")
    return policy


def cmd_evaluate(args) -> str:
    policy = _policy_from_args(args)
    if args.loss is None:
        report = sharpness(policy, args.photons)
    else:
        report = sharpness_with_loss(policy, args.photons, LossModel(args.loss))
    if args.format == "csv":
        return csv_text(REPORT_HEADER, [report.csv_row()])
    return dump_json(report.to_json())


# ---------------------------------------------------------------- optimize


@dataclass
class RunBatchSummary:
    n: int
    runs: int
    success_threshold: float
    success_fraction: float
    best_overall: RunResult

    def to_json(self) -> dict:
        best = self.best_overall
        return {
            "n": self.n,
            "runs": self.runs,
            "success_threshold": self.success_threshold,
            "success_fraction": self.success_fraction,
            "best_overall": {
                "seed": best.seed,
                "best_sharpness": best.best_sharpness,
                "best_variance": None if math.isinf(best.best_variance) else best.best_variance,
                "policy": best.best_policy.to_json(),
                "config": best.config.to_json(),
            },
        }


def policy_columns(n: int) -> list[str]:
    return [f"d_phi_{i}" for i in range(1, n)] + ["d_varphi"]


def default_threshold(n: int) -> float:
    """Published variance rounded up to three decimals."""
    rows = table_s2()
    if n not in rows:
        raise CliError(f"no published variance for N={n}; pass --threshold")
    return math.ceil(rows[n].v_phi * 1000) / 1000


def run_batch(n: int, config: SwarmConfig, seed: int, runs: int, threshold: float, threads: int = 1):
    results = [optimize(n, config, seed + k, threads=threads) for k in range(runs)]
    successes = sum(r.best_variance <= threshold for r in results)
    best = max(results, key=lambda r: r.best_sharpness)
    return results, RunBatchSummary(n, runs, threshold, successes / runs, best)


def cmd_optimize(args) -> str:
    if args.runs < 1:
        raise CliError(f"--runs must be at least 1, got {args.runs}")
    if args.table_s1 == (args.config is not None):
        raise CliError("give exactly one of --table-s1 or --config")
    if args.table_s1:
        config = table_s1_config(args.photons)
    else:
        try:
            config = SwarmConfig.from_json(args.config, dim=args.photons)
        except (OSError, json.JSONDecodeError) as exc:
            raise CliError(f"cannot read config {args.config}: {exc}") from exc
    if args.steps is not None:
        config = SwarmConfig(**{**config.to_json(), "steps": args.steps})
    threshold = args.threshold if args.threshold is not None else default_threshold(args.photons)

    results, summary = run_batch(args.photons, config, args.seed, args.runs, threshold, args.threads)
    rows = [
        [str(args.photons), str(r.seed), fmt_float(r.best_sharpness), fmt_float(r.best_variance)]
        + [fmt_float(x) for x in r.best_policy.increments]
        for r in results
    ]
    header = ["n", "seed", "best_sharpness", "best_variance", *policy_columns(args.photons)]
    text = dump_json(summary.to_json())
    if args.out is not None:
        write_text(args.out, csv_text(header, rows))
        write_text(Path(args.out).with_suffix(".summary.json"), text)
    return text


# ---------------------------------------------------------------- loss sweep


def cmd_loss_sweep(args) -> str:
    try:
        golden = load_policies(args.golden) if args.golden else table_s2()
    except OSError as exc:
        raise CliError(f"cannot read {args.golden}: {exc.strerror or exc}") from exc
    ns = parse_photon_range(args.photons)
    etas = [LossModel(e).eta for e in parse_floats(args.loss)]
    missing = [n for n in ns if n not in golden]
    if missing:
        raise CliError(f"golden policies missing for N={', '.join(map(str, missing))}")
    rows = []
    for n in ns:
        for eta in etas:
            rows.append(sharpness_with_loss(golden[n].policy, n, eta).csv_row())
    text = csv_text(REPORT_HEADER, rows)
    if args.out is None:
        return text
    write_text(args.out, text)
    return ""


# ---------------------------------------------------------------- scaling


def read_reports(path) -> list[SharpnessReport]:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc.strerror or exc}") from exc
    out = []
    for line_no, row in enumerate(csv.DictReader(io.StringIO(text)), start=2):
        try:
            out.append(
                SharpnessReport(
                    float(row["sharpness"]), float(row["holevo_variance"]), int(row["n"]), float(row["eta"])
                )
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise CliError(f"{path}:{line_no}: malformed row ({exc})") from exc
    return out


def cmd_scaling(args) -> str:
    reports = [r for r in read_reports(args.csv) if math.isclose(r.eta, args.loss, rel_tol=0, abs_tol=1e-12)]
    if len(reports) < 2:
        raise CliError(f"need at least 2 rows at eta={args.loss}, found {len(reports)}")
    exponent, stderr = fit_power_law([(r.n, r.holevo_variance) for r in reports])
    return dump_json(
        {
            "eta": args.loss,
            "points": len(reports),
            "n_min": min(r.n for r in reports),
            "n_max": max(r.n for r in reports),
            "exponent": exponent,
            "stderr": stderr,
        }
    )


# ---------------------------------------------------------------- state


def cmd_state(args) -> str:
    text = dump_json(min_uncertainty_state(args.photons).to_json())
    if args.out is None:
        return text
    write_text(args.out, text)
    return ""


def read_state(path) -> FockVector:
    return FockVector.from_json(json.loads(Path(path).read_text()))


# ---------------------------------------------------------------- wiring


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="swarmphase", description="Adaptive phase estimation policies: evaluation and swarm optimization."
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("evaluate", help="sharpness and Holevo variance of one policy")
    p.add_argument("--photons", type=int, required=True)
    p.add_argument("--policy", help="comma-separated increments in radians")
    p.add_argument("--golden-row", type=int, help="use the published policy for this N")
    p.add_argument("--loss", type=float, help="per-photon loss rate in [0, 1]")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("optimize", help="seeded swarm optimization runs")
    p.add_argument("--photons", type=int, required=True)
    p.add_argument("--table-s1", action="store_true", help="use the published settings for this N")
    p.add_argument("--config", help="JSON file with omega, phi1, phi2, xi, nu_max, r, steps")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--runs", type=int, default=1)
    p.add_argument("--steps", type=int, help="override the number of rounds")
    p.add_argument("--threshold", type=float, help="success variance (default: published value, rounded up)")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", help="CSV of per-run results; the summary goes next to it")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("loss-sweep", help="variance of golden policies under photon loss")
    p.add_argument("--golden", help="policy CSV (default: the shipped table)")
    p.add_argument("--loss", required=True, help="comma-separated loss rates")
    p.add_argument("--photons", default="4..14", help="photon range, e.g. 4..14")
    p.add_argument("--out")
    p.set_defaults(func=cmd_loss_sweep)

    p = sub.add_parser("scaling", help="power-law exponent of variance versus N")
    p.add_argument("csv", help="CSV written by loss-sweep")
    p.add_argument("--loss", type=float, default=0.0, help="loss rate to select")
    p.set_defaults(func=cmd_scaling)

    p = sub.add_parser("state", help="dump the minimum-uncertainty input state")
    p.add_argument("--photons", type=int, required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_state)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        text = args.func(args)
    except (CliError, DomainError, ResourceError, FitnessError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    sys.stdout.write(text)
    return 0
