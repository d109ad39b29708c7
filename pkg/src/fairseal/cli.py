"""Command-line front end: audit, correct, simulate, bootstrap.

Every command writes a manifest beside its outputs recording the command
name, resolved input paths, and every parameter value (defaults included),
so a run can be replayed bit for bit.  Exit codes are stable: 0 success,
1 input or usage error, 2 assumption- or report-level failure, 3 infeasible
correction.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import __version__
from .bounds import check_assumption, worst_case_bounds
from .correction import (
    MODE_OPTIMAL,
    MODE_PROXY,
    LossModel,
    apply_policy,
    expected_loss,
    run_correction,
)
from .errors import (
    AllReplicatesDroppedError,
    AssumptionViolatedError,
    CalibrationFailedError,
    FairsealError,
    InfeasibleError,
)
from .estimation import (
    profile_from_rates,
    proxy_statistics,
    read_predictions_csv,
    read_profile,
    tabulate,
    write_predictions_csv,
)
from .evaluation import METHOD_ORDER, BootstrapConfig, bootstrap_metrics, compare_methods
from .synthetic import REGIMES, run_regime_experiment

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_REPORT = 2
EXIT_INFEASIBLE = 3

_MODE_NAMES = {"optimal": MODE_OPTIMAL, "proxy-fair": MODE_PROXY}


class _Parser(argparse.ArgumentParser):
    """argparse parser whose usage errors exit with code 1, not 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _atomic_write_text(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def _atomic_write_json(path: Path, payload) -> None:
    _atomic_write_text(path, json.dumps(payload, indent=2) + "\n")


def _write_manifest(path: Path, command: str, params: dict) -> None:
    manifest = {
        "artifact": "fairseal",
        "artifact_version": __version__,
        "command": command,
        "parameters": params,
    }
    _atomic_write_json(path, manifest)


def manifest_argv(path: str | Path) -> list[str]:
    """Reconstruct the argv that reproduces a manifest's run."""
    manifest = json.loads(Path(path).read_text(encoding="utf-8"))
    argv = [manifest["command"]]
    for key, value in manifest["parameters"].items():
        if value is None:
            continue
        flag = "--" + key.replace("_", "-")
        if isinstance(value, bool):
            if value:
                argv.append(flag)
        else:
            argv.extend([flag, str(value)])
    return argv


def _load_profile(args):
    if args.profile is not None:
        if args.u0 is not None or args.u1 is not None:
            raise FairsealError("give either --profile or --u0/--u1, not both")
        return read_profile(args.profile)
    if args.u0 is None or args.u1 is None:
        raise FairsealError("an error profile is required: --profile FILE or both --u0 and --u1")
    return profile_from_rates(args.u0, args.u1)


def _load_loss(args) -> LossModel:
    if args.loss == "youden":
        return LossModel.youden()
    if args.penalty0 is None or args.penalty1 is None:
        raise FairsealError("--loss custom requires --penalty0 and --penalty1")
    return LossModel.custom(args.penalty0, args.penalty1)


def _profile_params(args) -> dict:
    return {
        "input": str(Path(args.input).resolve()),
        "profile": None if args.profile is None else str(Path(args.profile).resolve()),
        "u0": args.u0,
        "u1": args.u1,
        "pseudo_count": args.pseudo_count,
    }


def _cmd_audit(args) -> int:
    out = Path(args.out)
    params = _profile_params(args) | {"out": str(out.resolve()), "pretty": args.pretty}
    profile = _load_profile(args)
    records = read_predictions_csv(args.input)
    stats = proxy_statistics(tabulate(records), args.pseudo_count)
    report = check_assumption(stats, profile)
    payload = {"assumption": report.to_dict(), "bounds": None}
    code = EXIT_OK
    if report.passes:
        payload["bounds"] = worst_case_bounds(stats, profile).to_dict()
    else:
        code = EXIT_REPORT
        print("assumption check failed; no bound can be certified", file=sys.stderr)
    _atomic_write_json(out, payload)
    _write_manifest(out.with_name(out.name + ".manifest.json"), "audit", params)
    if args.pretty:
        _print_audit(payload)
    return code


def _print_audit(payload: dict) -> None:
    margins = payload["assumption"]["margin"]
    print(f"assumption passes: {payload['assumption']['passes']}")
    for i in (0, 1):
        for j in (0, 1):
            print(f"  margin[a_hat={i}][y={j}] = {margins[i][j]:.4f}")
    if payload["bounds"]:
        print(f"worst-case bound on TPR gap: {payload['bounds']['b_tpr']:.4f}")
        print(f"worst-case bound on FPR gap: {payload['bounds']['b_fpr']:.4f}")


def _cmd_correct(args) -> int:
    policy_out = Path(args.policy_out)
    predictions_out = Path(args.predictions_out)
    report_out = Path(args.report_out)
    params = _profile_params(args) | {
        "mode": args.mode,
        "loss": args.loss,
        "penalty0": args.penalty0,
        "penalty1": args.penalty1,
        "seed": args.seed,
        "no_boxes": args.no_boxes,
        "policy_out": str(policy_out.resolve()),
        "predictions_out": str(predictions_out.resolve()),
        "report_out": str(report_out.resolve()),
        "pretty": args.pretty,
    }
    profile = _load_profile(args)
    loss = _load_loss(args)
    records = read_predictions_csv(args.input)
    stats = proxy_statistics(tabulate(records), args.pseudo_count)
    report = check_assumption(stats, profile)

    bounds_before = worst_case_bounds(stats, profile).to_dict() if report.passes else None
    result = run_correction(stats, profile, loss, _MODE_NAMES[args.mode], include_boxes=not args.no_boxes)
    corrected_records = apply_policy(result.policy, records, args.seed)

    tmp = predictions_out.with_name(predictions_out.name + ".tmp")
    write_predictions_csv(tmp, corrected_records)
    os.replace(tmp, predictions_out)
    _atomic_write_json(policy_out, result.policy.to_dict())
    payload = result.to_dict() | {
        "assumption_before": report.to_dict(),
        "bounds_before": bounds_before,
        "expected_loss_before": _loss_or_none(stats, loss),
    }
    _atomic_write_json(report_out, payload)
    _write_manifest(report_out.with_name(report_out.name + ".manifest.json"), "correct", params)
    if args.pretty:
        print(f"policy: {result.policy.to_dict()}")
        if result.bounds_after is not None:
            print(f"certified b_tpr after: {result.bounds_after.b_tpr:.4f}")
            print(f"certified b_fpr after: {result.bounds_after.b_fpr:.4f}")
    return EXIT_OK


def _loss_or_none(stats, loss):
    try:
        return expected_loss(stats, loss)
    except FairsealError:
        return None


def _cmd_simulate(args) -> int:
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    params = {
        "regime": args.regime,
        "n_classifiers": args.n_classifiers,
        "n_samples": args.n_samples,
        "seed": args.seed,
        "target_u": args.target_u,
        "out_dir": str(out_dir.resolve()),
    }
    if args.n_classifiers < 1 or args.n_samples < 1:
        raise FairsealError("sizes must be positive")
    result = run_regime_experiment(
        args.regime,
        args.n_classifiers,
        args.n_samples,
        args.seed,
        target_u=args.target_u,
        workers=_workers(),
    )
    results_path = out_dir / "results.csv"
    tmp = results_path.with_name(results_path.name + ".tmp")
    result.to_csv(tmp)
    os.replace(tmp, results_path)
    _atomic_write_json(out_dir / "profile.json", result.sidecar_dict())
    _write_manifest(out_dir / "manifest.json", "simulate", params)
    return EXIT_OK


def _cmd_bootstrap(args) -> int:
    out = Path(args.out)
    report_out = Path(args.report_out) if args.report_out else out.with_name(out.stem + ".comparison.json")
    methods = tuple(args.methods.split(","))
    params = _profile_params(args) | {
        "replicates": args.replicates,
        "seed": args.seed,
        "methods": args.methods,
        "no_resample": args.no_resample,
        "out": str(out.resolve()),
        "report_out": str(report_out.resolve()),
    }
    if args.replicates < 1:
        raise FairsealError("--replicates must be >= 1")
    profile = _load_profile(args)
    records = read_predictions_csv(args.input)
    counts = tabulate(records)
    config = BootstrapConfig(
        replicates=args.replicates,
        seed=args.seed,
        methods=methods,
        resample=not args.no_resample,
        pseudo_count=args.pseudo_count,
    )
    summary = bootstrap_metrics(counts, profile, config)
    tmp = out.with_name(out.name + ".tmp")
    summary.to_csv(tmp)
    os.replace(tmp, out)
    if len(methods) >= 2:
        comparison = compare_methods(summary)
        payload = comparison.to_dict()
    else:
        payload = {"note": "comparison requires at least two methods"}
    payload["dropped_assumption"] = summary.dropped_assumption
    payload["dropped_stratum"] = summary.dropped_stratum
    payload["surviving"] = summary.surviving
    _atomic_write_json(report_out, payload)
    _write_manifest(out.with_name(out.name + ".manifest.json"), "bootstrap", params)
    return EXIT_OK


def _workers() -> int:
    raw = os.environ.get("FAIRSEAL_THREADS", "")
    if not raw:
        return 1
    try:
        value = int(raw)
    except ValueError:
        raise FairsealError(f"FAIRSEAL_THREADS must be an integer, got {raw!r}") from None
    if value < 1:
        raise FairsealError("FAIRSEAL_THREADS must be >= 1")
    return value


def _add_profile_flags(parser) -> None:
    parser.add_argument("--input", required=True, help="prediction table CSV")
    parser.add_argument("--profile", help="error-profile JSON with keys u0, u1")
    parser.add_argument("--u0", type=float, help="P(A_hat=0, A=1)")
    parser.add_argument("--u1", type=float, help="P(A_hat=1, A=0)")
    parser.add_argument("--pseudo-count", type=float, default=0.0, help="optional smoothing mass per cell")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fairseal", description=__doc__)
    parser.add_argument("--version", action="version", version=f"fairseal {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    audit = sub.add_parser("audit", help="certify worst-case violation bounds")
    _add_profile_flags(audit)
    audit.add_argument("--out", required=True, help="bound report JSON path")
    audit.add_argument("--pretty", action="store_true", help="also print a rounded summary")
    audit.set_defaults(func=_cmd_audit)

    correct = sub.add_parser("correct", help="post-process predictions for minimal bounds")
    _add_profile_flags(correct)
    correct.add_argument("--mode", choices=sorted(_MODE_NAMES), required=True)
    correct.add_argument("--loss", choices=["youden", "custom"], default="youden")
    correct.add_argument("--penalty0", type=float, help="custom cost of a false positive")
    correct.add_argument("--penalty1", type=float, help="custom cost of a false negative")
    correct.add_argument("--seed", type=int, default=0)
    correct.add_argument("--no-boxes", action="store_true", help="drop the admissibility boxes (proxy baseline only)")
    correct.add_argument("--policy-out", required=True)
    correct.add_argument("--predictions-out", required=True)
    correct.add_argument("--report-out", required=True)
    correct.add_argument("--pretty", action="store_true")
    correct.set_defaults(func=_cmd_correct)

    simulate = sub.add_parser("simulate", help="run a synthetic regime experiment")
    simulate.add_argument("--regime", choices=REGIMES, required=True)
    simulate.add_argument("--n-classifiers", type=int, required=True)
    simulate.add_argument("--n-samples", type=int, required=True)
    simulate.add_argument("--seed", type=int, default=0)
    simulate.add_argument("--target-u", type=float, default=0.04)
    simulate.add_argument("--out-dir", required=True)
    simulate.set_defaults(func=_cmd_simulate)

    bootstrap = sub.add_parser("bootstrap", help="bootstrap metric summaries over a table")
    _add_profile_flags(bootstrap)
    bootstrap.add_argument("--replicates", type=int, default=500)
    bootstrap.add_argument("--seed", type=int, default=0)
    bootstrap.add_argument("--methods", default=",".join(METHOD_ORDER))
    bootstrap.add_argument("--no-resample", action="store_true", help="evaluate the table as-is each replicate")
    bootstrap.add_argument("--out", required=True, help="summary CSV path")
    bootstrap.add_argument("--report-out", help="comparison report JSON (default: alongside --out)")
    bootstrap.set_defaults(func=_cmd_bootstrap)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except AssumptionViolatedError as exc:
        print(f"fairseal: {exc}", file=sys.stderr)
        return EXIT_REPORT
    except AllReplicatesDroppedError as exc:
        print(f"fairseal: {exc}", file=sys.stderr)
        return EXIT_REPORT
    except InfeasibleError as exc:
        print(f"fairseal: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except CalibrationFailedError as exc:
        print(f"fairseal: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (FairsealError, OSError, ValueError) as exc:
        print(f"fairseal: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
