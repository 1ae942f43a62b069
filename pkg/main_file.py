from dotenv import load_dotenv
import os
import argparse
import logging
import numpy as np

from typing import Any, Dict, List, Optional, Sequence, Tuple

from generator_means.src.generator_loader import parse_generator
from generator_means.src.means import WeightVector, weighted_qam
from inequality_engine.engine_types import EngineSettingsDataType, RunConfigDataType
from inequality_engine.src.certify import build_certificate, certificate_from_json, recheck_certificate
from inequality_engine.src.concavity import check_concavity
from inequality_engine.src.evidence import counterexample_from_json, evaluate_inequality, replay
from inequality_engine.src.falsifier import falsify
from inequality_engine.src.problem_loader import load_problem, parse_problem
from inequality_engine.src.problems import continuity_precheck, psi_eval
from inequality_engine.verdict_manager import VerdictManager, engine_settings
from utils.errors import (
    GeneratorInvariantError,
    InternalInconsistencyError,
    ProblemFormatError,
    QamError,
    SolverError,
)
from utils.helpers import dump_json, read_json_file, write_text_file
from utils.logger import configure_logger

logger: logging.Logger = logging.getLogger("Main")

# Load .env file
load_dotenv()

EXIT_INPUT_ERROR = 64
EXIT_INTERNAL_ERROR = 70
STATUS_EXIT_CODES = {
    "holds_certified": 0, "certified": 0,
    "fails": 1, "refuted": 1,
    "undecided": 2, "none": 2,
}
REPLAY_TOLERANCE = 1e-12
CERTIFICATE_CHECK_TOLERANCE = 1e-6
CERTIFICATE_CHECK_PAIRS = 10000
TOLERANCE_KEYS = ("violation_tolerance", "certificate_tolerance", "concavity_tolerance", "hessian_tolerance",
                  "e1_tolerance")
BUDGET_KEYS = ("falsify_budget", "falsify_restarts", "hill_climb_steps", "grid_size", "sample_size",
               "cutting_plane_rounds", "concavity_pairs", "hessian_grid", "max_workers")


class CliArgumentParser(argparse.ArgumentParser):
    """argparse exits with status 2 on bad usage, which collides with 'undecided'."""
    def error(self, message: str) -> None:  # type: ignore[override]
        raise ProblemFormatError(message, "argv")


def build_parser() -> argparse.ArgumentParser:
    common = CliArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, help="random seed (default: QAM_SEED or settings.json)")
    common.add_argument("--budget", type=int, help="falsifier trial count")
    common.add_argument("--grid", type=int, help="certificate grid points per axis")
    common.add_argument("--sample", type=int, help="LP sample size per grid point")
    common.add_argument("--tolerance", action="append", default=[], metavar="NAME=VALUE",
                        help="override a tolerance from settings.json")
    common.add_argument("--format", choices=("json", "text"), default="json")
    common.add_argument("--out", help="write the report to this file instead of stdout")
    common.add_argument("--verbose", action="store_true", help="debug logging on stderr")

    parser = CliArgumentParser(prog="run.py", description="Decide inequalities between generalized quasi-arithmetic means.")
    commands = parser.add_subparsers(dest="command", required=True)

    eval_parser = commands.add_parser("eval", parents=[common], help="evaluate a mean, Psi, or both sides of an inequality")
    eval_parser.add_argument("problem", nargs="?", help="problem JSON file")
    eval_parser.add_argument("--f", dest="generator", help="generator JSON file")
    eval_parser.add_argument("--x", help="comma-separated points for the generator mean")
    eval_parser.add_argument("--weights", help="comma-separated weights")
    eval_parser.add_argument("--points", help="semicolon-separated rows of comma-separated coordinates")
    eval_parser.add_argument("--psi", help="comma-separated u for the transfer function")

    for name, text in (("check", "run every evidence channel and print a verdict"),
                       ("certify", "build an LP supporting-hyperplane certificate"),
                       ("falsify", "search for a counterexample")):
        sub = commands.add_parser(name, parents=[common], help=text)
        sub.add_argument("problem", help="problem JSON file")

    report_parser = commands.add_parser("report", parents=[common], help="replay the evidence stored in a report")
    report_parser.add_argument("problem", help="report JSON file written by check, certify or falsify")
    return parser


def _parse_numbers(text: str, field: str) -> List[float]:
    try:
        return [float(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise ProblemFormatError(f"Expected comma-separated numbers, got '{text}'", field)


def _env_int(name: str) -> Optional[int]:
    value = os.getenv(name)
    if value is None or value == "":
        return None
    try:
        return int(value)
    except ValueError:
        raise ProblemFormatError(f"{name} must be an integer, got '{value}'", name)


def build_run_config(args: argparse.Namespace) -> RunConfigDataType:
    """settings.json, then environment, then flags; budgets and tolerances validated."""
    settings: EngineSettingsDataType = dict(engine_settings)  # type: ignore[assignment]
    env_seed, env_workers = _env_int("QAM_SEED"), _env_int("QAM_MAX_WORKERS")
    if env_seed is not None:
        settings["seed"] = env_seed
    if env_workers is not None:
        settings["max_workers"] = env_workers
    if args.seed is not None:
        settings["seed"] = args.seed
    for flag, key in (("budget", "falsify_budget"), ("grid", "grid_size"), ("sample", "sample_size")):
        if getattr(args, flag) is not None:
            settings[key] = getattr(args, flag)  # type: ignore[literal-required]

    for override in args.tolerance:
        name, _, value = override.partition("=")
        name = name.strip()
        if name not in TOLERANCE_KEYS:
            raise ProblemFormatError(f"Unknown tolerance '{name}', expected one of {list(TOLERANCE_KEYS)}", "--tolerance")
        try:
            settings[name] = float(value)  # type: ignore[literal-required]
        except ValueError:
            raise ProblemFormatError(f"Tolerance {name} needs a number, got '{value}'", "--tolerance")

    for key in BUDGET_KEYS:
        if not settings[key] > 0:  # type: ignore[literal-required]
            raise ProblemFormatError(f"{key} must be positive, got {settings[key]}", key)  # type: ignore[literal-required]
    for key in TOLERANCE_KEYS:
        value = settings[key]  # type: ignore[literal-required]
        if not (0 < value <= 1e-3):
            raise ProblemFormatError(f"{key} must lie in (0, 1e-3], got {value}", key)

    return {
        "command": args.command,
        "problem_path": args.problem if hasattr(args, "problem") else None,
        "seed": settings["seed"],
        "output": args.format,
        "out_path": args.out,
        "settings": settings,
        "verbose": args.verbose,
    }


# Commands

async def run_eval(config: RunConfigDataType, args: argparse.Namespace) -> Tuple[Dict[str, Any], int]:
    weights = _parse_numbers(args.weights, "--weights") if args.weights else None
    if args.generator:
        if not args.x:
            raise ProblemFormatError("--f needs --x", "--x")
        f = parse_generator(await read_json_file(args.generator), "generator")
        x = _parse_numbers(args.x, "--x")
        w = WeightVector.of(weights) if weights else WeightVector.uniform(len(x))
        return {"command": "eval", "mean": weighted_qam(f, x, w)}, 0

    if not config["problem_path"]:
        raise ProblemFormatError("eval needs --f GENERATOR or a problem file", "problem")
    p = await load_problem(config["problem_path"])
    report: Dict[str, Any] = {"command": "eval"}
    if args.points:
        rows = [_parse_numbers(row, "--points") for row in args.points.split(";") if row.strip()]
        lhs, rhs = evaluate_inequality(p, rows, weights)
        report.update({"lhs": lhs, "rhs": rhs, "gap": lhs - rhs})
    if args.psi:
        report["psi"] = psi_eval(p, np.asarray(_parse_numbers(args.psi, "--psi")))
    if len(report) == 1:
        raise ProblemFormatError("eval on a problem needs --points or --psi", "problem")
    return report, 0


async def run_check(config: RunConfigDataType) -> Tuple[Dict[str, Any], int]:
    p = await load_problem(str(config["problem_path"]))
    verdict = await VerdictManager(config["settings"]).decide(p, seed=config["seed"])
    return dict(verdict.to_json(p), command="check"), verdict.exit_code


async def run_certify(config: RunConfigDataType) -> Tuple[Dict[str, Any], int]:
    p = await load_problem(str(config["problem_path"]))
    result = await build_certificate(p, config["settings"], seed=config["seed"])
    report = dict(result.to_json(), command="certify", problem=p.to_json())
    return report, STATUS_EXIT_CODES[result.status]


async def run_falsify(config: RunConfigDataType) -> Tuple[Dict[str, Any], int]:
    p = await load_problem(str(config["problem_path"]))
    counterexample = await falsify(p, config["settings"], seed=config["seed"], precheck=continuity_precheck(p))
    status = "fails" if counterexample else "none"
    report = {"command": "falsify", "status": status,
              "counterexample": counterexample.to_json() if counterexample else None, "problem": p.to_json()}
    return report, STATUS_EXIT_CODES[status]


async def run_report(config: RunConfigDataType) -> Tuple[Dict[str, Any], int]:
    """Replay stored evidence; the stored status is kept only if the replay confirms it."""
    data = await read_json_file(str(config["problem_path"]))
    if not isinstance(data, dict) or "problem" not in data or "status" not in data:
        raise ProblemFormatError("Report must contain 'status' and 'problem'", "report")
    p = parse_problem(data["problem"])
    status = str(data["status"])
    if status not in STATUS_EXIT_CODES:
        raise ProblemFormatError(f"Unknown report status '{status}'", "status")
    settings = config["settings"]
    evidence = data.get("evidence") or {}
    stored_counterexample = data.get("counterexample") or evidence.get("counterexample")
    stored_certificate = data.get("certificate") or evidence.get("certificate")
    replayed: Dict[str, Any] = {}
    confirmed = status in ("undecided", "none")

    if stored_counterexample:
        counterexample = counterexample_from_json(stored_counterexample, p)
        fresh = replay(p, counterexample)
        drift = abs(fresh.violation - counterexample.violation)
        replayed["counterexample"] = {"violation": fresh.violation, "drift": drift}
        confirmed = fresh.violation > settings["violation_tolerance"] and drift <= REPLAY_TOLERANCE * (1.0 + abs(counterexample.violation))
    elif stored_certificate:
        certificate = certificate_from_json(stored_certificate, p)
        worst = recheck_certificate(p, certificate, np.random.default_rng(config["seed"]), CERTIFICATE_CHECK_PAIRS)
        replayed["certificate"] = {"worst_residual": worst}
        confirmed = worst <= CERTIFICATE_CHECK_TOLERANCE
    elif evidence.get("concavity"):
        concavity = check_concavity(p, settings, np.random.default_rng(config["seed"]))
        replayed["concavity"] = concavity.to_json()
        confirmed = concavity.status == "concave"

    final = status if confirmed else "undecided"
    report = {"command": "report", "status": final, "confirmed": confirmed, "replayed": replayed, "problem": p.to_json()}
    logger.info(f"Report replay: stored status {status}, confirmed {confirmed}")
    return report, STATUS_EXIT_CODES[final]


def render_text(report: Dict[str, Any]) -> str:
    lines = []
    for key in sorted(report):
        value = report[key]
        if isinstance(value, (dict, list)):
            value = dump_json(value).replace("\n", " ")
        lines.append(f"{key}: {value}")
    return "\n".join(lines) + "\n"


def _error_report(e: QamError) -> Dict[str, Any]:
    error: Dict[str, Any] = {"type": type(e).__name__, "message": str(e)}
    if isinstance(e, ProblemFormatError):
        error.update({k: v for k, v in (("field", e.field), ("line", e.line), ("column", e.column)) if v is not None})
    if isinstance(e, GeneratorInvariantError) and e.report is not None:
        error["report"] = e.report.to_json()
    return {"error": error}


async def emit(report: Dict[str, Any], output: str, out_path: Optional[str]) -> None:
    text = render_text(report) if output == "text" else dump_json(report) + "\n"
    if out_path:
        await write_text_file(out_path, text)
        logger.info(f"Report written to {out_path}")
    else:
        print(text, end="")


async def main_run(argv: Optional[Sequence[str]] = None) -> int:
    args: Optional[argparse.Namespace] = None
    try:
        args = build_parser().parse_args(argv)
        configure_logger(args.verbose, os.getenv("QAM_LOG_FILE"))
        config = build_run_config(args)
        if config["command"] == "eval":
            report, code = await run_eval(config, args)
        elif config["command"] == "check":
            report, code = await run_check(config)
        elif config["command"] == "certify":
            report, code = await run_certify(config)
        elif config["command"] == "falsify":
            report, code = await run_falsify(config)
        else:
            report, code = await run_report(config)
    except (InternalInconsistencyError, SolverError) as e:
        configure_logger(bool(args and args.verbose), os.getenv("QAM_LOG_FILE"))
        logger.error(f"Internal error: {e}")
        await emit({"error": {"type": type(e).__name__, "message": str(e)}}, "json", None)
        return EXIT_INTERNAL_ERROR
    except QamError as e:
        configure_logger(bool(args and args.verbose), os.getenv("QAM_LOG_FILE"))
        logger.error(f"Input error: {e}")
        await emit(_error_report(e), "json", None)
        return EXIT_INPUT_ERROR
    except OSError as e:
        configure_logger(bool(args and args.verbose), os.getenv("QAM_LOG_FILE"))
        logger.error(f"Could not read input: {e}")
        await emit({"error": {"type": "OSError", "message": str(e)}}, "json", None)
        return EXIT_INPUT_ERROR

    await emit(report, config["output"], config["out_path"])
    return code
