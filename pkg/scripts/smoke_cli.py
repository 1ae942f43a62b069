from contextlib import redirect_stdout
from pathlib import Path
import asyncio
import io
import json
import sys
import tempfile

PROJECT_ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(PROJECT_ROOT))

from main_file import main_run  # noqa: E402

PROBLEM_FILES = PROJECT_ROOT / "problem_files"


async def run_cli(*argv: str):
    """Exit code and captured stdout of one CLI invocation."""
    buffer = io.StringIO()
    with redirect_stdout(buffer):
        code = await main_run(list(argv))
    return code, buffer.getvalue()


async def check_eval() -> None:
    code, out = await run_cli("eval", "--f", str(PROBLEM_FILES / "identity.json"), "--x", "1,2,3")
    assert code == 0 and json.loads(out) == {"command": "eval", "mean": 2.0}, out

    code, out = await run_cli("eval", "--f", str(PROBLEM_FILES / "identity.json"), "--x", "1,2", "--weights", "1,3")
    assert code == 0 and abs(json.loads(out)["mean"] - 1.75) < 1e-15

    code, out = await run_cli("eval", str(PROBLEM_FILES / "minkowski_p05.json"), "--points", "4,1;1,4")
    report = json.loads(out)
    assert code == 0 and abs(report["lhs"] - 5.0) < 1e-12 and abs(report["rhs"] - 4.5) < 1e-12
    assert abs(report["gap"] - 0.5) < 1e-12

    code, out = await run_cli("eval", str(PROBLEM_FILES / "identity_chain.json"), "--psi", "1,2", "--format", "text")
    assert code == 0 and out == "command: eval\npsi: 3.0\n", out


async def check_input_errors(workdir: Path) -> None:
    code, out = await run_cli("check", str(PROBLEM_FILES / "minkowski_p2.json"), "--bogus")
    assert code == 64 and json.loads(out)["error"]["field"] == "argv", out

    code, out = await run_cli("falsify", str(PROBLEM_FILES / "minkowski_p2.json"), "--tolerance", "violation_tolerance=0.5")
    assert code == 64 and json.loads(out)["error"]["field"] == "violation_tolerance", out

    code, out = await run_cli("falsify", str(PROBLEM_FILES / "minkowski_p2.json"), "--tolerance", "e1_tolerance=0.5")
    assert code == 64 and json.loads(out)["error"]["field"] == "e1_tolerance", out

    code, out = await run_cli("falsify", str(PROBLEM_FILES / "minkowski_p05.json"), "--seed", "3", "--budget", "2000",
                              "--tolerance", "e1_tolerance=1e-8")
    assert code == 1 and json.loads(out)["status"] == "fails", out

    code, out = await run_cli("falsify", str(PROBLEM_FILES / "minkowski_p2.json"), "--budget", "0")
    assert code == 64, out

    broken = workdir / "broken.json"
    broken.write_text('{"k": 2,\n  "generators": [\n')
    code, out = await run_cli("check", str(broken))
    error = json.loads(out)["error"]
    assert code == 64 and error["type"] == "ProblemFormatError" and error["line"] >= 2, error

    code, out = await run_cli("check", str(workdir / "missing.json"))
    assert code == 64 and "error" in json.loads(out)

    falling = workdir / "falling.json"
    falling.write_text(json.dumps({
        "domain": [-1, 1],
        "pieces": [{"kind": "affine", "params": {"slope": 1}}, {"kind": "affine", "params": {"slope": 1, "intercept": -5}}],
        "breakpoints": [0],
        "jump_values": [0],
    }))
    code, out = await run_cli("eval", "--f", str(falling), "--x", "0.5")
    error = json.loads(out)["error"]
    assert code == 64 and error["type"] == "GeneratorInvariantError" and "report" in error, error


async def check_reports(workdir: Path) -> None:
    first, second = workdir / "falsify_a.json", workdir / "falsify_b.json"
    for out_path in (first, second):
        code, _ = await run_cli("falsify", str(PROBLEM_FILES / "minkowski_p05.json"),
                                "--seed", "3", "--budget", "2000", "--out", str(out_path))
        assert code == 1
    assert first.read_bytes() == second.read_bytes()
    stored = json.loads(first.read_text())
    assert stored["status"] == "fails" and stored["counterexample"]["violation"] >= 0.1

    code, out = await run_cli("report", str(first))
    report = json.loads(out)
    assert code == 1 and report["status"] == "fails" and report["confirmed"], report

    # A tampered violation no longer replays
    stored["counterexample"]["violation"] += 1.0
    tampered = workdir / "tampered.json"
    tampered.write_text(json.dumps(stored))
    code, out = await run_cli("report", str(tampered))
    assert code == 2 and json.loads(out)["status"] == "undecided"

    certified = workdir / "certify.json"
    code, _ = await run_cli("certify", str(PROBLEM_FILES / "identity_chain.json"),
                            "--seed", "5", "--grid", "2", "--sample", "200", "--out", str(certified))
    assert code == 0
    assert json.loads(certified.read_text())["status"] == "certified"
    code, out = await run_cli("report", str(certified))
    report = json.loads(out)
    assert code == 0 and report["confirmed"] and report["replayed"]["certificate"]["worst_residual"] <= 1e-6, report


async def run_smoke() -> None:
    await check_eval()
    with tempfile.TemporaryDirectory() as tmp:
        workdir = Path(tmp)
        await check_input_errors(workdir)
        await check_reports(workdir)


def main() -> None:
    asyncio.run(run_smoke())
    print("cli smoke passed")


if __name__ == "__main__":
    main()
