from pathlib import Path
import py_compile
import sys


PROJECT_ROOT = Path(__file__).resolve().parents[1]
PACKAGES = ["generator_means", "inequality_engine", "utils", "scripts"]
ENTRY_POINTS = ["main_file.py", "run.py"]


def sources() -> list:
    files = [PROJECT_ROOT / name for name in ENTRY_POINTS]
    for package in PACKAGES:
        files.extend(sorted((PROJECT_ROOT / package).rglob("*.py")))
    return files


def main() -> None:
    failed = []
    for path in sources():
        try:
            py_compile.compile(str(path), doraise=True)
        except py_compile.PyCompileError as e:
            failed.append(path.relative_to(PROJECT_ROOT))
            print(e.msg, file=sys.stderr)

    if failed:
        raise SystemExit(f"compile smoke failed: {', '.join(map(str, failed))}")

    print(f"compile smoke passed ({len(sources())} files)")


if __name__ == "__main__":
    main()
