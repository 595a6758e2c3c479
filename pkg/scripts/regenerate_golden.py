"""Rewrite the model-space golden files used by tests/test_cli.py.

Run after an intentional change to the output schema or numerics:

    python3 scripts/regenerate_golden.py
"""

from pathlib import Path

from click.testing import CliRunner

from greenlab.cli import main

GOLDEN = Path(__file__).resolve().parents[1] / "tests" / "golden"
CASES = {
    "model_n3_k1": ["--family", "model", "--n", "3", "--k", "1.0", "--grid", "40"],
    "model_n4_k2": ["--family", "model", "--n", "4", "--k", "2.0", "--grid", "40"],
}


def main_() -> None:
    runner = CliRunner()
    for name, args in CASES.items():
        out = GOLDEN / name
        for command in ("solve", "functionals"):
            result = runner.invoke(main, [command, *args, "--out", str(out)])
            if result.exit_code != 0:
                raise SystemExit(f"{command} {name} failed: {result.output}")
        print(f"wrote {out}")


if __name__ == "__main__":
    main_()
