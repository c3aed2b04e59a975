"""Regenerate the structured-report golden files used by tests/test_cli.py.

Run after an intentional change to a report schema or to seeded inputs:

    python3 scripts/regen_golden.py
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "tests"))

from cli_cases import CASES, GOLDEN_DIR, render_case  # noqa: E402


def main() -> None:
    GOLDEN_DIR.mkdir(exist_ok=True)
    for name in CASES:
        doc = render_case(name)
        (GOLDEN_DIR / f"{name}.json").write_text(json.dumps(doc, indent=1) + "\n")
        print(f"{name}: exit {doc['exit']}")


if __name__ == "__main__":
    main()
