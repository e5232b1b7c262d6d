#!/usr/bin/env python3
"""Export the HTTP API's OpenAPI description to docs/openapi.json."""

from __future__ import annotations

import json
import sys
from pathlib import Path

REPO = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(REPO / "src"))

from care_workbench.control_plane.http import create_app  # noqa: E402
from care_workbench.control_plane.service import Workbench  # noqa: E402


def main() -> int:
    app = create_app(Workbench(root=None), tokens=None)
    out = REPO / "docs" / "openapi.json"
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(app.openapi(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
