"""Execution harness for renderer scripts.

CLI contract: ``chartforge-shim SCRIPT DATA OUT`` (or
``python -m chartforge.shim``). Runs the script headless with a fixed DPI
and figure-size baseline, sys.argv rewritten to the two-positional-argument
convention, and requires the script to produce exactly the output file.

Exit codes: 0 success, 1 script exception or no output produced, 2 usage or
unreadable input paths. Script tracebacks go to stderr.
"""

from __future__ import annotations

import os
import sys
import traceback
from pathlib import Path

USAGE = "usage: chartforge-shim SCRIPT DATA OUT"


def shim_exec(script_path: str, data_path: str, out_path: str) -> int:
    script = Path(script_path)
    data = Path(data_path)
    out = Path(out_path)
    if not script.is_file():
        print(f"shim: script not readable: {script}", file=sys.stderr)
        return 2
    if not data.is_file():
        print(f"shim: data not readable: {data}", file=sys.stderr)
        return 2
    if not out.parent.is_dir():
        print(f"shim: output directory missing: {out.parent}", file=sys.stderr)
        return 2

    os.environ.setdefault("MPLBACKEND", "Agg")
    import matplotlib

    matplotlib.use("Agg", force=True)
    matplotlib.rcParams["figure.dpi"] = 100
    matplotlib.rcParams["savefig.dpi"] = 100
    matplotlib.rcParams["figure.figsize"] = (6.4, 4.8)

    source = script.read_text(encoding="utf-8")
    sys.argv = [str(script), str(data), str(out)]
    globs = {"__name__": "__main__", "__file__": str(script)}
    try:
        code = compile(source, str(script), "exec")
        exec(code, globs)
    except SystemExit as exc:
        if exc.code not in (0, None):
            print(f"shim: script exited with {exc.code}", file=sys.stderr)
            return 1
    except BaseException:
        traceback.print_exc()
        return 1

    if not out.is_file() or out.stat().st_size == 0:
        print("shim: no output produced", file=sys.stderr)
        return 1
    return 0


def main(argv: list[str] | None = None) -> int:
    args = sys.argv[1:] if argv is None else argv
    if len(args) != 3:
        print(USAGE, file=sys.stderr)
        return 2
    return shim_exec(*args)


if __name__ == "__main__":
    sys.exit(main())
