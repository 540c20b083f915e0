"""Cartesian composition of data files with renderer scripts, and sandboxed
rendering of every pair.

Rendering treats scripts as untrusted: one subprocess per instance, scrubbed
environment, fresh temp working directory, wall-clock timeout, and an output
size cap. An instance is ``ok`` only when the shim exits 0 and the output
decodes as a non-empty raster of at least the minimum size.
"""

from __future__ import annotations

import logging
import os
import subprocess
import sys
import tempfile
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence

from .model import ChartData, ChartInstance, RenderScript, RenderStatus, canonical_json

log = logging.getLogger(__name__)

DEFAULT_RENDER_OK_FLOOR = 0.7


class ComposeError(ValueError):
    pass


class SandboxError(RuntimeError):
    """The render sandbox itself is unusable (not a per-instance failure)."""


class RenderBudgetError(RuntimeError):
    def __init__(self, message: str, histogram: dict[str, int]):
        super().__init__(message)
        self.histogram = histogram


def compose(data: Sequence[ChartData], scripts: Sequence[RenderScript]) -> list[ChartInstance]:
    """Form the full |data| x |scripts| composition for one chart type, in
    deterministic order (data-major, then script id), all pending."""
    types = {d.chart_type for d in data} | {s.chart_type for s in scripts}
    if len(types) > 1:
        raise ComposeError(f"mixed chart types in composition: {sorted(types)}")
    instances = []
    for d in sorted(data, key=lambda d: d.id):
        for s in sorted(scripts, key=lambda s: s.id):
            instances.append(ChartInstance(data_id=d.id, script_id=s.id, chart_type=d.chart_type))
    return instances


@dataclass(frozen=True)
class SandboxConfig:
    timeout: float = 30.0
    min_side: int = 64
    max_output_bytes: int = 20 * 1024 * 1024
    stderr_cap: int = 4096
    python: str = sys.executable
    env_allowlist: tuple[str, ...] = ("PATH", "HOME", "LANG", "LC_ALL", "PYTHONPATH", "TMPDIR")
    jobs: int = field(default_factory=lambda: os.cpu_count() or 1)


def _sandbox_env(sandbox: SandboxConfig, mpl_cache: Path) -> dict[str, str]:
    env = {name: os.environ[name] for name in sandbox.env_allowlist if name in os.environ}
    env["MPLBACKEND"] = "Agg"
    # Shared font cache: avoids a multi-second rebuild in every render process.
    env["MPLCONFIGDIR"] = str(mpl_cache)
    return env


def check_sandbox(sandbox: SandboxConfig) -> None:
    """Stage-level configuration check: the interpreter must exist and the
    shim must be invocable (a bare call exits 2 with usage)."""
    try:
        proc = subprocess.run(
            [sandbox.python, "-m", "chartforge.shim"],
            capture_output=True,
            text=True,
            timeout=60,
        )
    except (OSError, subprocess.TimeoutExpired) as exc:
        raise SandboxError(f"render sandbox runtime unusable: {exc}") from exc
    if proc.returncode != 2:
        raise SandboxError(
            f"shim not invocable via {sandbox.python!r} (exit {proc.returncode}): {proc.stderr.strip()}"
        )


def _check_image(path: Path, sandbox: SandboxConfig) -> Optional[str]:
    """Return a defect description, or None when the image is acceptable."""
    from PIL import Image

    if not path.is_file():
        return "no image written"
    size = path.stat().st_size
    if size == 0:
        return "empty image file"
    if size > sandbox.max_output_bytes:
        return f"image exceeds size cap ({size} bytes)"
    try:
        with Image.open(path) as im:
            im.load()
            w, h = im.size
    except Exception as exc:
        return f"undecodable image: {exc}"
    if w < sandbox.min_side or h < sandbox.min_side:
        return f"image too small ({w}x{h})"
    return None


def render_all(
    instances: Sequence[ChartInstance],
    data_by_id: dict[str, ChartData],
    scripts_by_id: dict[str, RenderScript],
    work_dir: str | Path,
    sandbox: SandboxConfig | None = None,
    *,
    already_done: dict[str, ChartInstance] | None = None,
    on_result: Optional[Callable[[ChartInstance], None]] = None,
) -> list[ChartInstance]:
    """Render every pending instance in a bounded process pool. Instances
    already terminal in ``already_done`` are carried over untouched (safe
    resumption). Results come back in input order regardless of completion
    order."""
    sandbox = sandbox or SandboxConfig()
    check_sandbox(sandbox)
    work = Path(work_dir)
    images = work / "images"
    data_dir = work / "data"
    scripts_dir = work / "scripts"
    tmp_root = work / "tmp"
    mpl_cache = work / ".mplcache"
    for p in (images, data_dir, scripts_dir, tmp_root, mpl_cache):
        p.mkdir(parents=True, exist_ok=True)

    missing = [i.data_id for i in instances if i.data_id not in data_by_id]
    missing += [i.script_id for i in instances if i.script_id not in scripts_by_id]
    if missing:
        raise ComposeError(f"unresolvable ids referenced by instances: {sorted(set(missing))[:8]}")

    for did in sorted({i.data_id for i in instances}):
        path = data_dir / f"{did}.json"
        if not path.exists():
            path.write_text(canonical_json(data_by_id[did].payload), encoding="utf-8")
    for sid in sorted({i.script_id for i in instances}):
        path = scripts_dir / f"{sid}.py"
        if not path.exists():
            path.write_text(scripts_by_id[sid].source, encoding="utf-8")

    env = _sandbox_env(sandbox, mpl_cache)
    done = already_done or {}
    terminal = {RenderStatus.OK, RenderStatus.EXEC_ERROR, RenderStatus.TIMEOUT, RenderStatus.BAD_IMAGE}

    def render_one(instance: ChartInstance) -> ChartInstance:
        prior = done.get(instance.id)
        if prior is not None and prior.render_status in terminal:
            return prior
        out = images / f"{instance.id}.png"
        cmd = [
            sandbox.python,
            "-m",
            "chartforge.shim",
            str(scripts_dir / f"{instance.script_id}.py"),
            str(data_dir / f"{instance.data_id}.json"),
            str(out),
        ]
        with tempfile.TemporaryDirectory(dir=tmp_root) as cwd:
            try:
                proc = subprocess.run(
                    cmd, capture_output=True, text=True, errors="replace",
                    timeout=sandbox.timeout, env=env, cwd=cwd,
                )
            except subprocess.TimeoutExpired:
                result = _finish(instance, RenderStatus.TIMEOUT, stderr=f"timeout after {sandbox.timeout}s")
                return result
        if proc.returncode != 0:
            return _finish(instance, RenderStatus.EXEC_ERROR, stderr=proc.stderr)
        defect = _check_image(out, sandbox)
        if defect is not None:
            return _finish(instance, RenderStatus.BAD_IMAGE, stderr=defect)
        return _finish(instance, RenderStatus.OK, image_ref=f"images/{instance.id}.png")

    def _finish(
        instance: ChartInstance,
        status: RenderStatus,
        *,
        image_ref: str | None = None,
        stderr: str | None = None,
    ) -> ChartInstance:
        tail = stderr[-sandbox.stderr_cap:] if stderr else None
        return ChartInstance(
            data_id=instance.data_id,
            script_id=instance.script_id,
            chart_type=instance.chart_type,
            render_status=status,
            image_ref=image_ref,
            stderr_tail=tail,
        )

    results: list[ChartInstance]
    if sandbox.jobs > 1:
        with ThreadPoolExecutor(max_workers=sandbox.jobs) as pool:
            futures = [pool.submit(render_one, inst) for inst in instances]
            results = []
            for future in futures:
                rendered = future.result()
                if on_result is not None:
                    on_result(rendered)
                results.append(rendered)
    else:
        results = []
        for inst in instances:
            rendered = render_one(inst)
            if on_result is not None:
                on_result(rendered)
            results.append(rendered)
    return results


def render_histogram(instances: Sequence[ChartInstance]) -> dict[str, int]:
    return dict(Counter(i.render_status.value for i in instances))


def enforce_render_budget(
    instances: Sequence[ChartInstance], floor: float = DEFAULT_RENDER_OK_FLOOR
) -> dict[str, int]:
    """Abort the stage when fewer than ``floor`` of the instances rendered
    ok; returns the status histogram otherwise."""
    histogram = render_histogram(instances)
    ok = histogram.get(RenderStatus.OK.value, 0)
    if instances and ok < floor * len(instances):
        raise RenderBudgetError(
            f"only {ok}/{len(instances)} instances rendered ok (floor {floor:.0%}); "
            f"histogram: {histogram}",
            histogram,
        )
    return histogram
