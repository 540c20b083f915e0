"""Generator operations: templates, data files with QA sets, and renderer
scripts.

Data and code generation are orthogonal by construction: the data path sees
only the chart type spec and a topic, the code path only the spec and a
style, so any data file composes with any script of the same type. Each
candidate is requested, parsed, and validated independently; a malformed
candidate is retried with the validation problems fed back to the backend,
up to a fixed budget.
"""

from __future__ import annotations

import itertools
import json
import logging
import random
import threading
from concurrent.futures import ThreadPoolExecutor
from typing import Sequence

from .backends import BackendError, BaseBackend, ExpertRole, GenerationRequest, derive_seed
from .chartspec import DEFAULT_CHART_TYPES, derive_template
from .model import (
    ChartData,
    ChartTypeSpec,
    QAPair,
    RenderScript,
    StyleDescriptor,
    conformance_report,
)
from .shim import bank

log = logging.getLogger(__name__)

DEFAULT_RETRY_BUDGET = 3
DEFAULT_DATA_FLOOR = 0.8
DEFAULT_UNANNOTATED_FRACTION = 0.5


class ForgeError(RuntimeError):
    pass


def _parse_json(raw: str) -> dict:
    doc = json.loads(raw)
    if not isinstance(doc, dict):
        raise ValueError(f"expected a JSON object, got {type(doc).__name__}")
    return doc


def generate_template(
    backend: BaseBackend,
    chart_type: str,
    *,
    registry: Sequence[str] = tuple(DEFAULT_CHART_TYPES),
    retry_budget: int = DEFAULT_RETRY_BUDGET,
) -> ChartTypeSpec:
    """Ask the JSON expert for a chart type's template and README, validating
    the result against the template invariants."""
    if chart_type not in registry:
        raise ForgeError(f"chart type {chart_type!r} not in registry")
    feedback = None
    last_raw = ""
    for attempt in range(1, retry_budget + 1):
        request = GenerationRequest(
            role=ExpertRole.JSON_EXPERT, chart_type=chart_type, attempt=attempt, feedback=feedback
        )
        last_raw = backend.complete(request)
        try:
            doc = _parse_json(last_raw)
            template = derive_template(doc["template"])
            spec = ChartTypeSpec(name=chart_type, template=template, readme=str(doc.get("readme", "")))
            problems = spec.validate()
        except (ValueError, KeyError, TypeError) as exc:
            problems = [str(exc)]
        if not problems:
            return spec
        feedback = "; ".join(problems)
        log.debug("template candidate for %s rejected (attempt %d): %s", chart_type, attempt, feedback)
    raise ForgeError(
        f"template generation for {chart_type!r} failed after {retry_budget} attempts: "
        f"{feedback}; last raw output: {last_raw[:500]}"
    )


def _parse_chart_data(raw: str, spec: ChartTypeSpec, topic: str) -> tuple[ChartData | None, list[str]]:
    try:
        doc = _parse_json(raw)
        payload = doc["payload"]
        qas = [QAPair.from_dict(q) for q in doc["qas"]]
        data = ChartData.create(chart_type=spec.name, topic=topic, payload=payload, qas=qas)
    except (ValueError, KeyError, TypeError) as exc:
        return None, [f"unparseable response: {exc}"]
    problems = data.validate()
    ok, missing, _extra = conformance_report(payload, spec.template)
    if not ok:
        problems.append("payload does not conform to template: missing/mismatched " + ", ".join(missing))
    return (data if not problems else None), problems


def generate_data(
    backend: BaseBackend,
    spec: ChartTypeSpec,
    topics: Sequence[str],
    count: int,
    *,
    retry_budget: int = DEFAULT_RETRY_BUDGET,
    floor: float = DEFAULT_DATA_FLOOR,
    jobs: int = 1,
) -> list[ChartData]:
    """Generate ``count`` data files for one chart type, topics assigned
    round-robin. Non-conforming candidates are regenerated up to the retry
    budget; a shortfall below ``floor * count`` aborts the stage."""
    if not topics:
        raise ForgeError("no topics configured")
    if count < 1:
        raise ForgeError("count must be >= 1")
    spec_problems = spec.validate()
    if spec_problems:
        raise ForgeError(f"invalid chart type spec: {'; '.join(spec_problems)}")

    seen_ids: set[str] = set()
    seen_lock = threading.Lock()

    def claim(data_id: str) -> bool:
        with seen_lock:
            if data_id in seen_ids:
                return False
            seen_ids.add(data_id)
            return True

    def one(index: int) -> ChartData | None:
        topic = topics[index % len(topics)]
        feedback = None
        for attempt in range(1, retry_budget + 1):
            request = GenerationRequest(
                role=ExpertRole.DATA_EXPERT,
                chart_type=spec.name,
                topic=topic,
                index=index,
                attempt=attempt,
                template=spec.template.exemplar,
                readme=spec.readme,
                feedback=feedback,
            )
            try:
                raw = backend.complete(request)
            except BackendError as exc:
                feedback = str(exc)
                continue
            data, problems = _parse_chart_data(raw, spec, topic)
            if data is not None and not claim(data.id):
                data, problems = None, [f"duplicate payload (id {data.id})"]
            if data is not None:
                return data
            feedback = "; ".join(problems)
            log.debug("data candidate %d for %s rejected (attempt %d): %s", index, spec.name, attempt, feedback)
        log.warning("data candidate %d for %s dropped after %d attempts", index, spec.name, retry_budget)
        return None

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(one, range(count)))
    else:
        results = [one(i) for i in range(count)]
    out = [d for d in results if d is not None]
    shortfall = count - len(out)
    if shortfall:
        log.warning("data generation for %s short by %d of %d", spec.name, shortfall, count)
    if len(out) < floor * count:
        raise ForgeError(
            f"data generation for {spec.name!r} produced {len(out)}/{count}, below floor {floor:.0%}"
        )
    return out


def style_grid() -> list[tuple[str, str, str, str, str]]:
    return list(
        itertools.product(bank.COLOR_SCHEMES, bank.LEGENDS, bank.GRIDS, bank.FONTS, bank.MARK_TEXTURES)
    )


def sample_styles(
    seed: int,
    chart_type: str,
    count: int,
    unannotated_fraction: float = DEFAULT_UNANNOTATED_FRACTION,
) -> list[StyleDescriptor]:
    """Sample styles without replacement from the variation grid (cycling
    only once the grid is exhausted). Exactly round(count * fraction) styles
    are unannotated so the corpus always contains charts without numeric
    value labels."""
    grid = style_grid()
    rng = random.Random(derive_seed(seed, f"styles:{chart_type}"))
    rng.shuffle(grid)
    combos = [grid[i % len(grid)] for i in range(count)]
    n_plain = round(count * unannotated_fraction)
    return [StyleDescriptor(*combo, annotated=(i >= n_plain)) for i, combo in enumerate(combos)]


def generate_code(
    backend: BaseBackend,
    spec: ChartTypeSpec,
    backend_name: str,
    count: int,
    seed: int,
    *,
    unannotated_fraction: float = DEFAULT_UNANNOTATED_FRACTION,
    retry_budget: int = DEFAULT_RETRY_BUDGET,
    jobs: int = 1,
) -> list[RenderScript]:
    """Generate ``count`` renderer scripts for one chart type with pairwise
    distinct styles (where the grid permits) and the fixed two-argument I/O
    contract."""
    if count < 1:
        raise ForgeError("count must be >= 1")
    styles = sample_styles(seed, spec.name, count, unannotated_fraction)
    distinct = {tuple(s.to_dict().items()) for s in styles}
    if count <= len(style_grid()) and len(distinct) != count:
        raise ForgeError(f"could not produce {count} distinct styles for {spec.name!r}")

    def one(index: int) -> RenderScript:
        style = styles[index]
        feedback = None
        last_problems: list[str] = []
        for attempt in range(1, retry_budget + 1):
            request = GenerationRequest(
                role=ExpertRole.CODE_EXPERT,
                chart_type=spec.name,
                index=index,
                attempt=attempt,
                template=spec.template.exemplar,
                readme=spec.readme,
                style=style,
                backend_name=backend_name,
                feedback=feedback,
            )
            source = backend.complete(request)
            script = RenderScript.create(
                chart_type=spec.name, backend_name=backend_name, style=style, source=source
            )
            last_problems = script.validate()
            if not last_problems:
                return script
            feedback = "; ".join(last_problems)
        raise ForgeError(
            f"script {index} for {spec.name!r} failed after {retry_budget} attempts: {feedback}"
        )

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(one, range(count)))
    return [one(i) for i in range(count)]


def offline_script_bank(chart_type: str, style: StyleDescriptor) -> str:
    """Instantiate the built-in parameterized script for a chart type; the
    hermetic stand-in for the code expert."""
    try:
        return bank.instantiate(chart_type, style)
    except bank.BankError as exc:
        raise ForgeError(str(exc)) from exc
