from __future__ import annotations

import json

import pytest

from chartforge.backends import BaseBackend, ExpertRole, OfflineBackend
from chartforge.chartspec import DEFAULT_CHART_TYPES
from chartforge.forge import (
    ForgeError,
    generate_code,
    generate_data,
    generate_template,
    offline_script_bank,
    sample_styles,
    style_grid,
)
from chartforge.model import QA_PLAN, StyleDescriptor, conformance_report


class ScriptedBackend(BaseBackend):
    """Delegates to an offline backend but lets a test corrupt chosen
    responses, keyed by (role, index, attempt)."""

    kind = "offline"

    def __init__(self, seed=0, corruptions=None):
        super().__init__()
        self.inner = OfflineBackend(seed)
        self.corruptions = corruptions or {}

    def _complete(self, request):
        key = (request.role, request.index, request.attempt)
        if key in self.corruptions:
            return self.corruptions[key](self.inner._complete(request))
        return self.inner._complete(request)


def _drop_title(raw: str) -> str:
    doc = json.loads(raw)
    del doc["payload"]["title"]
    return json.dumps(doc)


def test_generate_template_valid_for_every_default_type():
    backend = OfflineBackend(1)
    for name in DEFAULT_CHART_TYPES:
        spec = generate_template(backend, name)
        assert spec.validate() == []
        assert spec.name == name


def test_generate_template_pure():
    backend = OfflineBackend(1)
    assert generate_template(backend, "line") == generate_template(backend, "line")


def test_generate_template_unknown_type():
    with pytest.raises(ForgeError, match="registry"):
        generate_template(OfflineBackend(1), "hexbin")


def test_generate_template_fails_after_retries_with_last_output():
    def break_template(raw):
        doc = json.loads(raw)
        del doc["template"]["data"]
        return json.dumps(doc)

    corruptions = {(ExpertRole.JSON_EXPERT, 0, a): break_template for a in (1, 2, 3)}
    backend = ScriptedBackend(corruptions=corruptions)
    with pytest.raises(ForgeError, match="3 attempts"):
        generate_template(backend, "bar", retry_budget=3)
    assert backend.call_counts["json_expert"] == 3


def test_generate_data_counts_and_qa_plan():
    backend = OfflineBackend(2)
    spec = generate_template(backend, "bar")
    data = generate_data(backend, spec, ["energy production"], 6)
    assert len(data) == 6
    for d in data:
        assert d.validate() == []
        counts = {level: sum(1 for qa in d.qas if qa.level is level) for level in QA_PLAN}
        assert counts == QA_PLAN
        ok, _, _ = conformance_report(d.payload, spec.template)
        assert ok


def test_generate_data_minimal_count():
    backend = OfflineBackend(2)
    spec = generate_template(backend, "pie")
    assert len(generate_data(backend, spec, ["retail sales"], 1)) == 1


def test_generate_data_regenerates_defective_candidate():
    corruptions = {(ExpertRole.DATA_EXPERT, 2, 1): _drop_title}
    backend = ScriptedBackend(seed=3, corruptions=corruptions)
    spec = generate_template(backend, "bar")
    data = generate_data(backend, spec, ["market share"], 6)
    assert len(data) == 6
    assert backend.call_counts["data_expert"] == 7  # one retry


def test_generate_data_floor_aborts():
    corruptions = {
        (ExpertRole.DATA_EXPERT, i, a): _drop_title for i in range(6) for a in (1, 2, 3)
    }
    backend = ScriptedBackend(seed=3, corruptions=corruptions)
    spec = generate_template(backend, "bar")
    with pytest.raises(ForgeError, match="below floor"):
        generate_data(backend, spec, ["market share"], 6)


def test_generate_data_deterministic_across_runs():
    spec = generate_template(OfflineBackend(4), "radar")
    first = generate_data(OfflineBackend(4), spec, ["climate data", "water usage"], 5)
    second = generate_data(OfflineBackend(4), spec, ["climate data", "water usage"], 5, jobs=2)
    assert first == second


def test_generate_code_distinct_styles_and_contract():
    backend = OfflineBackend(5)
    spec = generate_template(backend, "bar")
    scripts = generate_code(backend, spec, "matplotlib", 4, seed=5)
    assert len(scripts) == 4
    styles = {tuple(s.style.to_dict().items()) for s in scripts}
    assert len(styles) == 4
    for s in scripts:
        assert s.validate() == []
        assert "sys.argv[1]" in s.source and "sys.argv[2]" in s.source


def test_generate_code_single_script():
    backend = OfflineBackend(5)
    spec = generate_template(backend, "line")
    assert len(generate_code(backend, spec, "matplotlib", 1, seed=5)) == 1


def test_generate_code_unannotated_fraction_exact():
    backend = OfflineBackend(6)
    spec = generate_template(backend, "bar")
    scripts = generate_code(backend, spec, "matplotlib", 4, seed=6, unannotated_fraction=0.5)
    assert sum(1 for s in scripts if not s.style.annotated) == 2


def test_sample_styles_cycles_when_grid_exhausted():
    n = len(style_grid()) + 5
    styles = sample_styles(0, "bar", n)
    assert len(styles) == n


def test_sample_styles_deterministic():
    assert sample_styles(9, "pie", 10) == sample_styles(9, "pie", 10)


def test_offline_script_bank_instantiates_and_is_pure():
    style = StyleDescriptor("plasma", "lower-left", "x", "mono", "dotted", annotated=False)
    src = offline_script_bank("pie", style)
    assert "sys.argv[1]" in src and "sys.argv[2]" in src
    assert src == offline_script_bank("pie", style)
    with pytest.raises(ForgeError):
        offline_script_bank("hexbin", style)


def test_orthogonality_data_and_code_share_no_inputs():
    backend = OfflineBackend(7)
    spec = generate_template(backend, "bar")
    data = generate_data(backend, spec, ["market share"], 3)
    scripts = generate_code(backend, spec, "matplotlib", 3, seed=7)
    # code generation consumed only the spec: regenerating it after data
    # generation (fresh backend, same seed) yields identical scripts.
    again = generate_code(OfflineBackend(7), spec, "matplotlib", 3, seed=7)
    assert scripts == again
    # and data regenerated without any scripts in existence is identical too.
    assert data == generate_data(OfflineBackend(7), spec, ["market share"], 3)
