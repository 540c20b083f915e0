from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chartforge.manifest import ManifestError, read_manifest, write_manifest
from chartforge.model import ChartData, ChartInstance, QALevel, QAPair

from .conftest import stage_records


def _qas() -> list[QAPair]:
    qas = [QAPair(QALevel.DESCRIPTION, "q", "a"), QAPair(QALevel.SUMMARY, "q", "a")]
    for level in (QALevel.LITERAL, QALevel.INFERENTIAL, QALevel.REASONING):
        qas.extend(QAPair(level, f"{level.value} {i}", "a", "1") for i in range(5))
    return qas


def _data(tag: str) -> ChartData:
    payload = {"title": tag, "x_axis": {"label": "x"}, "y_axis": {"label": "y", "unit": "u"},
               "data": {"categories": ["a"], "values": [1]}}
    return ChartData.create("bar", "market share", payload, _qas())


def test_round_trip(tmp_path):
    records = [_data("one"), _data("two")]
    path = tmp_path / "data.jsonl"
    header = write_manifest(path, "data", records, config_hash="abc", seed=3)
    assert header.count == 2
    back_header, back = read_manifest(path)
    assert back == records
    assert back_header.stage == "data"
    assert back_header.seed == 3


def test_empty_manifest_has_header_only(tmp_path):
    path = tmp_path / "data.jsonl"
    write_manifest(path, "data", [], config_hash="abc", seed=0)
    assert path.read_text().count("\n") == 1
    header, records = read_manifest(path)
    assert header.count == 0 and records == []


def test_identical_inputs_yield_byte_identical_files(tmp_path):
    records = [_data("one"), _data("two")]
    a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    write_manifest(a, "data", records, config_hash="abc", seed=3)
    write_manifest(b, "data", records, config_hash="abc", seed=3)
    assert a.read_bytes() == b.read_bytes()


def test_desk_compose_manifest_has_72_record_lines(desk_run):
    cfg, _ = desk_run
    lines = cfg.manifest_path("compose").read_text().splitlines()
    assert len(lines) == 73  # header + 72 instances
    header, records = read_manifest(cfg.manifest_path("compose"))
    assert header.count == 72 and len(records) == 72


def test_truncated_last_line_reports_line_number(tmp_path):
    path = tmp_path / "data.jsonl"
    write_manifest(path, "data", [_data("one"), _data("two")], config_hash="x", seed=0)
    clipped = path.read_text()[:-20]
    path.write_text(clipped)
    with pytest.raises(ManifestError, match="line 3"):
        read_manifest(path)


def test_config_hash_mismatch_names_both_hashes(tmp_path):
    path = tmp_path / "data.jsonl"
    write_manifest(path, "data", [_data("one")], config_hash="aaaa", seed=0)
    with pytest.raises(ManifestError) as err:
        read_manifest(path, expect_config_hash="bbbb")
    assert "aaaa" in str(err.value) and "bbbb" in str(err.value)


def test_unknown_stage_rejected(tmp_path):
    path = tmp_path / "bogus.jsonl"
    with pytest.raises(ManifestError, match="unknown stage"):
        write_manifest(path, "bogus", [], config_hash="x", seed=0)
    good = tmp_path / "data.jsonl"
    write_manifest(good, "data", [], config_hash="x", seed=0)
    doctored = good.read_text().replace('"stage":"data"', '"stage":"bogus"')
    good.write_text(doctored)
    with pytest.raises(ManifestError, match="unknown stage"):
        read_manifest(good)


def test_invalid_records_refused_listing_ids(tmp_path):
    bad = ChartData.create("bar", "t", {"title": "x"}, _qas()[:-1])
    with pytest.raises(ManifestError) as err:
        write_manifest(tmp_path / "data.jsonl", "data", [bad], config_hash="x", seed=0)
    assert bad.id in str(err.value)


def test_duplicate_ids_refused(tmp_path):
    record = _data("one")
    with pytest.raises(ManifestError, match="duplicate record id"):
        write_manifest(tmp_path / "data.jsonl", "data", [record, record], config_hash="x", seed=0)


def test_instance_ids_reference_existing_data_and_scripts(desk_run):
    cfg, _ = desk_run
    data_ids = {d.id for d in stage_records(cfg, "data")}
    script_ids = {s.id for s in stage_records(cfg, "code")}
    for instance in stage_records(cfg, "compose"):
        assert instance.data_id in data_ids
        assert instance.script_id in script_ids


_text = st.text(
    alphabet=st.characters(blacklist_categories=("Cs",)), min_size=1, max_size=30
).filter(lambda s: s.strip())
_numbers = st.one_of(
    st.integers(min_value=-10**6, max_value=10**6),
    st.floats(allow_nan=False, allow_infinity=False, min_value=-1e6, max_value=1e6),
)


@st.composite
def chart_data_records(draw):
    n = draw(st.integers(min_value=1, max_value=5))
    categories = draw(
        st.lists(_text, min_size=n, max_size=n, unique_by=lambda s: s)
    )
    values = draw(st.lists(_numbers, min_size=n, max_size=n))
    payload = {
        "title": draw(_text),
        "x_axis": {"label": draw(_text)},
        "y_axis": {"label": draw(_text), "unit": draw(_text)},
        "data": {"categories": categories, "values": values},
    }
    qas = [
        QAPair(QALevel.DESCRIPTION, draw(_text), draw(_text)),
        QAPair(QALevel.SUMMARY, draw(_text), draw(_text)),
    ]
    for level in (QALevel.LITERAL, QALevel.INFERENTIAL, QALevel.REASONING):
        qas.extend(QAPair(level, f"{level.value} {i} {draw(_text)}", draw(_text), draw(_text)) for i in range(5))
    return ChartData.create("bar", draw(_text), payload, qas)


@settings(max_examples=40, deadline=None)
@given(st.lists(chart_data_records(), max_size=4))
def test_round_trip_property(tmp_path_factory, records):
    unique = {r.id: r for r in records}
    records = list(unique.values())
    path = tmp_path_factory.mktemp("prop") / "data.jsonl"
    write_manifest(path, "data", records, config_hash="h", seed=1)
    _, back = read_manifest(path)
    assert back == records


def test_instance_manifest_round_trip(tmp_path):
    instances = [ChartInstance(f"d{i}", f"s{i}", "bar") for i in range(3)]
    path = tmp_path / "compose.jsonl"
    write_manifest(path, "compose", instances, config_hash="h", seed=1)
    _, back = read_manifest(path)
    assert back == instances
