from __future__ import annotations

import pytest

from chartforge.backends import OfflineBackend
from chartforge.cli import run_pipeline
from chartforge.config import PipelineConfig, load_config
from chartforge.manifest import read_manifest

DESK_TYPES = ("bar", "line", "radar")
DESK_SCRIPTS = 4
DESK_DATA = 6
DESK_SEED = 11


@pytest.fixture(scope="session")
def desk_run(tmp_path_factory) -> tuple[PipelineConfig, OfflineBackend]:
    """One full offline pipeline run (3 chart types, 4 scripts x 6 data files
    per type) shared by everything that inspects a realistic corpus."""
    out = tmp_path_factory.mktemp("desk") / "out"
    cfg = load_config(
        None,
        chart_types=DESK_TYPES,
        scripts_per_type=DESK_SCRIPTS,
        data_per_type=DESK_DATA,
        out_dir=str(out),
        seed=DESK_SEED,
        jobs=2,
    )
    backend = OfflineBackend(cfg.seed)
    assert run_pipeline(cfg, backend=backend) == 0
    return cfg, backend


def stage_records(cfg: PipelineConfig, stage: str):
    _, records = read_manifest(cfg.manifest_path(stage))
    return records
