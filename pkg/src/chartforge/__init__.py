"""Synthetic chart corpus pipeline and benchmark toolkit.

Generates chart data files and renderer scripts independently per chart type
(so N scripts x M data files compose into N*M images from only N+M+1
generator calls), filters the rendered corpus, assembles dual-path
instruction-tuning exports, and builds/scores a multi-level chart QA
benchmark.
"""

from .assemble import (
    build_corpus,
    build_data_driven,
    build_general,
    build_json_only,
    build_pretrain_pairs,
    data_prompting_prompt,
    export_training_set,
)
from .backends import ExpertRole, GenerationRequest, OfflineBackend, RemoteBackend, ReplayBackend
from .benchmark import (
    build_benchmark,
    benchmark_stats,
    evaluate,
    score_chart_to_table,
    score_short_answer,
)
from .composer import SandboxConfig, compose, render_all
from .config import PipelineConfig, load_config
from .filtering import SidecarOcrEngine, check_ocr, check_structure, filter_corpus
from .forge import generate_code, generate_data, generate_template, offline_script_bank
from .manifest import read_manifest, write_manifest
from .model import (
    BenchmarkRecord,
    ChartData,
    ChartInstance,
    ChartTypeSpec,
    EvalReport,
    FilterReport,
    JsonTemplate,
    QALevel,
    QAPair,
    RenderScript,
    RenderStatus,
    ReviewDecision,
    StyleDescriptor,
    TrainingSample,
)

__version__ = "0.1.0"
