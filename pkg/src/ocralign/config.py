"""Pipeline configuration: defaults, YAML file, command-line overrides.

Precedence is command line over file over defaults.  Relative input paths
in a config file are resolved against the file's directory.
"""

from __future__ import annotations

import copy
import os
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .aligner import AlignerConfig
from .errors import ConfigError
from .evaluator import EvalConfig
from .fixers import FixerConfig
from .highlight import DEFAULT_MIN_COVERAGE, DEFAULT_THRESHOLD, MODES
from .jats import JatsExtractionConfig
from .synth import ABLATION_NOISE, NoiseConfig

JOBS_ENV = "OCRALIGN_JOBS"

DEFAULTS = {
    "output": "ocralign-out",
    "jobs": None,
    "figures": True,
    "aligner": {"pre_compress_block": 20, "cell_budget": 400_000_000},
    "fixers": {"dehyp": False, "pre_join": False, "pre_split": False,
               "post_force_align": False, "force_align_max_run": 5},
    "evaluation": {"context_width": 10, "lsim_threshold": 0.5},
    "highlight": {"enabled": False, "threshold": DEFAULT_THRESHOLD,
                  "min_coverage": DEFAULT_MIN_COVERAGE, "mode": "any", "synthetic_marks": 8},
    "jats": {"control_words": "table"},
    "groundtruth": {"enabled": True, "crops": False},
    "documents": [],
    "synth": None,
}

SYNTH_DEFAULTS = {"documents": 3, "tokens": 2000, "seed": 42, "kind": "scan", "noise": "ablation"}
NOISE_PRESETS = {"ablation": ABLATION_NOISE, "none": {}}


@dataclass(frozen=True)
class HighlightSettings:
    enabled: bool = False
    threshold: int = DEFAULT_THRESHOLD
    min_coverage: float = DEFAULT_MIN_COVERAGE
    mode: str = "any"
    synthetic_marks: int = 8


@dataclass(frozen=True)
class DocumentInput:
    doc_id: str
    nxml: Path
    hocr: tuple[Path, ...]
    kind: str = "scan"
    backgrounds: tuple[Path, ...] = ()
    page_images: tuple[Path, ...] = ()


@dataclass(frozen=True)
class SynthSettings:
    documents: int = 3
    tokens: int = 2000
    seed: int = 42
    noise: NoiseConfig = field(default_factory=NoiseConfig)


@dataclass(frozen=True)
class PipelineConfig:
    output: Path
    aligner: AlignerConfig = field(default_factory=AlignerConfig)
    fixers: FixerConfig = field(default_factory=FixerConfig)
    evaluation: EvalConfig = field(default_factory=EvalConfig)
    highlight: HighlightSettings = field(default_factory=HighlightSettings)
    jats: JatsExtractionConfig = field(default_factory=JatsExtractionConfig)
    groundtruth: bool = True
    crops: bool = False
    documents: tuple[DocumentInput, ...] = ()
    synth: SynthSettings | None = None
    jobs: int = 1
    figures: bool = True


def deep_merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = deep_merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


def read_config_file(path: str | Path) -> dict:
    path = Path(path)
    try:
        data = yaml.safe_load(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc.strerror}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"config file {path} is not valid YAML: {exc}") from exc
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError(f"config file {path} must hold a mapping at the top level")
    base = path.parent
    for doc in data.get("documents") or []:
        if not isinstance(doc, dict):
            continue
        for key in ("nxml",):
            if key in doc:
                doc[key] = str(base / doc[key])
        for key in ("hocr", "backgrounds", "page_images"):
            if key in doc:
                doc[key] = [str(base / p) for p in _as_list(doc[key])]
    if "output" in data and data["output"] is not None:
        data["output"] = str(base / data["output"])
    return data


def _as_list(value) -> list:
    if value is None:
        return []
    return list(value) if isinstance(value, (list, tuple)) else [value]


def _check_keys(section: str, given: dict, allowed) -> None:
    unknown = sorted(set(given) - set(allowed))
    if unknown:
        raise ConfigError(f"unknown key(s) in {section}: {', '.join(unknown)}")


def default_jobs() -> int:
    raw = os.environ.get(JOBS_ENV)
    if not raw:
        return 1
    try:
        jobs = int(raw)
    except ValueError as exc:
        raise ConfigError(f"{JOBS_ENV} must be an integer, got {raw!r}") from exc
    if jobs < 1:
        raise ConfigError(f"{JOBS_ENV} must be >= 1")
    return jobs


def _document(entry, require_files: bool) -> DocumentInput:
    if not isinstance(entry, dict):
        raise ConfigError("each documents entry must be a mapping")
    _check_keys("documents entry", entry, ("doc_id", "nxml", "hocr", "kind", "backgrounds", "page_images"))
    for key in ("doc_id", "nxml", "hocr"):
        if not entry.get(key):
            raise ConfigError(f"documents entry is missing {key!r}")
    doc = DocumentInput(str(entry["doc_id"]), Path(entry["nxml"]),
                        tuple(Path(p) for p in _as_list(entry["hocr"])),
                        entry.get("kind", "scan"),
                        tuple(Path(p) for p in _as_list(entry.get("backgrounds"))),
                        tuple(Path(p) for p in _as_list(entry.get("page_images"))))
    if doc.kind not in ("conv", "scan"):
        raise ConfigError(f"document {doc.doc_id}: kind must be conv or scan")
    if require_files:
        for path in (doc.nxml, *doc.hocr):
            if not path.is_file():
                raise ConfigError(f"document {doc.doc_id}: input {path} does not exist")
    return doc


def build_config(data: dict, require_files: bool = True, require_inputs: bool = True) -> PipelineConfig:
    """Turn a merged config mapping into a validated PipelineConfig."""
    _check_keys("config", data, DEFAULTS)
    merged = deep_merge(DEFAULTS, data)
    for section in ("aligner", "fixers", "evaluation", "highlight", "jats", "groundtruth"):
        if not isinstance(merged[section], dict):
            raise ConfigError(f"{section} must be a mapping")
        _check_keys(section, merged[section], DEFAULTS[section])
    try:
        aligner = AlignerConfig(**merged["aligner"])
        fixers = FixerConfig(**merged["fixers"])
        evaluation = EvalConfig(**merged["evaluation"])
        hl = HighlightSettings(**merged["highlight"])
        if hl.mode not in MODES:
            raise ValueError(f"highlight mode must be one of {MODES}")
        if not 0 <= hl.threshold <= 255:
            raise ValueError("highlight threshold must lie in [0, 255]")
        jats = JatsExtractionConfig(control_words=merged["jats"]["control_words"])
        synth = None
        if merged["synth"] is not None:
            raw = deep_merge(SYNTH_DEFAULTS, merged["synth"])
            _check_keys("synth", raw, SYNTH_DEFAULTS)
            noise = raw["noise"]
            if isinstance(noise, str):
                if noise not in NOISE_PRESETS:
                    raise ValueError(f"synth noise preset must be one of {sorted(NOISE_PRESETS)}")
                noise = NOISE_PRESETS[noise]
            if not isinstance(noise, dict):
                raise ValueError("synth noise must be a preset name or a mapping")
            _check_keys("synth noise", noise, NoiseConfig().to_json())
            noise = NoiseConfig.from_json({**noise, "kind": raw["kind"]})
            synth = SynthSettings(int(raw["documents"]), int(raw["tokens"]), int(raw["seed"]), noise)
            if synth.documents < 1 or synth.tokens < 1:
                raise ValueError("synth documents and tokens must be >= 1")
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    documents = tuple(_document(d, require_files) for d in merged["documents"] or [])
    if require_inputs and not documents and synth is None:
        raise ConfigError("nothing to do: configure documents or a synth section")
    jobs = merged["jobs"] if merged["jobs"] is not None else default_jobs()
    if not isinstance(jobs, int) or jobs < 1:
        raise ConfigError("jobs must be a positive integer")
    return PipelineConfig(Path(merged["output"]), aligner, fixers, evaluation, hl, jats,
                          bool(merged["groundtruth"]["enabled"]), bool(merged["groundtruth"]["crops"]),
                          documents, synth, jobs, bool(merged["figures"]))


def config_to_json(cfg: PipelineConfig) -> dict:
    """Settings that influence results, for the run summary."""
    from dataclasses import asdict

    out = {"aligner": asdict(cfg.aligner), "fixers": asdict(cfg.fixers),
           "evaluation": asdict(cfg.evaluation), "highlight": asdict(cfg.highlight),
           "jats": {"control_words": cfg.jats.control_words},
           "groundtruth": {"enabled": cfg.groundtruth, "crops": cfg.crops}}
    if cfg.synth is not None:
        out["synth"] = {"documents": cfg.synth.documents, "tokens": cfg.synth.tokens,
                        "seed": cfg.synth.seed, "noise": cfg.synth.noise.to_json()}
    return out
