"""Run configuration: INI-style file with environment-variable overrides for secrets."""

from __future__ import annotations

import configparser
import os
from dataclasses import dataclass, field
from pathlib import Path

from .reportscore import CriterionWeights

__all__ = ["RunConfig", "load_config", "DEFAULT_SEED"]

DEFAULT_SEED = 20240 + 17  # fixed default so reruns reproduce byte-identically

ENV_ENDPOINT = "EYEVQA_JUDGE_ENDPOINT"
ENV_MODEL = "EYEVQA_JUDGE_MODEL"


@dataclass
class RunConfig:
    """Paths and knobs shared by the CLI commands."""

    manifest: Path | None = None
    predictions: list[Path] = field(default_factory=list)
    out_dir: Path = Path("out")
    seed: int = DEFAULT_SEED
    jobs: int = 1
    judge_endpoint: str = ""
    judge_model: str = "gpt-4"
    judge_timeout: float = 60.0
    judge_max_parallel: int = 4
    judge_retry_budget: int = 2
    cache_dir: Path | None = None
    weights: CriterionWeights = field(default_factory=CriterionWeights)
    reviewer_tokens: dict[str, str] = field(default_factory=dict)
    admin_tokens: set[str] = field(default_factory=set)
    image_dir: Path | None = None


def load_config(path: str | Path | None) -> RunConfig:
    """Read config sections [paths], [judge], [weights], [review.tokens]; env wins for secrets."""
    config = RunConfig()
    if path is not None:
        parser = configparser.ConfigParser()
        read = parser.read(str(path))
        if not read:
            raise FileNotFoundError(f"config file not found: {path}")
        if parser.has_section("paths"):
            section = parser["paths"]
            if section.get("manifest"):
                config.manifest = Path(section["manifest"])
            if section.get("predictions"):
                config.predictions = [Path(p.strip()) for p in section["predictions"].split(",")]
            if section.get("out_dir"):
                config.out_dir = Path(section["out_dir"])
            if section.get("cache_dir"):
                config.cache_dir = Path(section["cache_dir"])
            if section.get("image_dir"):
                config.image_dir = Path(section["image_dir"])
        if parser.has_section("run"):
            section = parser["run"]
            config.seed = section.getint("seed", config.seed)
            config.jobs = section.getint("jobs", config.jobs)
        if parser.has_section("judge"):
            section = parser["judge"]
            config.judge_endpoint = section.get("endpoint", config.judge_endpoint)
            config.judge_model = section.get("model", config.judge_model)
            config.judge_timeout = section.getfloat("timeout", config.judge_timeout)
            config.judge_max_parallel = section.getint("max_parallel", config.judge_max_parallel)
            config.judge_retry_budget = section.getint("retry_budget", config.judge_retry_budget)
        if parser.has_section("weights"):
            overrides = {k: float(v) for k, v in parser["weights"].items()}
            config.weights = CriterionWeights.from_mapping(overrides)
        if parser.has_section("review.tokens"):
            config.reviewer_tokens = dict(parser["review.tokens"])
        if parser.has_section("review.admin_tokens"):
            config.admin_tokens = set(parser["review.admin_tokens"].values())
    if os.environ.get(ENV_ENDPOINT):
        config.judge_endpoint = os.environ[ENV_ENDPOINT]
    if os.environ.get(ENV_MODEL):
        config.judge_model = os.environ[ENV_MODEL]
    return config
