"""Generators, run configuration, the property suite, reports and the CLI."""

from .config import RunConfig, load_config, parse_config_text
from .generators import GeneratorSpec, generate
from .report import emit_report
from .suite import run_suite

__all__ = ["GeneratorSpec", "RunConfig", "emit_report", "generate", "load_config", "parse_config_text", "run_suite"]
