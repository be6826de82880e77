#!/usr/bin/env python3
"""Numerical laboratory for Li-Yau-Hamilton estimates on positive (p,p)-forms."""

__all__ = [
    "ConeKind",
    "ConeSpec",
    "ConfigError",
    "ExitCode",
    "KahlerCurvature",
    "LabConfig",
    "PPForm",
    "RiemCurvature",
    "SpectralPPField",
    "SuiteName",
    "SuiteResult",
    "VerdictStatus",
    "apply_overrides",
    "load_config",
    "membership",
    "run_suite",
    "write_reports",
]

from .cones import ConeKind, ConeSpec, membership
from .config import ConfigError, LabConfig, apply_overrides, load_config
from .curvature import KahlerCurvature, RiemCurvature
from .pp_forms import PPForm
from .search import VerdictStatus
from .suites import ExitCode, SuiteName, SuiteResult, run_suite, write_reports
from .torus_heat import SpectralPPField
