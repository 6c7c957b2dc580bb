#!/usr/bin/env python3
"""
Installation smoke tests: the dependency stack imports and the toolkit
modules load with a consistent configuration.

Usage:
    pytest test_installation.py -v
"""

import importlib

import pytest


@pytest.mark.parametrize("module", ["numpy", "scipy", "scipy.linalg", "scipy.special", "flask",
                                    "flask_sqlalchemy", "sqlalchemy", "tqdm", "hypothesis"])
def test_dependency_imports(module):
    importlib.import_module(module)


@pytest.mark.parametrize("module", ["config", "errors", "fock_core", "state_factory", "phase_space",
                                    "gaussian_calculus", "protocols", "property_checks", "cli",
                                    "database", "app"])
def test_toolkit_modules_import(module):
    importlib.import_module(module)


def test_default_configuration():
    from config import DEFAULT_TOLERANCES, RunConfig, default_dim

    assert DEFAULT_TOLERANCES.truncation_leakage == 1e-8
    assert default_dim(0.0) == 20
    assert default_dim(4.0) == 40
    assert RunConfig().provenance()["dim"] == "auto"


def test_error_hierarchy():
    from errors import InvalidArgumentError, NonGaussianityError, StateSpecParseError

    assert issubclass(StateSpecParseError, NonGaussianityError)
    assert issubclass(InvalidArgumentError, ValueError)
