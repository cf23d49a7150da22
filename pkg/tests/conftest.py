#!/usr/bin/env python3
import os
import sys

import pytest

# Ensure 'src' package is importable when running tests from repo root
ROOT = os.path.dirname(os.path.dirname(__file__))
if ROOT not in sys.path:
    sys.path.insert(0, ROOT)

SETTINGS_VARS = ("FRACSUB_LOG_LEVEL", "FRACSUB_WORKERS", "FRACSUB_OUTPUT_DIR", "FRACSUB_LINEAR_SOLVER")


@pytest.fixture
def clean_env(monkeypatch, tmp_path):
    """No FRACSUB_* variables and a scratch working directory without a .env file."""
    for name in SETTINGS_VARS:
        # setenv first so teardown also undoes values a .env file loads mid-test
        monkeypatch.setenv(name, "")
        monkeypatch.delenv(name)
    monkeypatch.chdir(tmp_path)
    return tmp_path
