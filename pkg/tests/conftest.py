import sys
from pathlib import Path

import pytest

# Ensure workspace root is on sys.path for test imports
ROOT = Path(__file__).resolve().parents[1]
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))


@pytest.fixture
def scenario_file(tmp_path):
    """Write scenario YAML text to a file under tmp_path and return its path."""
    def _write(text, name='scenario.yaml'):
        path = tmp_path / name
        path.write_text(text, encoding='utf-8')
        return path
    return _write


@pytest.fixture(autouse=True)
def _isolated_settings(monkeypatch, tmp_path):
    # keep runs from leaking into the working directory or picking up a developer's env
    monkeypatch.setenv('SIVSIM_OUTPUT_DIR', str(tmp_path / 'runs'))
    monkeypatch.delenv('SIVSIM_JOBS', raising=False)
    monkeypatch.delenv('SIVSIM_LOG_LEVEL', raising=False)
