"""Run outputs: CSV tables, JSON sidecars and the run manifest."""
import hashlib
import json
import logging
import math
import os
import platform
import sys
import tempfile
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
import pandas as pd
import psutil
from werkzeug.utils import secure_filename

from . import __version__
from .errors import ArtifactError

logger = logging.getLogger('sivsim')

FLOAT_FORMAT = '%.10g'
SUMMARY_FILE = 'summary.json'
MANIFEST_FILE = 'manifest.json'
ERROR_FILE = 'error.json'


def sanitize_csv_filename(name):
    """Safe file name ending in .csv."""
    safe = secure_filename(name)
    if not safe:
        raise ArtifactError(f'cannot build a file name from {name!r}')
    base, _ = os.path.splitext(safe)
    return base + '.csv'


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    if isinstance(value, np.generic):
        return _jsonable(value.item())
    if isinstance(value, float) and not math.isfinite(value):
        return None if math.isnan(value) else ('inf' if value > 0 else '-inf')
    return value


def write_json_atomic(path, data):
    """Write JSON through a temp file in the target directory, then os.replace."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmpfd, tmppath = tempfile.mkstemp(dir=path.parent, suffix='.tmp')
    try:
        with os.fdopen(tmpfd, 'w', encoding='utf-8') as t:
            json.dump(_jsonable(data), t, indent=2, sort_keys=True)
            t.write('\n')
            t.flush()
            os.fsync(t.fileno())
        os.replace(tmppath, path)
    except Exception:
        logger.exception('Failed to write %s', path)
        if os.path.exists(tmppath):
            os.remove(tmppath)
        raise
    return path


def write_table(frame, out_dir, name):
    """Write a DataFrame as CSV with a fixed float format; returns the file name."""
    filename = sanitize_csv_filename(name)
    path = Path(out_dir) / filename
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator='\n')
    logger.info('Wrote %s (%s rows)', path, len(frame))
    return filename


def read_json(path):
    try:
        with open(path, 'r', encoding='utf-8') as f:
            return json.load(f)
    except FileNotFoundError:
        raise ArtifactError(f'missing artifact: {path}', path=str(path)) from None
    except (OSError, json.JSONDecodeError) as e:
        raise ArtifactError(f'unreadable artifact {path}: {e}', path=str(path)) from None


def read_summary(run_dir):
    return read_json(Path(run_dir) / SUMMARY_FILE)


def scenario_hash(resolved):
    """sha1 of the canonical JSON form (sorted keys) of the resolved scenario."""
    canonical = json.dumps(_jsonable(resolved), sort_keys=True, separators=(',', ':'))
    return hashlib.sha1(canonical.encode('utf-8')).hexdigest()


def environment_info():
    return {
        'python': sys.version.splitlines()[0],
        'platform': platform.platform(),
        'memory_mb': psutil.virtual_memory().total // (1024 * 1024),
    }


@dataclass
class RunManifest:
    scenario_hash: str
    tool_version: str
    timestamp: str
    seed: int
    subcommand: str
    parameters: dict
    outputs: list = field(default_factory=list)
    environment: dict = field(default_factory=dict)


def build_manifest(subcommand, resolved, seed, outputs):
    return RunManifest(
        scenario_hash=scenario_hash(resolved),
        tool_version=__version__,
        timestamp=datetime.now(timezone.utc).isoformat(timespec='seconds'),
        seed=int(seed),
        subcommand=subcommand,
        parameters=_jsonable(resolved),
        outputs=sorted(outputs),
        environment=environment_info(),
    )


def write_run(out_dir, subcommand, resolved, seed, tables, summary):
    """Single collector for one run: CSVs, summary.json, manifest.json.

    Parameters:
    - out_dir: run directory, created if missing
    - tables: mapping of base name -> DataFrame
    - summary: fitted values and diagnostics; the subcommand is added
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stale = out_dir / ERROR_FILE
    if stale.exists():
        stale.unlink()
    outputs = [write_table(frame, out_dir, name) for name, frame in tables.items()]
    write_json_atomic(out_dir / SUMMARY_FILE, dict(summary, subcommand=subcommand))
    outputs.append(SUMMARY_FILE)
    manifest = build_manifest(subcommand, resolved, seed, outputs + [MANIFEST_FILE])
    write_json_atomic(out_dir / MANIFEST_FILE, asdict(manifest))
    return manifest


def write_error(out_dir, error):
    """Structured error dict ({'code', 'message'[, 'context']}) next to a failed run."""
    data = error.to_dict() if hasattr(error, 'to_dict') else {'code': 'INTERNAL_ERROR', 'message': str(error)}
    try:
        return write_json_atomic(Path(out_dir) / ERROR_FILE, data)
    except OSError:
        logger.exception('Could not record error for %s', out_dir)
        return None


def frame(columns):
    """DataFrame from an ordered mapping of column name -> values."""
    return pd.DataFrame({k: np.asarray(v) for k, v in columns.items()})
