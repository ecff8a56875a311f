"""Pass/fail comparison of run artifacts against the acceptance targets."""
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import pandas as pd
import yaml

from .artifacts import ERROR_FILE, SUMMARY_FILE, read_json, read_summary
from .errors import ArtifactError

logger = logging.getLogger('sivsim')

# Each check reads one summary.json key. approx: |v - value| <= abs or rel*|value|;
# min/max are inclusive bounds; range is [low, high].
ACCEPTANCE_MANIFEST = """
relaxation:
  subcommand: relaxation
  checks:
    - {key: linear_fit_r2, min: 0.999}
    - {key: equilibration_time_5K_s, approx: 39.0e-9, rel: 0.01}
    - {key: empirical_upward_time_1K_s, approx: 2.0e-6, rel: 0.05}
    - {key: empirical_upward_time_0p26K_s, approx: 2.0e-3, rel: 0.05}
thermal:
  subcommand: thermal
  checks:
    - {key: polarization_min, min: 0.99}
    - {key: delta_fit_GHz, approx: 48.0, rel: 0.01}
extinction:
  subcommand: extinction
  checks:
    - {key: cooperativity, approx: 1.03, abs: 0.01}
    - {key: linear_vs_full_max_diff, max: 1.0e-4}
    - {key: extinction, approx: 0.38, abs: 0.05}
    - {key: efficiency, range: [0.0, 1.0]}
spectrum:
  subcommand: spectrum
  checks:
    - {key: n_dips, approx: 3, abs: 0}
    - {key: max_position_error_GHz, max: 0.15}
saturation:
  subcommand: saturation
  checks:
    - {key: half_saturation_ratio, range: [0.5, 2.0]}
    - {key: strong_drive_depth_ratio, max: 0.05}
g2:
  subcommand: g2
  checks:
    - {key: g2_scattered_zero, max: 0.5}
    - {key: g2_transmitted_zero, min: 1.5}
    - {key: g2_tail_max_deviation, max: 2.0e-3}
hom:
  subcommand: hom
  checks:
    - {key: ideal_parallel_zero, approx: 0.0, abs: 1.0e-6}
    - {key: ideal_perp_zero, approx: 0.5, abs: 1.0e-6}
    - {key: fitted_parallel_zero, approx: 0.26, abs: 0.05}
    - {key: fitted_perp_zero, approx: 0.66, abs: 0.08}
    - {key: beat_period_ns, approx: 19.2, abs: 0.5}
raman:
  subcommand: raman
  checks:
    - {key: max_position_error_Hz, max: 1.0}
    - {key: tuning_range_GHz, min: 20.0}
superradiance:
  subcommand: superradiance
  checks:
    - {key: ratio, approx: 2.0, abs: 1.0e-6}
    - {key: scan_ratio_min, min: 0.999999}
    - {key: scan_ratio_max, max: 2.000001}
waveguide:
  subcommand: waveguide
  checks:
    - {key: single_g2_zero, approx: 0.16, abs: 1.0e-3}
    - {key: tuned_g2_zero, approx: 0.98, abs: 0.05}
    - {key: untuned_g2_zero, approx: 0.63, abs: 0.03}
spin:
  subcommand: spin
  checks:
    - {key: t2star_rel_error, max: 0.01}
    - {key: mc_t2_max_rel_error, max: 0.05}
    - {key: oracle_beta, approx: 0.667, abs: 0.05}
    - {key: beta, range: [0.97, 1.07]}
    - {key: t2_n32_ms, approx: 13.0, abs: 2.0}
ensemble:
  subcommand: ensemble
  checks:
    - {key: inhomogeneous_fwhm_rel_error, max: 0.05}
"""

TARGETS = yaml.safe_load(ACCEPTANCE_MANIFEST)


def evaluate_check(check, summary):
    """(passed, value, expected, diagnostic) for one check against a summary dict."""
    key = check['key']
    if key not in summary or summary[key] is None:
        return False, None, _expected(check), f'{key} missing from summary'
    value = float(summary[key])
    if math.isnan(value):
        return False, value, _expected(check), f'{key} is NaN'
    if 'approx' in check:
        target = float(check['approx'])
        tol = float(check.get('abs', 0.0)) + float(check.get('rel', 0.0)) * abs(target)
        ok = abs(value - target) <= tol
    elif 'range' in check:
        low, high = (float(x) for x in check['range'])
        ok = low <= value <= high
    elif 'min' in check:
        ok = value >= float(check['min'])
    else:
        ok = value <= float(check['max'])
    diagnostic = '' if ok else f'{key}={value:.6g} outside {_expected(check)}'
    return ok, value, _expected(check), diagnostic


def _expected(check):
    if 'approx' in check:
        if 'rel' in check:
            return f"{check['approx']} ± {float(check['rel']) * 100:g}%"
        return f"{check['approx']} ± {check.get('abs', 0)}"
    if 'range' in check:
        low, high = check['range']
        return f'[{low}, {high}]'
    if 'min' in check:
        return f">= {check['min']}"
    return f"<= {check['max']}"


@dataclass
class AcceptanceReport:
    rows: list = field(default_factory=list)

    @property
    def passed(self):
        return bool(self.rows) and all(r['passed'] for r in self.rows)

    def to_frame(self):
        return pd.DataFrame(self.rows, columns=['target', 'key', 'value', 'expected', 'passed', 'diagnostic'])

    def failures(self):
        return [r for r in self.rows if not r['passed']]


def _has_run(path):
    return (path / SUMMARY_FILE).is_file() or (path / ERROR_FILE).is_file()


def _run_dirs(root):
    root = Path(root)
    if not root.is_dir():
        raise ArtifactError(f'artifact directory not found: {root}', path=str(root))
    if (root / SUMMARY_FILE).is_file():
        return [(None, root)]
    found = sorted((p.name, p) for p in root.iterdir() if p.is_dir() and _has_run(p))
    if not found:
        raise ArtifactError(f'no run artifacts (summary.json) under {root}', path=str(root))
    return found


def _targets_for(name, summary):
    if name in TARGETS:
        return [name]
    sub = summary.get('subcommand')
    return [t for t, target in TARGETS.items() if target['subcommand'] == sub]


def compare_acceptance(artifact_dir):
    """Per-target pass/fail table for a reproduce root or a single run directory."""
    report = AcceptanceReport()
    for name, run_dir in _run_dirs(artifact_dir):
        if not (run_dir / SUMMARY_FILE).is_file():
            error = read_json(run_dir / ERROR_FILE)
            message = error.get('message', 'run failed')
            report.rows.append({
                'target': name, 'key': 'run', 'value': None, 'expected': 'completed run',
                'passed': False, 'diagnostic': f"{error.get('code', 'ERROR')}: {message}",
            })
            logger.warning('%s: run failed: %s', name, message)
            continue
        summary = read_summary(run_dir)
        targets = _targets_for(name, summary)
        if not targets:
            logger.warning('No acceptance target for %s (subcommand %s)', run_dir, summary.get('subcommand'))
        for target in targets:
            for check in TARGETS[target]['checks']:
                ok, value, expected, diagnostic = evaluate_check(check, summary)
                report.rows.append({
                    'target': target, 'key': check['key'], 'value': value,
                    'expected': expected, 'passed': ok, 'diagnostic': diagnostic,
                })
                if not ok:
                    logger.warning('%s: %s', target, diagnostic)
    return report
