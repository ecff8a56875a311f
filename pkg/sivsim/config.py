"""Scenario files, physical units, presets and environment settings.

A scenario is a YAML mapping. Parameter sections start from a named preset
and accept overrides; every quantity is either a bare SI number or a string
with a unit suffix ("45 GHz", "1.73 ns", "300 mK"). Frequencies are stored
in Hz, times in s, temperatures in K, fields in T and angles in rad.
"""
import difflib
import itertools
import logging
import math
import os
import re
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np
import yaml

from .cavity_qed import CAVITY_PRESETS, NANOCAVITY_G, CavityParams, CoupledSystem, with_emitters
from .errors import ConfigError, ParameterError, UnitError, UnknownKeyError
from .siv_model import (
    BATH_PRESETS,
    EMITTER_PRESETS,
    LEVEL_PRESETS,
    EmitterOpticalParams,
    PhononBathParams,
    SiVLevelParams,
)
from .spin_memory import (
    NOISE_PRESETS,
    CompositeNoise,
    OrnsteinUhlenbeck,
    PowerLaw,
    QuasiStatic,
    SpinQubitParams,
    White,
    noise_preset,
)

logger = logging.getLogger('sivsim')

DEFAULT_PRESET = 'siv-bulk'
DEFAULT_OUTPUT_DIR = 'runs'


# -- environment ----------------------------------------------------------------

def output_dir_setting():
    return os.environ.get('SIVSIM_OUTPUT_DIR') or DEFAULT_OUTPUT_DIR


def jobs_setting():
    raw = os.environ.get('SIVSIM_JOBS', '1')
    try:
        jobs = int(raw)
        if jobs <= 0:
            raise ValueError(raw)
    except ValueError:
        logger.warning('Ignoring invalid SIVSIM_JOBS=%r; using 1 worker', raw)
        jobs = 1
    return jobs


def log_level_setting():
    raw = os.environ.get('SIVSIM_LOG_LEVEL', 'INFO').strip().upper()
    level = logging.getLevelName(raw)
    if not isinstance(level, int):
        logger.warning('Ignoring invalid SIVSIM_LOG_LEVEL=%r; using INFO', raw)
        return logging.INFO
    return level


# -- units --------------------------------------------------------------------

UNITS = {
    'frequency': {'Hz': 1.0, 'kHz': 1e3, 'MHz': 1e6, 'GHz': 1e9, 'THz': 1e12},
    'time': {'s': 1.0, 'ms': 1e-3, 'us': 1e-6, 'µs': 1e-6, 'ns': 1e-9, 'ps': 1e-12},
    'temperature': {'K': 1.0, 'mK': 1e-3},
    'field': {'T': 1.0, 'mT': 1e-3, 'G': 1e-4},
    'angle': {'rad': 1.0, 'deg': math.pi / 180},
    'rate': {'1/s': 1.0, '/s': 1.0},
    'angular': {'rad/s': 1.0, 'krad/s': 1e3, 'Mrad/s': 1e6},
    'dimensionless': {},
}

_QUANTITY = re.compile(r'^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?|[-+]?inf)\s*(\S.*?)?\s*$')


def parse_quantity(value, dim, key='value'):
    """Convert a bare number or unit-suffixed string of dimension ``dim`` to SI."""
    if isinstance(value, bool):
        raise UnitError(f"'{key}' expects a {dim} quantity, got a boolean", key=key)
    if isinstance(value, (int, float)):
        return float(value)
    if not isinstance(value, str):
        raise UnitError(f"'{key}' expects a {dim} quantity, got {type(value).__name__}", key=key)
    m = _QUANTITY.match(value)
    if not m:
        raise UnitError(f"cannot parse quantity {value!r} for '{key}'", key=key)
    number, unit = float(m.group(1)), m.group(2)
    if unit is None:
        return number
    table = UNITS[dim]
    if unit in table:
        return number * table[unit]
    for other, units in UNITS.items():
        if unit in units:
            raise UnitError(f"unit mismatch for '{key}': {unit!r} is a {other} unit, expected {dim}",
                            key=key, unit=unit, expected=dim)
    raise UnitError(f"unknown unit {unit!r} for '{key}'", key=key, unit=unit)


def _quantity_field(dim, default):
    return field(default=default, metadata={'dim': dim})


def _int_field(default):
    return field(default=default, metadata={'dim': 'int'})


# -- section records ----------------------------------------------------------

@dataclass(frozen=True)
class EmitterCoupling:
    detuning: float = _quantity_field('frequency', 0.0)
    g: float = _quantity_field('frequency', None)
    cooperativity: float = _quantity_field('dimensionless', None)


@dataclass(frozen=True)
class SystemSection:
    emitters: tuple = field(default=(EmitterCoupling(0.0, NANOCAVITY_G),), metadata={'items': EmitterCoupling})


@dataclass(frozen=True)
class DriveSection:
    detuning: float = _quantity_field('frequency', 0.0)
    photons: float = _quantity_field('dimensionless', 1e-4)
    amplitude: float = _quantity_field('frequency', None)


@dataclass(frozen=True)
class RelaxationRun:
    t_min: float = _quantity_field('temperature', 4.5)
    t_max: float = _quantity_field('temperature', 22.0)
    n_points: int = _int_field(30)
    trajectory_points: int = _int_field(201)
    initial_branch: str = 'UB'


@dataclass(frozen=True)
class ThermalRun:
    delta: float = _quantity_field('frequency', 48e9)
    t_min: float = _quantity_field('temperature', 0.1)
    t_max: float = _quantity_field('temperature', 10.0)
    n_points: int = _int_field(40)
    polarization_limit: float = _quantity_field('temperature', 0.5)


@dataclass(frozen=True)
class SpectrumRun:
    span: float = _quantity_field('frequency', 100e9)
    step: float = _quantity_field('frequency', 0.01e9)
    weak_drive: bool = True
    min_depth: float = _quantity_field('dimensionless', 1e-3)


@dataclass(frozen=True)
class ExtinctionRun:
    target: float = _quantity_field('dimensionless', 0.38)
    efficiency: float = _quantity_field('dimensionless', None)
    check_probes: tuple = _quantity_field('frequency', (0.0, 0.15e9, -0.4e9, 20e9))


@dataclass(frozen=True)
class SaturationRun:
    max_amplitude: float = _quantity_field('frequency', 18e9)
    n_points: int = _int_field(14)
    reference_lifetime: float = _quantity_field('time', 300e-12)


@dataclass(frozen=True)
class G2Run:
    tau_max: float = _quantity_field('time', 12e-9)
    n_points: int = _int_field(241)
    ports: tuple = ('transmitted', 'scattered')


@dataclass(frozen=True)
class HomRun:
    linewidths: tuple = _quantity_field('frequency', (135e6, 136e6))
    detuning: float = _quantity_field('frequency', 52e6)
    targets: tuple = _quantity_field('dimensionless', (0.26, 0.66))
    uncertainties: tuple = _quantity_field('dimensionless', (0.05, 0.08))
    tau_max: float = _quantity_field('time', 35e-9)
    n_points: int = _int_field(3501)
    timing_jitter: float = _quantity_field('time', 0.3e-9)
    max_jitter: float = _quantity_field('time', 2e-9)
    dark_rate: float = _quantity_field('rate', 0.0)
    coincidence_bin: float = _quantity_field('time', 0.0)


@dataclass(frozen=True)
class RamanRun:
    detuning_min: float = _quantity_field('frequency', -10e9)
    detuning_max: float = _quantity_field('frequency', 10e9)
    n_points: int = _int_field(21)
    drive_rabi: float = _quantity_field('frequency', 1e9)
    width_floor: float = _quantity_field('frequency', 1e6)
    profile_detuning: float = _quantity_field('frequency', 5e9)
    profile_span: float = _quantity_field('frequency', 20e9)
    profile_points: int = _int_field(4001)


@dataclass(frozen=True)
class WaveguideRun:
    timing_jitter: float = _quantity_field('time', 0.2e-9)
    single_target: float = _quantity_field('dimensionless', 0.16)
    dist_target: float = _quantity_field('dimensionless', 0.63)
    tau_max: float = _quantity_field('time', 10e-9)
    n_points: int = _int_field(401)
    raman_detuning: float = _quantity_field('frequency', 3e9)
    transition_offset: float = _quantity_field('frequency', 4e9)


@dataclass(frozen=True)
class SuperradianceRun:
    couplings: tuple = _quantity_field('dimensionless', (1.0, 1.0))
    relative_phase: float = _quantity_field('angle', 0.0)
    scan_points: int = _int_field(11)


@dataclass(frozen=True)
class SpinRun:
    ns: tuple = (1, 2, 4, 8, 16, 32)
    n_points: int = _int_field(60)
    ramsey_noise: str = 'quasi-static-4us'
    ramsey_detuning: float = _quantity_field('frequency', 550e3)
    ramsey_max: float = _quantity_field('time', 12e-6)
    ramsey_points: int = _int_field(601)
    oracle_noise: str = 'ou-slow-bath'
    mc_ns: tuple = (1, 4, 16)
    mc_trajectories: int = _int_field(2000)
    mc_points: int = _int_field(30)
    temperature: float = _quantity_field('temperature', 0.26)
    with_t1: bool = False
    rabi_detuning: float = _quantity_field('frequency', 0.0)
    rabi_max: float = _quantity_field('time', 400e-9)
    rabi_points: int = _int_field(201)


@dataclass(frozen=True)
class EnsembleRun:
    n_emitters: int = _int_field(2000)
    linewidth_mean: float = _quantity_field('frequency', None)
    linewidth_std: float = _quantity_field('frequency', None)
    span: float = _quantity_field('frequency', 80e9)
    spectrum_points: int = _int_field(2001)


RUN_SECTIONS = {
    'relaxation': RelaxationRun,
    'thermal': ThermalRun,
    'spectrum': SpectrumRun,
    'extinction': ExtinctionRun,
    'saturation': SaturationRun,
    'g2': G2Run,
    'hom': HomRun,
    'raman': RamanRun,
    'waveguide': WaveguideRun,
    'superradiance': SuperradianceRun,
    'spin': SpinRun,
    'ensemble': EnsembleRun,
}

# physical dimension of each field of the physics records
RECORD_SECTIONS = {
    'level': (SiVLevelParams, {
        'delta_gs': 'frequency', 'strain_splitting': 'frequency', 'b_field': 'field',
        'spin_g_factor': 'dimensionless', 'orbital_quenching': 'dimensionless'}),
    'bath': (PhononBathParams, {'coupling_density_product': 'dimensionless', 'temperature': 'temperature'}),
    'emitter': (EmitterOpticalParams, {
        'zpl_frequency': 'frequency', 'lifetime': 'time', 'gamma_rad': 'frequency',
        'gamma_dephasing': 'frequency', 'zpl_branching': 'dimensionless', 'inhomogeneous_width': 'frequency'}),
    'cavity': (CavityParams, {
        'resonance': 'frequency', 'kappa': 'frequency', 'kappa_in': 'frequency', 'kappa_out': 'frequency'}),
    'qubit': (SpinQubitParams, {
        'transition_frequency': 'frequency', 'rabi_frequency': 'frequency', 't1_floor': 'time'}),
}

NOISE_MODELS = {
    OrnsteinUhlenbeck.model: (OrnsteinUhlenbeck, {'sigma': 'angular', 'tau_c': 'time'}),
    QuasiStatic.model: (QuasiStatic, {'sigma': 'angular'}),
    White.model: (White, {'level': 'rate'}),
    PowerLaw.model: (PowerLaw, {
        'amplitude': 'dimensionless', 'exponent': 'dimensionless',
        'low_cutoff': 'angular', 'high_cutoff': 'angular'}),
}

PRESET_TABLES = {
    'level': LEVEL_PRESETS,
    'bath': BATH_PRESETS,
    'emitter': EMITTER_PRESETS,
    'cavity': CAVITY_PRESETS,
    'noise': dict(NOISE_PRESETS, **{'fitted-cpmg': None}),
}

DEFAULT_QUBIT = SpinQubitParams(transition_frequency=12e9, rabi_frequency=10e6)

TOP_LEVEL_KEYS = (
    ['name', 'preset', 'presets', 'seed', 'output', 'sweep', 'system', 'drive', 'noise']
    + list(RECORD_SECTIONS) + list(RUN_SECTIONS)
)


@dataclass(frozen=True)
class SweepAxis:
    path: str
    values: tuple


@dataclass(frozen=True)
class Scenario:
    name: str
    level: SiVLevelParams
    bath: PhononBathParams
    emitter: EmitterOpticalParams
    cavity: CavityParams
    system: SystemSection
    drive: DriveSection
    noise: object
    qubit: SpinQubitParams
    runs: dict = field(default_factory=dict)
    sweep: tuple = ()
    seed: int = 0
    output: str = None
    presets: dict = field(default_factory=dict, compare=False)

    def run_section(self, name):
        return self.runs.get(name) or RUN_SECTIONS[name]()

    def coupled_system(self):
        return with_emitters(self.cavity, [(e.detuning, e.g) for e in self.system.emitters], self.emitter)

    def bare_cavity(self):
        return CoupledSystem(self.cavity)

    def sweep_points(self):
        """Cartesian product of the sweep axes as lists of (path, value)."""
        if not self.sweep:
            return [[]]
        axes = [[(a.path, v) for v in a.values] for a in self.sweep]
        return [list(p) for p in itertools.product(*axes)]

    def with_overrides(self, assignments):
        scenario = self
        for path, value in assignments:
            scenario = _override(scenario, path, value)
        return scenario

    def to_dict(self):
        data = {'name': self.name, 'seed': self.seed}
        if self.output is not None:
            data['output'] = self.output
        kept = {k: v for k, v in self.presets.items() if k != 'noise'}
        if kept:
            data['presets'] = kept
        for section in RECORD_SECTIONS:
            data[section] = _record_dict(getattr(self, section))
        data['system'] = {'emitters': [{'detuning': e.detuning, 'g': e.g} for e in self.system.emitters]}
        data['drive'] = _record_dict(self.drive)
        data['noise'] = noise_to_dict(self.noise)
        for name, section in sorted(self.runs.items()):
            data[name] = _record_dict(section)
        if self.sweep:
            data['sweep'] = [{'path': a.path, 'values': list(a.values)} for a in self.sweep]
        return data


# -- serialization helpers ----------------------------------------------------

def _plain(value):
    if isinstance(value, (tuple, list)):
        return [_plain(v) for v in value]
    if isinstance(value, np.generic):
        return value.item()
    if hasattr(value, '__dataclass_fields__'):
        return _record_dict(value)
    return value


def _record_dict(record):
    return {f.name: _plain(getattr(record, f.name)) for f in fields(record) if getattr(record, f.name) is not None}


def noise_to_dict(noise):
    if isinstance(noise, CompositeNoise):
        return {'model': noise.model, 'parts': [noise_to_dict(p) for p in noise.parts]}
    return dict(model=noise.model, **_record_dict(noise))


def dump_scenario(scenario):
    """YAML text that parses back to an equal scenario."""
    return yaml.safe_dump(scenario.to_dict(), sort_keys=False, allow_unicode=True)


# -- parsing ------------------------------------------------------------------

class _Source:
    """Composed YAML node tree, used only to report positions."""

    def __init__(self, node, name):
        self.node = node
        self.name = name

    def position(self, path):
        node = self.node
        mark = None
        for part in path:
            if isinstance(node, yaml.MappingNode):
                match = next(((k, v) for k, v in node.value if k.value == part), None)
                if match is None:
                    break
                mark = match[0].start_mark
                node = match[1]
            elif isinstance(node, yaml.SequenceNode) and isinstance(part, int) and part < len(node.value):
                node = node.value[part]
                mark = node.start_mark
            else:
                break
        if mark is None:
            return None, None
        return mark.line + 1, mark.column + 1


def _suggest(key, candidates):
    matches = difflib.get_close_matches(str(key), [str(c) for c in candidates], n=1, cutoff=0.6)
    return matches[0] if matches else None


def _unknown(key, candidates, path, source):
    line, column = source.position(list(path) + [key])
    section = '.'.join(str(p) for p in path) or None
    return UnknownKeyError(key, _suggest(key, candidates), line=line, column=column, section=section)


def _located(error, path, source):
    line, column = source.position(path)
    where = '.'.join(str(p) for p in path)
    error.with_context(path=where, line=line, column=column, source=source.name)
    if line is not None and 'line' not in error.message:
        error.message = f'{error.message} ({where}, line {line}, column {column})'
        error.args = (error.message,)
    return error


def _convert(value, dim, path, source):
    try:
        if isinstance(value, list):
            return tuple(_convert(v, dim, path + [i], source) for i, v in enumerate(value))
        if value is None:
            return None
        if dim == 'int':
            if isinstance(value, bool) or not isinstance(value, int):
                raise ConfigError(f"'{path[-1]}' must be an integer, got {value!r}")
            return value
        if dim is None:
            return value
        return parse_quantity(value, dim, key=str(path[-1]))
    except ConfigError as e:
        raise _located(e, path, source) from None


def _mapping(data, path, source):
    if data is None:
        return {}
    if not isinstance(data, dict):
        line, column = source.position(path)
        raise ConfigError(f"section '{'.'.join(map(str, path))}' must be a mapping", line=line, column=column)
    return data


def _build(cls, data, dims, path, source, base=None):
    data = _mapping(data, path, source)
    names = [f.name for f in fields(cls)]
    for key in data:
        if key not in names:
            raise _unknown(key, names, path, source)
    values = {}
    for f in fields(cls):
        if f.name not in data:
            continue
        dim = dims.get(f.name) if dims is not None else f.metadata.get('dim')
        item_cls = f.metadata.get('items')
        if item_cls is not None:
            items = data[f.name]
            if not isinstance(items, list):
                raise _located(ConfigError(f"'{f.name}' must be a list"), path + [f.name], source)
            values[f.name] = tuple(_build(item_cls, item, None, path + [f.name, i], source)
                                   for i, item in enumerate(items))
        else:
            values[f.name] = _convert(data[f.name], dim, path + [f.name], source)
    try:
        return replace(base, **values) if base is not None else cls(**values)
    except ParameterError as e:
        raise _located(e, path, source) from None
    except TypeError as e:
        raise _located(ConfigError(f'incomplete section: {e}'), path, source) from None


def _preset(section, name, path, source):
    table = PRESET_TABLES[section]
    if name not in table:
        line, column = source.position(path)
        hint = _suggest(name, table)
        msg = f"unknown {section} preset {name!r}" + (f" (did you mean '{hint}'?)" if hint else '')
        raise ConfigError(msg, preset=name, section=section, line=line, column=column)
    if section == 'noise':
        return noise_preset(name)
    return table[name]


def _parse_noise(data, base, path, source):
    data = _mapping(data, path, source)
    if not data:
        return base
    if 'preset' in data:
        extra = [k for k in data if k != 'preset']
        if extra:
            raise _unknown(extra[0], ['preset'], path, source)
        return _preset('noise', data['preset'], path + ['preset'], source)
    model = data.get('model')
    if model == CompositeNoise.model:
        for key in data:
            if key not in ('model', 'parts'):
                raise _unknown(key, ['model', 'parts'], path, source)
        parts = data.get('parts') or []
        return CompositeNoise(tuple(_parse_noise(p, None, path + ['parts', i], source) for i, p in enumerate(parts)))
    if model not in NOISE_MODELS:
        hint = _suggest(model, list(NOISE_MODELS) + [CompositeNoise.model])
        line, column = source.position(path + ['model'])
        msg = f'unknown noise model {model!r}' + (f" (did you mean '{hint}'?)" if hint else '')
        raise ConfigError(msg, line=line, column=column)
    cls, dims = NOISE_MODELS[model]
    body = {k: v for k, v in data.items() if k != 'model'}
    if cls is QuasiStatic and 't2star' in body:
        t2star = _convert(body.pop('t2star'), 'time', path + ['t2star'], source)
        body.setdefault('sigma', math.sqrt(2) / t2star)
    return _build(cls, body, dims, path, source)


def _resolve_couplings(system, cavity, emitter, source):
    resolved = []
    for i, e in enumerate(system.emitters):
        if (e.g is None) == (e.cooperativity is None):
            raise _located(ConfigError('each emitter needs exactly one of g or cooperativity'),
                           ['system', 'emitters', i], source)
        g = e.g
        if g is None:
            g = math.sqrt(e.cooperativity * cavity.kappa * emitter.gamma_total / 4)
        resolved.append(EmitterCoupling(detuning=e.detuning, g=g))
    return SystemSection(tuple(resolved))


def _parse_sweep(data, scenario_sections, source):
    if data is None:
        return ()
    if not isinstance(data, list):
        raise _located(ConfigError('sweep must be a list of {path, values}'), ['sweep'], source)
    axes = []
    for i, axis in enumerate(data):
        axis = _mapping(axis, ['sweep', i], source)
        for key in axis:
            if key not in ('path', 'values'):
                raise _unknown(key, ['path', 'values'], ['sweep', i], source)
        path = axis.get('path')
        values = axis.get('values')
        if not isinstance(path, str) or not isinstance(values, list) or not values:
            raise _located(ConfigError('sweep axis needs a path and a non-empty list of values'), ['sweep', i], source)
        dim = _path_dimension(path, scenario_sections, ['sweep', i, 'path'], source)
        parsed = tuple(_convert(v, dim, ['sweep', i, 'values', j], source) for j, v in enumerate(values))
        if any(isinstance(v, float) and not math.isfinite(v) for v in parsed):
            raise _located(ConfigError(f"sweep values for '{path}' must be finite"), ['sweep', i, 'values'], source)
        axes.append(SweepAxis(path=path, values=parsed))
    return tuple(axes)


def _path_dimension(path, sections, where, source):
    parts = path.split('.')
    if len(parts) != 2:
        raise _located(ConfigError(f"sweep path '{path}' must look like section.field"), where, source)
    section, name = parts
    if section in RECORD_SECTIONS:
        cls, dims = RECORD_SECTIONS[section]
        dim = dims.get(name)
    elif section in RUN_SECTIONS or section == 'drive':
        cls = RUN_SECTIONS.get(section, DriveSection)
        dim = next((f.metadata.get('dim') for f in fields(cls) if f.name == name), None)
    else:
        hint = _suggest(section, sections)
        raise _located(UnknownKeyError(section, hint, section='sweep path'), where, source)
    names = [f.name for f in fields(cls)]
    if name not in names:
        raise _located(UnknownKeyError(name, _suggest(name, names), section=section), where, source)
    return dim


def _override(scenario, path, value):
    section, name = path.split('.')
    if section in RUN_SECTIONS:
        runs = dict(scenario.runs)
        runs[section] = replace(scenario.run_section(section), **{name: value})
        return replace(scenario, runs=runs)
    return replace(scenario, **{section: replace(getattr(scenario, section), **{name: value})})


def parse_scenario_text(text, source_name='<string>'):
    """Parse scenario YAML text into a fully resolved Scenario."""
    try:
        data = yaml.safe_load(text)
        node = yaml.compose(text)
    except yaml.YAMLError as e:
        mark = getattr(e, 'problem_mark', None)
        line = mark.line + 1 if mark else None
        column = mark.column + 1 if mark else None
        problem = getattr(e, 'problem', None) or str(e)
        raise ConfigError(f'malformed scenario {source_name}: {problem}'
                          + (f' at line {line}, column {column}' if line else ''),
                          line=line, column=column, source=source_name) from None
    source = _Source(node, source_name)
    data = _mapping(data, [], source)
    for key in data:
        if key not in TOP_LEVEL_KEYS:
            raise _unknown(key, TOP_LEVEL_KEYS, [], source)

    preset = data.get('preset', DEFAULT_PRESET)
    names = {'level': preset, 'bath': preset, 'emitter': preset, 'cavity': 'nanocavity', 'noise': 'quasi-static-4us'}
    overrides = _mapping(data.get('presets'), ['presets'], source)
    for key, value in overrides.items():
        if key not in names:
            raise _unknown(key, list(names), ['presets'], source)
        names[key] = value

    records = {}
    for section, (cls, dims) in RECORD_SECTIONS.items():
        if section == 'qubit':
            base = DEFAULT_QUBIT
        else:
            where = ['presets', section] if section in overrides else ['preset']
            base = _preset(section, names[section], where, source)
        body = _mapping(data.get(section), [section], source)
        if section == 'cavity' and 'kappa' in body:
            # port rates follow a new total unless given explicitly
            body = dict({'kappa_in': None, 'kappa_out': None}, **body)
        records[section] = _build(cls, body, dims, [section], source, base=base)

    noise_where = ['presets', 'noise'] if 'noise' in overrides else ['noise']
    noise = _parse_noise(data.get('noise'), None, ['noise'], source)
    if noise is None:
        noise = _preset('noise', names['noise'], noise_where, source)

    system = _build(SystemSection, data.get('system'), None, ['system'], source)
    system = _resolve_couplings(system, records['cavity'], records['emitter'], source)
    drive = _build(DriveSection, data.get('drive'), None, ['drive'], source)

    runs = {}
    for name, cls in RUN_SECTIONS.items():
        if name in data:
            runs[name] = _build(cls, data[name], None, [name], source)

    seed = data.get('seed', 0)
    if isinstance(seed, bool) or not isinstance(seed, int) or not 0 <= seed < 2 ** 64:
        raise _located(ConfigError(f'seed must be an unsigned 64-bit integer, got {seed!r}'), ['seed'], source)
    name = data.get('name') or Path(source_name).stem
    output = data.get('output')

    scenario = Scenario(
        name=str(name), system=system, drive=drive, noise=noise, runs=runs,
        sweep=_parse_sweep(data.get('sweep'), TOP_LEVEL_KEYS, source),
        seed=seed, output=None if output is None else str(output), presets=names, **records,
    )
    logger.debug('Parsed scenario %s from %s', scenario.name, source_name)
    return scenario


def parse_scenario(path):
    """Read and resolve a scenario file."""
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f'scenario file not found: {path}', path=str(path))
    return parse_scenario_text(p.read_text(encoding='utf-8'), source_name=str(p))
