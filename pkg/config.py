"""Run configuration: TOML in, validated dataclasses out, TOML back.

Every preset has its own defaults; a config file only needs to name the
preset and override what differs. Unknown keys are errors.
"""

from dataclasses import asdict, dataclass, field
import copy
import hashlib
import logging
import math
import os
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from typing import Dict, List

import tomli_w

from dynamics import DEFOCUSING, FOCUSING, ModelParams, SIGNS, StepperConfig
from exponents import (
    INTERCRITICAL, MASS_SUBCRITICAL, P0, classify, subcritical_triple,
)
from spectral import is_power_of_two, make_grid


logger = logging.getLogger(__name__)


class ConfigError(ValueError):
    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__('Invalid configuration:\n' + '\n'.join(f'  - {e}' for e in self.errors))


GAUSSIAN = 'gaussian'
PLANE_WAVE = 'plane_wave'
CUSTOM_FILE = 'custom_file'
INITIAL_KINDS = (GAUSSIAN, PLANE_WAVE, CUSTOM_FILE)
NORMALIZE_NORMS = ('L2', 'H_s_c', 'FH_gamma', 'Sigma')


@dataclass
class ModelSection:
    dimension: int = 1
    power: float = 6.0
    sign: str = DEFOCUSING
    sigma_nodes: int = 16
    coupling: float = 1.0

    def params(self):
        return ModelParams.with_nodes(
            self.dimension, self.power, self.sign, self.sigma_nodes, self.coupling
        )


@dataclass
class GridSection:
    points_per_axis: int = 2048
    box_length: float = 256.0


@dataclass
class InitialData:
    kind: str = GAUSSIAN
    amplitude: float = 1.0
    width: float = 1.0
    center: List[float] = field(default_factory=lambda: [0.0])
    velocity: List[float] = field(default_factory=lambda: [0.0])
    mode: List[int] = field(default_factory=lambda: [1])
    path: str = ''
    # 0 leaves the amplitude alone; otherwise rescale to this norm.
    normalize_to: float = 0.0
    normalize_norm: str = 'L2'


@dataclass
class Schedule:
    """Checkpoints every `spacing` from 0 to t_final, or the explicit `times`."""
    spacing: float = 0.1
    times: List[float] = field(default_factory=list)

    def checkpoint_times(self, t_final):
        if self.times:
            return sorted(self.times, key=lambda t: abs(t))
        n = int(round(abs(t_final) / self.spacing))
        direction = -1 if t_final < 0 else 1
        times = [direction * k * self.spacing for k in range(n + 1)]
        if not math.isclose(abs(times[-1]), abs(t_final), rel_tol=0, abs_tol=1e-12):
            times.append(t_final)
        else:
            times[-1] = t_final
        return times


@dataclass
class RunConfig:
    preset: str
    model: ModelSection
    grid: GridSection
    stepper: StepperConfig
    initial_data: InitialData
    schedule: Schedule
    t_final: float = 1.0
    output_dir: str = 'runs/out'
    rng_seed: int = 0
    save_fields: bool = False
    hard_fail: List[str] = field(default_factory=list)
    options: Dict[str, object] = field(default_factory=dict)

    def params(self):
        return self.model.params()

    def make_grid(self):
        return make_grid(self.model.dimension, self.grid.points_per_axis, self.grid.box_length)

    def checkpoint_times(self):
        return self.schedule.checkpoint_times(self.t_final)

    def to_dict(self):
        d = asdict(self)
        checks = {'hard_fail': d.pop('hard_fail')}
        d['checks'] = checks
        return d

    def sha256(self):
        return hashlib.sha256(serialize(self).encode()).hexdigest()


# Checks each preset knows about; the first group is hard-fail by default.
PRESET_CHECKS = {
    'free_sanity': (['mass_constant', 'kinetic_constant', 'Ju_constant'], []),
    'small_data_scatter_intercritical': (
        ['cauchy_L2_monotone', 'cauchy_H_s_c_monotone', 'final_difference'], ['boundary_mass'],
    ),
    'small_data_scatter_subcritical': (
        ['cauchy_FH_gamma_monotone', 'final_difference'], ['cauchy_L2_monotone', 'boundary_mass'],
    ),
    'large_data_scatter': (
        ['cauchy_L2_monotone', 'spacetime_tail'], ['conservation', 'boundary_mass'],
    ),
    'pce_check': (
        ['best_variant_residual', 'variant_separation'],
        ['refinement_order', 'good_sign', 'boundary_mass'],
    ),
    'decay_rates': (['Ju_decay_bound', 'w_decay_bound'], ['conservation', 'boundary_mass']),
    'nonscattering': (['derivative_exponent', 'overlap_increasing'], ['boundary_mass']),
    'time_reversal': (['field_deviation', 'energy_deviation'], []),
    'blowup_dichotomy': (
        ['small_global', 'large_blowup_forward', 'large_blowup_backward', 'bracket'], [],
    ),
    'ground_state': (
        ['monotone', 'gradient_check', 'el_residual'],
        ['basin_agreement', 'truncation_convergence', 'node_convergence', 'restart_fixed_point',
         'threshold_rescaling'],
    ),
    'exponents_table': (['admissibility', 'identities', 'golden_values'], []),
    'conservation': (['mass_drift', 'energy_drift'], ['boundary_mass']),
}

PRESETS = tuple(PRESET_CHECKS)

# Section overrides layered on top of the dataclass defaults.
PRESET_DEFAULTS = {
    'free_sanity': {
        'model': {'coupling': 0.0},
        'grid': {'points_per_axis': 1024, 'box_length': 256.0},
        't_final': 5.0,
        'schedule': {'spacing': 0.5},
        'options': {'tolerance': 1e-10},
    },
    'conservation': {
        'grid': {'points_per_axis': 256, 'box_length': 64.0},
        'initial_data': {'width': 2.0},
        't_final': 10.0,
        'schedule': {'spacing': 0.5},
        'options': {'mass_tolerance': 1e-8, 'energy_tolerance': 1e-6},
    },
    'small_data_scatter_intercritical': {
        'model': {'power': 5.0},
        'grid': {'points_per_axis': 2048, 'box_length': 512.0},
        'initial_data': {'width': 4.0, 'normalize_to': 0.1, 'normalize_norm': 'H_s_c'},
        't_final': 50.0,
        'stepper': {'dt': 5e-3},
        'schedule': {'spacing': 1.0},
        'options': {'transient': 1.0, 'final_ratio': 1e-3},
    },
    'small_data_scatter_subcritical': {
        'model': {'power': 3.0},
        'grid': {'points_per_axis': 2048, 'box_length': 512.0},
        'initial_data': {'width': 4.0, 'normalize_to': 0.1, 'normalize_norm': 'FH_gamma'},
        't_final': 50.0,
        'stepper': {'dt': 5e-3},
        'schedule': {'spacing': 1.0},
        'options': {'transient': 1.0, 'final_ratio': 1e-3},
    },
    'large_data_scatter': {
        'model': {'power': 6.0},
        'grid': {'points_per_axis': 2048, 'box_length': 512.0},
        'initial_data': {'width': 2.0},
        't_final': 20.0,
        'stepper': {'dt': 2e-3},
        'schedule': {'spacing': 0.5},
        'options': {'transient': 2.0, 'tail_fraction': 0.05},
    },
    'pce_check': {
        'model': {'power': 6.0, 'sigma_nodes': 32},
        'grid': {'points_per_axis': 2048, 'box_length': 256.0},
        't_final': 4.05,
        'schedule': {'spacing': 0.025},
        'options': {
            'window': [1.0, 4.0],
            'residual_tolerance': 1e-3,
            'separation': 10.0,
            'refinement_range': [3.0, 5.0],
        },
    },
    'decay_rates': {
        'model': {'power': 6.0},
        'grid': {'points_per_axis': 2048, 'box_length': 1024.0},
        'initial_data': {'width': 2.0},
        't_final': 50.0,
        'stepper': {'dt': 2e-3},
        'schedule': {'spacing': 0.5},
        'options': {'window': [5.0, 50.0], 'slack': 0.1},
    },
    'nonscattering': {
        'model': {'power': 1.0},
        'grid': {'points_per_axis': 4096, 'box_length': 2048.0},
        # Small enough that the long-range phase λ|φ̂|^p√(2t) stays below ~0.4 by t=100.
        'initial_data': {'width': 2.0, 'amplitude': 0.02},
        't_final': 100.0,
        'stepper': {'dt': 1e-2},
        'schedule': {'spacing': 1.0},
        'options': {'window': [10.0, 100.0], 'exponent_range': [-0.65, -0.35]},
    },
    'time_reversal': {
        'model': {'power': 10.0, 'sign': FOCUSING},
        'grid': {'points_per_axis': 1024, 'box_length': 64.0},
        'initial_data': {'amplitude': 0.8},
        't_final': 1.0,
        'schedule': {'spacing': 0.1},
        'options': {'field_tolerance': 1e-5, 'energy_tolerance': 1e-6},
    },
    'blowup_dichotomy': {
        'model': {'power': 10.0, 'sign': FOCUSING, 'sigma_nodes': 64},
        'grid': {'points_per_axis': 4096, 'box_length': 512.0},
        't_final': 20.0,
        'stepper': {
            'adaptive': True, 'dt': 1e-3, 'tol': 1e-8,
            'resolution_fraction': 0.25, 'max_steps': 200000,
        },
        'schedule': {'spacing': 1.0},
        'options': {
            'lambda_small': 0.5,
            'lambda_large': 3.0,
            'large_t_final': 2.0,
            'bisection_t_final': 5.0,
            'bracket_factor': 2.0,
            'small_gradient_factor': 10.0,
            'ground_state_json': '',
        },
    },
    'ground_state': {
        'model': {'power': 10.0},
        'grid': {'points_per_axis': 1024, 'box_length': 256.0},
        'options': {
            'S': 8.0,
            'nodes_per_unit': 8,
            'max_iter': 2000,
            'directions': 10,
            'fd_epsilon': 1e-4,
            'gradient_tolerance': 1e-4,
            'el_tolerance': 1e-3,
            'basin_tolerance': 1e-4,
            'truncation_tolerance': 1e-2,
            'node_tolerance': 1e-6,
            'restart_tolerance': 1e-9,
            'rescale': 3.7,
            'threshold_tolerance': 1e-3,
        },
    },
    'exponents_table': {
        'options': {
            'dimensions': [1, 2, 3],
            'powers': [0.5, 1.0, 1.5, 2.0, 3.0, 4.0, 5.0, 5.3, 6.0, 8.0, 10.0],
        },
    },
}

TOP_LEVEL_KEYS = {
    'preset', 'model', 'grid', 'stepper', 'initial_data', 'schedule', 't_final',
    'output_dir', 'rng_seed', 'save_fields', 'checks', 'options',
}
SECTIONS = {
    'model': ModelSection,
    'grid': GridSection,
    'stepper': StepperConfig,
    'initial_data': InitialData,
    'schedule': Schedule,
}


def _section_keys(cls):
    return set(cls.__dataclass_fields__)


def _merge(base, override):
    out = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


def _build(cls, values, name, errors):
    unknown = set(values) - _section_keys(cls)
    for key in sorted(unknown):
        errors.append(f'Unknown key {name}.{key}')
    kwargs = {k: v for k, v in values.items() if k not in unknown}
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as e:
        errors.append(f'[{name}] {e}')
        return None


def _as_float_list(values, n):
    values = list(values) if isinstance(values, (list, tuple)) else [values]
    if len(values) == 1 and n > 1:
        values = values * n
    return [float(v) for v in values]


def from_dict(data, base_dir='.'):
    """Validate a parsed TOML document. Raises ConfigError listing every problem."""
    errors = []
    preset = data.get('preset')
    if preset not in PRESET_CHECKS:
        raise ConfigError([f'preset must be one of {", ".join(PRESETS)}, got {preset!r}'])

    for key in sorted(set(data) - TOP_LEVEL_KEYS):
        errors.append(f'Unknown key {key}')

    defaults = PRESET_DEFAULTS.get(preset, {})
    merged = _merge(defaults, {k: v for k, v in data.items() if k in TOP_LEVEL_KEYS})

    sections = {
        name: _build(cls, merged.get(name, {}), name, errors)
        for name, cls in SECTIONS.items()
    }
    model, grid, stepper, initial, schedule = (sections[n] for n in SECTIONS)

    option_defaults = defaults.get('options', {})
    options = dict(option_defaults)
    for key, value in merged.get('options', {}).items():
        if key not in option_defaults:
            errors.append(f'Unknown key options.{key} for preset {preset}')
        else:
            options[key] = value

    primary, secondary = PRESET_CHECKS[preset]
    checks = merged.get('checks', {})
    for key in sorted(set(checks) - {'hard_fail'}):
        errors.append(f'Unknown key checks.{key}')
    hard_fail = list(checks.get('hard_fail', primary))
    for name in hard_fail:
        if name not in primary + secondary:
            errors.append(f'Unknown check {name!r} for preset {preset}')

    t_final = merged.get('t_final', 1.0)
    if not isinstance(t_final, (int, float)) or t_final == 0:
        errors.append(f't_final must be a nonzero number, got {t_final!r}')
        t_final = 1.0
    t_final = float(t_final)

    if model:
        errors += _check_model(model)
    if grid and not (is_power_of_two(grid.points_per_axis) and grid.points_per_axis >= 16):
        errors.append(f'grid.points_per_axis must be a power of two >= 16, got {grid.points_per_axis}')
    if grid and not grid.box_length > 0:
        errors.append(f'grid.box_length must be positive, got {grid.box_length}')
    if initial and model:
        errors += _check_initial(initial, model.dimension, base_dir)
    if schedule:
        errors += _check_schedule(schedule, t_final)
    if model:
        errors += _check_preset(preset, model, t_final, options)

    if errors:
        raise ConfigError(errors)

    config = RunConfig(
        preset=preset,
        model=model,
        grid=grid,
        stepper=stepper,
        initial_data=initial,
        schedule=schedule,
        t_final=t_final,
        output_dir=str(merged.get('output_dir', f'runs/{preset}')),
        rng_seed=int(merged.get('rng_seed', 0)),
        save_fields=bool(merged.get('save_fields', False)),
        hard_fail=hard_fail,
        options=options,
    )
    logger.debug(f'Parsed {preset} config')
    return config


def _check_model(model):
    errors = []
    if model.dimension not in (1, 2):
        errors.append(f'model.dimension must be 1 or 2, got {model.dimension}')
    if not model.power > 0:
        errors.append(f'model.power must be positive, got {model.power}')
    if model.sign not in SIGNS:
        errors.append(f'model.sign must be defocusing or focusing, got {model.sign!r}')
    if not isinstance(model.sigma_nodes, int) or model.sigma_nodes < 1:
        errors.append(f'model.sigma_nodes must be a positive integer, got {model.sigma_nodes!r}')
    if model.coupling < 0:
        errors.append(f'model.coupling must be nonnegative, got {model.coupling}')
    return errors


def _check_initial(initial, dimension, base_dir):
    errors = []
    if initial.kind not in INITIAL_KINDS:
        errors.append(f'initial_data.kind must be one of {", ".join(INITIAL_KINDS)}, got {initial.kind!r}')
    if initial.kind == GAUSSIAN and not initial.width > 0:
        errors.append(f'initial_data.width must be positive, got {initial.width}')
    for name in ('center', 'velocity', 'mode'):
        value = getattr(initial, name)
        if not isinstance(value, list) or len(value) not in (1, dimension):
            errors.append(f'initial_data.{name} must be a list of 1 or {dimension} numbers')
    if initial.kind == CUSTOM_FILE:
        if not initial.path:
            errors.append('initial_data.path is required for custom_file')
        else:
            initial.path = os.path.abspath(os.path.join(base_dir, initial.path))
            if not os.path.exists(initial.path):
                errors.append(f'initial_data.path {initial.path} does not exist')
    if initial.normalize_to < 0:
        errors.append(f'initial_data.normalize_to must be nonnegative, got {initial.normalize_to}')
    if initial.normalize_norm not in NORMALIZE_NORMS:
        errors.append(f'initial_data.normalize_norm must be one of {", ".join(NORMALIZE_NORMS)}')
    return errors


def _check_schedule(schedule, t_final):
    errors = []
    if not schedule.times and not schedule.spacing > 0:
        errors.append(f'schedule.spacing must be positive, got {schedule.spacing}')
    lo, hi = min(0.0, t_final), max(0.0, t_final)
    for t in schedule.times:
        if not lo <= t <= hi:
            errors.append(f'Checkpoint {t} lies outside [{lo}, {hi}]')
    if len(set(schedule.times)) != len(schedule.times):
        errors.append('schedule.times contains duplicates')
    return errors


def _check_preset(preset, model, t_final, options):
    d, p = model.dimension, model.power
    errors = []

    def need(cond, message):
        if not cond:
            errors.append(f'{preset} {message}')

    if preset == 'blowup_dichotomy':
        need(model.sign == FOCUSING, 'requires focusing sign')
        need(p > 8, f'requires p > 8, got p={p}')
        need(d == 1, 'requires d = 1')
        need(0 < options['lambda_small'] < options['lambda_large'], 'requires 0 < lambda_small < lambda_large')
    elif preset == 'ground_state':
        need(d == 1, 'requires d = 1')
        need(p > 4, f'requires p > 4, got p={p}')
    elif preset == 'small_data_scatter_intercritical':
        need(classify(d, p) == INTERCRITICAL, f'requires intercritical p, got p={p} in d={d}')
    elif preset == 'small_data_scatter_subcritical':
        need(classify(d, p) == MASS_SUBCRITICAL and subcritical_triple(d, p) is not None,
             f'requires mass-subcritical p >= 4/(d+2), got p={p} in d={d}')
    elif preset == 'large_data_scatter':
        need(model.sign == DEFOCUSING, 'requires defocusing sign')
        if d == 1:
            need(p > P0, f'requires p > 3+sqrt(5) in d=1, got p={p}')
        else:
            need(p > 4 / d, f'requires p > 4/d, got p={p}')
    elif preset == 'decay_rates':
        need(model.sign == DEFOCUSING, 'requires defocusing sign')
        need(p > 4 / d, f'requires p > 4/d, got p={p}')
    elif preset == 'pce_check':
        lo, hi = options['window']
        need(0 < lo < hi < t_final, f'window must satisfy 0 < lo < hi < t_final, got {options["window"]}')

    if preset in ('decay_rates', 'nonscattering') and options['window'][1] > t_final:
        errors.append(f'{preset} window must end by t_final')
    if preset in ('time_reversal', 'pce_check', 'decay_rates', 'nonscattering') and t_final < 0:
        errors.append(f'{preset} requires t_final > 0')
    return errors


def parse_config(path):
    with open(path, 'rb') as f:
        try:
            data = tomllib.load(f)
        except tomllib.TOMLDecodeError as e:
            raise ConfigError([f'{path}: {e}'])
    return from_dict(data, base_dir=os.path.dirname(os.path.abspath(path)))


def parse_string(text, base_dir='.'):
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as e:
        raise ConfigError([str(e)])
    return from_dict(data, base_dir)


def serialize(config):
    """TOML text with every default spelled out."""
    return tomli_w.dumps(config.to_dict())
