"""On-disk formats: binary field checkpoints, CSV series, JSON summaries, manifests.

Field files are a 16-byte header (b'DMNLSFLD', uint32 version, uint32
reserved), then uint32 dimension, uint32 points_per_axis, float64
box_length, float64 time, then little-endian complex128 values in
row-major order.
"""

import csv
from datetime import datetime, timezone
import json
import logging
import math
import os
import struct

import numpy as np

from spectral import CorruptFieldError, make_grid


logger = logging.getLogger(__name__)

VERSION = '0.1.0'

MAGIC = b'DMNLSFLD'
FORMAT_VERSION = 1
HEADER = struct.Struct('<8sII')
METADATA = struct.Struct('<IIdd')


def write_field(path, grid, t, u):
    u = grid.check_field(u)
    with open(path, 'wb') as f:
        f.write(HEADER.pack(MAGIC, FORMAT_VERSION, 0))
        f.write(METADATA.pack(grid.dimension, grid.points_per_axis, grid.box_length, float(t)))
        f.write(np.ascontiguousarray(u, dtype='<c16').tobytes())


def read_field(path):
    """Returns (grid, t, u)."""
    with open(path, 'rb') as f:
        data = f.read()
    if len(data) < HEADER.size + METADATA.size:
        raise CorruptFieldError(f'{path}: file too short for a field header')
    magic, version, _ = HEADER.unpack_from(data)
    if magic != MAGIC:
        raise CorruptFieldError(f'{path}: bad magic {magic!r}')
    if version != FORMAT_VERSION:
        raise CorruptFieldError(f'{path}: unsupported format version {version}')
    dimension, n, box_length, t = METADATA.unpack_from(data, HEADER.size)
    try:
        grid = make_grid(dimension, n, box_length)
    except ValueError as e:
        raise CorruptFieldError(f'{path}: {e}')
    body = data[HEADER.size + METADATA.size:]
    if len(body) != grid.size * 16:
        raise CorruptFieldError(f'{path}: expected {grid.size * 16} bytes of data, found {len(body)}')
    u = np.frombuffer(body, dtype='<c16').reshape(grid.shape).astype(complex)
    if not np.all(np.isfinite(u)):
        raise CorruptFieldError(f'{path}: field contains NaN or Inf values')
    return grid, t, u


def format_value(v):
    if v is None:
        return ''
    if isinstance(v, (bool, np.bool_)):
        return 'true' if v else 'false'
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), '.17g')
    return str(v)


def write_csv(path, columns, rows):
    with open(path, 'w', newline='') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(columns)
        for row in rows:
            writer.writerow([format_value(v) for v in row])


def parse_value(v):
    if v == '':
        return None
    if v in ('true', 'false'):
        return v == 'true'
    try:
        return float(v)
    except ValueError:
        return v


def read_csv(path):
    with open(path, newline='') as f:
        reader = csv.reader(f)
        header = next(reader)
        rows = [[parse_value(v) for v in row] for row in reader]
    return header, rows


def write_series(path, series):
    write_csv(path, series.columns(), series.rows())


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        # JSON has no inf/nan.
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    return obj


def write_json(path, obj):
    with open(path, 'w') as f:
        json.dump(_jsonable(obj), f, indent=2, sort_keys=True)
        f.write('\n')


def now():
    return datetime.now(timezone.utc).isoformat()


class RunOutput:
    """Files of one run. The manifest is written once, by finalize()."""

    def __init__(self, output_dir, config_sha256, config_dict):
        self.output_dir = output_dir
        self.config_sha256 = config_sha256
        self.config_dict = config_dict
        self.files = []
        self.start_time = now()
        self.finalized = False
        os.makedirs(output_dir, exist_ok=True)

    def path(self, name):
        if name in self.files:
            raise ValueError(f'{name} was already written in this run')
        self.files.append(name)
        return os.path.join(self.output_dir, name)

    def csv(self, name, columns, rows):
        write_csv(self.path(name), columns, rows)

    def series(self, name, series):
        write_series(self.path(name), series)

    def json(self, name, obj):
        write_json(self.path(name), obj)

    def field(self, name, grid, t, u):
        write_field(self.path(name), grid, t, u)

    def finalize(self, status, failing_stage=None, error=None, checks=None):
        if self.finalized:
            raise RuntimeError('Manifest already written')
        manifest = {
            'config_sha256': self.config_sha256,
            'version': VERSION,
            'start_time': self.start_time,
            'end_time': now(),
            'status': status,
            'failing_stage': failing_stage,
            'error': error,
            'files': list(self.files),
            'checks': checks or {},
            'config': self.config_dict,
        }
        write_json(os.path.join(self.output_dir, 'manifest.json'), manifest)
        self.finalized = True
        missing = [f for f in self.files if not os.path.exists(os.path.join(self.output_dir, f))]
        if missing:
            logger.warning(f'Manifest lists missing files: {missing}')
        return manifest
