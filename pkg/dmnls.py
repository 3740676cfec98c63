#!/usr/bin/env python
"""Command line: dmnls run|exponents|groundstate|batch.

DMNLS_LOG_LEVEL sets the log level (default INFO); DMNLS_WORKERS caps the
number of batch worker processes.
"""

import argparse
from concurrent.futures import ProcessPoolExecutor
import glob
import logging
import os
import sys

from config import ConfigError, parse_config
from exponents import exponent_report
import presets


logger = logging.getLogger('dmnls')


def run_path(path):
    """Parse and run one config file. Returns (exit code, manifest path or None)."""
    try:
        config = parse_config(path)
    except ConfigError as e:
        logger.error(f'{path}: {e}')
        return presets.EXIT_CONFIG_ERROR, None
    code, manifest = presets.run(config)
    logger.info(f'{path}: {manifest["status"]}')
    return code, os.path.join(config.output_dir, 'manifest.json')


def worker_count(jobs):
    cap = os.environ.get('DMNLS_WORKERS')
    n = os.cpu_count() or 1
    if cap:
        try:
            n = int(cap)
        except ValueError:
            raise ConfigError([f'DMNLS_WORKERS must be an integer, got {cap!r}'])
        if n < 1:
            raise ConfigError([f'DMNLS_WORKERS must be positive, got {n}'])
    return max(1, min(n, jobs))


def cmd_run(args):
    code, manifest_path = run_path(args.config)
    if manifest_path:
        print(manifest_path)
    return code


def cmd_exponents(args):
    try:
        report = exponent_report(args.d, args.p)
    except ValueError as e:
        logger.error(str(e))
        return presets.EXIT_CONFIG_ERROR
    print(report.to_json())
    return presets.EXIT_PASS


def cmd_groundstate(args):
    try:
        config = parse_config(args.config)
        if config.preset != 'ground_state':
            raise ConfigError([f'groundstate needs preset = "ground_state", got {config.preset!r}'])
    except ConfigError as e:
        logger.error(str(e))
        return presets.EXIT_CONFIG_ERROR
    code, manifest = presets.run(config)
    if 'ground_state.json' in manifest['files']:
        print(os.path.join(config.output_dir, 'ground_state.json'))
    return code


def cmd_batch(args):
    paths = sorted(glob.glob(os.path.join(args.directory, '*.toml')))
    if not paths:
        logger.error(f'No *.toml files in {args.directory}')
        return presets.EXIT_CONFIG_ERROR

    # Each run owns its output directory.
    owners = {}
    try:
        for path in paths:
            out = os.path.abspath(parse_config(path).output_dir)
            if out in owners:
                raise ConfigError([f'{path} and {owners[out]} both write to {out}'])
            owners[out] = path
        workers = worker_count(len(paths))
    except ConfigError as e:
        logger.error(str(e))
        return presets.EXIT_CONFIG_ERROR

    logger.info(f'Running {len(paths)} configs on {workers} workers')
    with ProcessPoolExecutor(max_workers=workers) as pool:
        results = list(pool.map(run_path, paths))
    for path, (code, _) in zip(paths, results):
        print(f'{code} {path}')
    return max(code for code, _ in results)


def make_parser():
    parser = argparse.ArgumentParser(prog='dmnls', description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('run', help='Run one preset config')
    p.add_argument('config')
    p.set_defaults(func=cmd_run)

    p = sub.add_parser('exponents', help='Print the exponent report for (d, p) as JSON')
    p.add_argument('--d', type=int, required=True)
    p.add_argument('--p', type=float, required=True)
    p.set_defaults(func=cmd_exponents)

    p = sub.add_parser('groundstate', help='Run a ground_state config')
    p.add_argument('config')
    p.set_defaults(func=cmd_groundstate)

    p = sub.add_parser('batch', help='Run every *.toml in a directory')
    p.add_argument('directory')
    p.set_defaults(func=cmd_batch)
    return parser


def main(argv=None):
    logging.basicConfig(
        level=os.environ.get('DMNLS_LOG_LEVEL', 'INFO').upper(),
        format='%(asctime)s [%(levelname)s] %(name)s: %(message)s',
    )
    args = make_parser().parse_args(argv)
    return args.func(args)


if __name__ == '__main__':
    sys.exit(main())
