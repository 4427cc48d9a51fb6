"""Run configuration: defaults, then a flat ``key = value`` file, then the THREADS/OUTPUT_DIR environment
variables, then command-line flags."""
import os
import ast
import numpy as np
from pathlib import Path
from logging import getLogger
from rebar import dotdict
from . import fuchsian, elliptic
from .common import ConfigError

log = getLogger(__name__)

class RunConfig(dotdict.dotdict):
    pass

DEFAULTS = RunConfig(
    weights=None,
    m=None,
    tau=None,
    N=16,
    exclusion=None,
    rtol=1e-10,
    threads=0,
    executor='loky',
    output=None,
    seed=0,
    u=None,
    lam=0.,
    alpha=0.,
    xi=None,
    gate=.02,
    cross_check=False,
    levels=None)

def parse(text):
    config = {}
    for i, line in enumerate(text.splitlines(), 1):
        line = line.split('#', 1)[0].strip()
        if not line:
            continue
        if '=' not in line:
            raise ConfigError(f'Line {i}: expected "key = value", got "{line}"')
        key, value = (s.strip() for s in line.split('=', 1))
        if key not in DEFAULTS:
            raise ConfigError(f'Line {i}: unknown key "{key}"')
        try:
            config[key] = ast.literal_eval(value)
        except (ValueError, SyntaxError):
            raise ConfigError(f'Line {i}: can\'t parse value "{value}" for "{key}"')
    return config

def environment():
    env = {}
    if 'THREADS' in os.environ:
        try:
            env['threads'] = int(os.environ['THREADS'])
        except ValueError:
            raise ConfigError(f'THREADS must be an integer, got "{os.environ["THREADS"]}"')
    if 'OUTPUT_DIR' in os.environ:
        env['output'] = os.environ['OUTPUT_DIR']
    return env

def validate(config):
    if config.weights is not None:
        try:
            config['weights'] = fuchsian.as_weights(config.weights)
        except (ValueError, TypeError) as e:
            raise ConfigError(f'Bad weights {config.weights}: {e}')
    if (config.m is not None) and (config.tau is not None):
        raise ConfigError('Give one of m and tau, not both')
    if config.tau is not None and not complex(config.tau).imag > 0:
        raise ConfigError(f'tau={config.tau} is not in the upper half plane')
    if not (isinstance(config.N, int) and config.N >= 8):
        raise ConfigError(f'N must be an integer ≥ 8, got {config.N}')
    if config.executor not in ('loky', 'serial', 'thread', 'process'):
        raise ConfigError(f'Unknown executor "{config.executor}"')
    for key in ('m', 'tau', 'u', 'lam', 'alpha', 'xi'):
        value = config[key]
        if value is not None and not (isinstance(value, (int, float, complex)) and np.isfinite(complex(value))):
            if not (key == 'u' and value == np.inf):
                raise ConfigError(f'{key}={value} is not a finite number')
    return config

def load(path=None, **flags):
    config = DEFAULTS.copy()
    if path is not None:
        path = Path(path)
        if not path.exists():
            raise ConfigError(f'No config file at "{path}"')
        config.update(parse(path.read_text()))
    config.update(environment())
    config.update({k: v for k, v in flags.items() if v is not None})
    return validate(config)

def require(config, *keys):
    for k in keys:
        if config[k] is None:
            raise ConfigError(f'This command needs "{k}"')

def curve(config):
    if (config.m is None) and (config.tau is None):
        raise ConfigError('This command needs one of "m" and "tau"')
    try:
        lattice = elliptic.Lattice(config.tau) if config.tau is not None else elliptic.tau_from_m(config.m)
    except ValueError as e:
        raise ConfigError(str(e))
    return elliptic.curve_from_tau(lattice)

#########
# TESTS #
#########

def test_parse():
    c = parse('''
        # generic weights
        weights = (.3, .25, .2, .15)
        m = 2.5+0.3j
        N = 24''')
    assert c == {'weights': (.3, .25, .2, .15), 'm': 2.5 + .3j, 'N': 24}

def test_parse_errors():
    import pytest
    with pytest.raises(ConfigError):
        parse('weights (.3, .25, .2, .15)')
    with pytest.raises(ConfigError):
        parse('colour = 3')
    with pytest.raises(ConfigError):
        parse('weights = (.3, .25,')

def test_validate():
    import pytest
    c = load(weights=(.25,)*4)
    assert c.m is None and c.tau is None
    assert isinstance(c.weights, fuchsian.Weights)
    with pytest.raises(ConfigError):
        curve(c)
    assert curve(load(m=2.5)).m == pytest.approx(2.5)

    with pytest.raises(ConfigError):
        load(weights=(.25,)*4, m=2.5, tau=1j)
    with pytest.raises(ConfigError):
        load(weights=(.6, .25, .25, .25))
    with pytest.raises(ConfigError):
        load(N=4)

def test_environment(monkeypatch):
    monkeypatch.setenv('THREADS', '3')
    monkeypatch.setenv('OUTPUT_DIR', 'elsewhere')
    c = load()
    assert c.threads == 3 and c.output == 'elsewhere'
    assert load(threads=1).threads == 1
