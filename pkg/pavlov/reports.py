"""Report writers. JSON floats go through ``repr``, which is the shortest decimal that round-trips exactly 
(at most 17 significant digits); CSV floats are written with ``%.17g``. Complex numbers are split into 
``re``/``im`` pairs since neither format has a native complex type."""
import json
import numpy as np
import pandas as pd
from rebar import dotdict, arrdict
from . import runs, files, tests

FLOAT_FORMAT = '%.17g'

@dotdict.mapping
def _plain(x):
    x = arrdict.numpyify(x)
    if isinstance(x, complex):
        return {'re': x.real, 'im': x.imag}
    if isinstance(x, (list, tuple)):
        return [_plain(y) for y in x]
    if isinstance(x, float) and not np.isfinite(x):
        return str(x)
    return x

def dumps(report):
    return json.dumps(dotdict.to_dicts(_plain(report)), indent=2, ensure_ascii=False)

def write_json(run, name, report):
    path = files.new_file(run, f'{name}.json')
    path.write_text(dumps(report), encoding='utf-8')
    return path

def write_csv(run, name, df):
    path = files.new_file(run, f'{name}.csv')
    df.to_csv(path, index=False, float_format=FLOAT_FORMAT)
    return path

def read_json(run, name):
    return json.loads(files.path(run, f'{name}.json').read_text(encoding='utf-8'))

def read_csv(run, name):
    return pd.read_csv(files.path(run, f'{name}.csv'), float_precision='round_trip')

### TESTS

@tests.mock_dir
def test_json_roundtrip():
    run = runs.new_run()
    x = 0.1 + 0.2
    write_json(run, 'report', dotdict.dotdict(value=x, z=1/3 - 2j, arr=np.array([np.pi, np.e])))
    r = read_json(run, 'report')
    assert r['value'] == x
    assert r['z'] == {'re': 1/3, 'im': -2.}
    assert r['arr'] == [np.pi, np.e]

@tests.mock_dir
def test_csv_roundtrip():
    run = runs.new_run()
    vals = np.random.RandomState(0).uniform(size=(5, 2))
    df = pd.DataFrame(vals, columns=['a', 'b'])
    write_csv(run, 'grid', df)
    back = read_csv(run, 'grid')
    np.testing.assert_array_equal(back.values, vals)
