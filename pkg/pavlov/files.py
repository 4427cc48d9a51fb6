import re
import multiprocessing 
import threading
import fnmatch
from . import runs, tests

def _filename(pattern, extant_files):
    is_pattern = '{n}' in pattern
    count = len([f for _, f in extant_files.items() if f['_pattern'] == pattern])
    if is_pattern:
        return pattern.format(n=count)
    elif count == 0:
        return pattern
    else:
        raise ValueError(f'You\'ve created a "{pattern}" file already, and that isn\'t a valid pattern')

def new_file(run, pattern, **kwargs):
    """Registers a new file in the run and returns its path. ``pattern`` may contain ``{n}``, which is filled 
    with the count of files already registered under that pattern."""
    with runs.update(run) as info:
        filename = _filename(pattern, info['_files'])
        assert filename not in info['_files']
        assert re.fullmatch(r'[\w\.-]+', filename), 'Filename contains invalid characters'

        process = multiprocessing.current_process()
        thread = threading.current_thread()
        info['_files'][filename] = {
            '_pattern': pattern,
            '_created': str(tests.timestamp()),
            '_process_id': str(process.pid),
            '_process_name': process.name,
            '_thread_name': str(thread.name),
            **kwargs}
    return runs.path(run) / filename

def info(run, filename):
    return runs.info(run)['_files'][filename]

def path(run, filename):
    return runs.path(run) / filename

def files(run):
    return runs.info(run)['_files']

def glob(run, glob):
    return {n: i for n, i in files(run).items() if fnmatch.fnmatch(n, glob)}

def seq(run, pattern):
    return {n: i for n, i in files(run).items() if i['_pattern'] == pattern}

@tests.mock_dir
def test_new_file():
    run = runs.new_run()
    p = new_file(run, 'report.json', kind='volume')
    p.write_text('{}')

    assert info(run, 'report.json')['kind'] == 'volume'
    assert path(run, 'report.json').read_text() == '{}'

@tests.mock_dir
def test_fileglob():
    run = runs.new_run()
    new_file(run, 'grid.{n}.csv')
    new_file(run, 'grid.{n}.csv')
    new_file(run, 'report.json')

    assert len(glob(run, 'grid.*.csv')) == 2
    assert len(seq(run, 'report.json')) == 1

    import pytest
    with pytest.raises(ValueError):
        new_file(run, 'report.json')
