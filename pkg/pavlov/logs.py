import logging
import sys
import traceback
from contextlib import contextmanager
from . import runs, tests, files

# for re-export
from logging import getLogger

log = getLogger(__name__)

FORMAT = '%(asctime)s %(levelname)s %(name)s: %(message)s'

#TODO: This shouldn't be at the top level
logging.basicConfig(
            stream=sys.stdout, 
            level=logging.INFO, 
            format=FORMAT, 
            datefmt=r'%Y-%m-%d %H:%M:%S')

@contextmanager
def handlers(*new_handlers):
    """Adds ``new_handlers`` to the root logger for the duration of the block."""
    logger = logging.getLogger()
    old_handlers = [*logger.handlers]
    try:
        logger.handlers = old_handlers + list(new_handlers)
        yield 
    finally:
        for h in new_handlers:
            try:
                h.acquire()
                h.flush()
                h.close()
            except (OSError, ValueError):
                pass
            finally:
                h.release()

        logger.handlers = old_handlers

@contextmanager
def to_run(run):
    """Copies log output into a ``logs.{n}.txt`` file in the run. Tracebacks of anything raised inside the
    block are written to the file before the exception propagates."""
    if run is None:
        yield
        return

    path = files.new_file(run, 'logs.{n}.txt')
    handler = logging.FileHandler(path)
    handler.setLevel(logging.INFO)
    handler.setFormatter(logging.Formatter(fmt=FORMAT, datefmt=r'%H:%M:%S'))

    with handlers(handler):
        try:
            yield
        except:
            log.info(f'Trace:\n{traceback.format_exc()}')
            raise

def read(run, idx=0):
    names = sorted(files.seq(run, 'logs.{n}.txt'))
    return files.path(run, names[idx]).read_text()

### TESTS

@tests.mock_dir
def test_to_run():
    run = runs.new_run()
    with to_run(run):
        log.info('hello')
    assert 'hello' in read(run)

@tests.mock_dir
def test_error_traced():
    import pytest
    run = runs.new_run()
    with pytest.raises(ValueError):
        with to_run(run):
            raise ValueError('Last gasp')
    assert 'Last gasp' in read(run)
