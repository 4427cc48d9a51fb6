from tqdm.auto import tqdm
from contextlib import contextmanager
import multiprocessing
import types
from concurrent.futures import ThreadPoolExecutor, ProcessPoolExecutor, Future, _base, as_completed
import logging
from loky.process_executor import ProcessPoolExecutor as LokyPoolExecutor
import loky.process_executor

# Disable the extraordinarily frustrating memory leak protection.
loky.process_executor._USE_PSUTIL = False

log = logging.getLogger(__name__)

class SerialExecutor(_base.Executor):
    """Runs everything on the calling thread, so stack traces are interpretable and the debugger works."""
    
    def __init__(self, *args, **kwargs):
        pass
    
    def submit(self, f, *args, **kwargs):
        future = Future()
        try:
            future.set_result(f(*args, **kwargs))
        except Exception as e:
            future.set_exception(e)
        return future

EXECUTORS = {
    'loky': LokyPoolExecutor,
    'serial': SerialExecutor,
    'process': ProcessPoolExecutor,
    'thread': ThreadPoolExecutor}

@contextmanager
def VariableExecutor(N=None, executor='loky', **kwargs):
    """An executor that can be switched between serial, thread and process execution.
    If N is 0 or 1, the serial executor is used.
    """
    N = multiprocessing.cpu_count() if N is None else N
    if N <= 1:
        executor = 'serial'
    if executor not in EXECUTORS:
        raise ValueError(f'Unknown executor "{executor}"; pick one of {sorted(EXECUTORS)}')

    pool_type = EXECUTORS[executor]
    log.debug('Launching a {} with {} workers'.format(pool_type.__name__, N))    
    with pool_type(max(N, 1), **kwargs) as pool:
        yield pool
 
@contextmanager
def parallel(f, progress=True, desc=None, **kwargs):
    """Sugar for the VariableExecutor. Call as
    
    with parallel(f) as g:
        ys = g.wait({x: g(x) for x in xs})

    and ``f`` is called on each ``x`` in parallel, with the results collected into a dict keyed like the input.
    Results are gathered by key rather than by completion order, so downstream reductions are deterministic
    whatever the worker count.
    """

    with VariableExecutor(**kwargs) as pool:

        def reraise(fut, futures):
            e = fut.exception()
            if e:
                log.warning('Exception raised on "{}"'.format(futures[fut]), exc_info=e)
                raise e
            return fut.result()

        submitted = set()

        def submit(*args, **kwargs):
            fut = pool.submit(f, *args, **kwargs)
            submitted.add(fut)
            fut.add_done_callback(submitted.discard)
            return fut
        
        def wait(c):
            if type(c) in (list, tuple, types.GeneratorType):
                ctor = list if isinstance(c, types.GeneratorType) else type(c)
                results = wait(dict(enumerate(c)))
                return ctor(results[k] for k in sorted(results))

            futures = {fut: k for k, fut in c.items()}
            results = {}
            for fut in tqdm(as_completed(futures), total=len(c), disable=not progress, desc=desc):
                results[futures[fut]] = reraise(fut, futures)
            return {k: results[k] for k in c}
        
        def cancel():
            for fut in list(submitted):
                fut.cancel()
                submitted.discard(fut)

        try:
            submit.wait = wait
            yield submit
        finally:
            cancel()

def _square(x):
    return x*x

def test_serial_order():
    with parallel(_square, progress=False, N=0) as pool:
        results = pool.wait({k: pool(k) for k in [3, 1, 2]})
    assert list(results) == [3, 1, 2]
    assert results[3] == 9

def test_thread_matches_serial():
    with parallel(_square, progress=False, N=0) as pool:
        serial = pool.wait([pool(k) for k in range(8)])
    with parallel(_square, progress=False, N=3, executor='thread') as pool:
        threaded = pool.wait([pool(k) for k in range(8)])
    assert serial == threaded
