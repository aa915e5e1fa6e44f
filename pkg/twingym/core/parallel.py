'''Chunked thread-pool execution for batched backends.

numpy releases the GIL inside its ufunc loops, so disjoint slices of a large
batch can be stepped concurrently.  Batches smaller than ``min_chunk`` per
worker stay on the calling thread.
'''

from concurrent.futures import ThreadPoolExecutor
import logging
import os
import threading


logger = logging.getLogger(__name__)

#: default minimum number of batch elements per chunk
MIN_CHUNK = 16384


def worker_count(workers=None):
    '''``workers``, or ``os.cpu_count()`` when it is ``None`` or 0.'''
    return max(1, workers or os.cpu_count() or 1)


class ChunkPool(object):
    '''Partition a batch into contiguous slices and run a function over each
    slice on a persistent thread pool.

    :param workers: number of worker threads; defaults to ``os.cpu_count()``
    :param min_chunk: minimum elements per slice
    '''

    def __init__(self, workers=None, min_chunk=MIN_CHUNK):
        self.workers = worker_count(workers)
        self.min_chunk = max(1, int(min_chunk))
        self._executor = None
        self._lock = threading.Lock()

    def slices(self, size):
        '''Disjoint contiguous slices covering ``range(size)``.'''
        if size <= 0:
            return []
        count = max(1, min(self.workers, size // self.min_chunk))
        step, extra = divmod(size, count)
        bounds = []
        start = 0
        for i in range(count):
            stop = start + step + (1 if i < extra else 0)
            bounds.append(slice(start, stop))
            start = stop
        return bounds

    @property
    def executor(self):
        with self._lock:
            if self._executor is None:
                logger.debug('starting chunk pool with %d workers', self.workers)
                self._executor = ThreadPoolExecutor(max_workers=self.workers)
            return self._executor

    def run(self, fn, chunks):
        '''Call ``fn(chunk)`` for every chunk; the first chunk runs on the
        calling thread.'''
        if len(chunks) <= 1:
            for chunk in chunks:
                fn(chunk)
            return
        futures = [self.executor.submit(fn, chunk) for chunk in chunks[1:]]
        fn(chunks[0])
        for future in futures:
            # re-raises worker exceptions
            future.result()

    def shutdown(self):
        with self._lock:
            if self._executor is not None:
                self._executor.shutdown(wait=True)
                self._executor = None


_default_pool = None


def default_pool():
    '''Process-wide :class:`ChunkPool` used by backends constructed without
    an explicit pool.'''
    global _default_pool
    if _default_pool is None:
        _default_pool = ChunkPool()
    return _default_pool


def configure_default_pool(workers=None, min_chunk=MIN_CHUNK):
    '''Replace the process-wide pool (used by the management commands to
    apply ``TWINGYM_WORKERS`` / ``TWINGYM_MIN_CHUNK``).'''
    global _default_pool
    if _default_pool is not None:
        _default_pool.shutdown()
    _default_pool = ChunkPool(workers=workers, min_chunk=min_chunk)
    return _default_pool
