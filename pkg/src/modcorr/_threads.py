import os

# Thread count is a runtime knob (set_threads); numba fixes its pool size when
# its config is first read, so reserve enough workers for the determinism
# harness (1/4/8).
os.environ.setdefault("NUMBA_NUM_THREADS", str(max(os.cpu_count() or 1, 8)))

import numba  # noqa: E402

# If numba was imported before us it has already read its config; keep the
# environment consistent with that pool so later recompiles do not object.
os.environ["NUMBA_NUM_THREADS"] = str(numba.config.NUMBA_NUM_THREADS)


def max_threads() -> int:
    return numba.config.NUMBA_NUM_THREADS


def set_threads(n):
    """Set the number of worker threads used by parallel kernels.

    Requests beyond the pool size are clamped; results do not depend on it.
    """
    n = int(n)
    if n < 1:
        raise ValueError("threads must be >= 1")
    numba.set_num_threads(min(n, max_threads()))
    return numba.get_num_threads()


def get_threads():
    return numba.get_num_threads()
