import os

NUMBA_ENABLED = os.environ.get("COLOSSEUM_NO_NUMBA", "0") not in {"1", "true", "yes"}

if NUMBA_ENABLED:
    from numba import njit

    def maybe_jit(*args, **kwargs):
        kwargs.setdefault("cache", True)
        return njit(*args, **kwargs)
else:
    def maybe_jit(*args, **kwargs):  # noqa: D103 - fallback no-op decorator
        if args and callable(args[0]):
            return args[0]
        return lambda f: f
