"""Numerical backend selection.

The Gram-matrix assembly and the marginal-likelihood evaluation sit in
the inner loop of hyperparameter search, so they exist twice: a Cython
extension (``termkrig._core``) and a pure-numpy reference
(``termkrig._ref``).  The extension is preferred when built.  Set
``TERMKRIG_BACKEND=python`` to force the reference path or
``TERMKRIG_BACKEND=c`` to fail loudly if the extension is missing.

``benchmarks/bench_backends.py`` compares the two.
"""

import os

from . import _ref

_impl = None


def _select():
    choice = os.environ.get("TERMKRIG_BACKEND", "").strip().lower()
    if choice in ("python", "ref"):
        return _ref
    try:
        from . import _core

        return _core
    except ImportError:
        if choice in ("c", "compiled"):
            raise ImportError(
                "TERMKRIG_BACKEND=c but the compiled extension termkrig._core "
                "is not built; run `pip install -e . --no-build-isolation`"
            )
        return _ref


def use(which: str) -> None:
    """Switch backend at runtime ('python' or 'c'); used by tests and benchmarks."""
    global _impl
    if which in ("python", "ref"):
        _impl = _ref
    elif which in ("c", "compiled"):
        from . import _core

        _impl = _core
    else:
        raise ValueError(f"unknown backend {which!r}")


def name() -> str:
    return "python" if _impl is _ref else "compiled"


def gram(times, sigma, theta):
    return _impl.gram(times, sigma, theta)


def cross_gram(t1, t2, sigma, theta):
    return _impl.cross_gram(t1, t2, sigma, theta)


def nll_terms(A, times, sig2, q, sigma, theta):
    return _impl.nll_terms(A, times, sig2, q, sigma, theta)


_impl = _select()
