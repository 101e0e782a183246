"""Engine backend selection.

The package ships two interchangeable search engines: a compiled Cython
core and a pure-Python reference.  The compiled one is picked at import
time when present; the environment variable ``SATSCHED_BACKEND`` set to
``python`` or ``compiled`` forces the choice (``compiled`` raises if the
extension is missing rather than silently degrading).  Both engines
produce bit-identical results for the same seed, so the choice affects
throughput only.
"""

from __future__ import annotations

import os

from . import _engine_py

try:
    from . import _core
except ImportError:
    _core = None

_ENGINES = {"python": _engine_py.run_search}
if _core is not None:
    _ENGINES["compiled"] = _core.run_search

_forced = os.environ.get("SATSCHED_BACKEND", "auto").strip().lower() or "auto"
if _forced == "auto":
    DEFAULT_BACKEND = "compiled" if _core is not None else "python"
elif _forced in _ENGINES:
    DEFAULT_BACKEND = _forced
elif _forced == "compiled":
    raise ImportError(
        "SATSCHED_BACKEND=compiled but the satsched._core extension is not "
        "built; reinstall the package or unset the variable"
    )
else:
    raise ImportError(
        f"SATSCHED_BACKEND={_forced!r} is not one of auto, python, compiled"
    )


def available_backends() -> tuple[str, ...]:
    return tuple(sorted(_ENGINES))


def resolve_backend(name: str) -> str:
    if name == "auto":
        return DEFAULT_BACKEND
    if name not in ("python", "compiled"):
        raise ValueError(f"backend {name!r} is not one of auto, python, compiled")
    if name not in _ENGINES:
        raise ValueError("compiled backend requested but the extension is not built")
    return name


def run_search(backend: str, graph, variant: int, c: float, num_simulations: int,
               seed: int, time_limit: float | None = None,
               want_tree: bool = False) -> dict:
    return _ENGINES[resolve_backend(backend)](
        graph, variant, c, num_simulations, seed, time_limit, want_tree
    )
