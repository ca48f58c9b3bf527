"""Graph analytics over Bitcoin blockchain data.

Thin python surface over the C++ core: stores, the three graph
perspectives, clustering heuristics, centrality/traversal analytics,
chain statistics and path-pattern matching.
"""

try:
    from chainlens._core import *  # noqa: F401,F403
    from chainlens import _core as core  # noqa: F401
except ImportError:  # extension built by a plain CMake build, not installed
    import os
    import sys

    _ext_dir = os.environ.get("CHAINLENS_PYMOD_DIR")
    if not _ext_dir:
        raise
    sys.path.insert(0, _ext_dir)
    import _core as core  # noqa: F401
    from _core import *  # noqa: F401,F403

__version__ = "0.1.0"
