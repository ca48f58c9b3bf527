import os
import sys

# locate the source-tree package and the CMake-built extension
src = os.environ.get("CHAINLENS_SRC")
if src:
    sys.path.insert(0, os.path.join(src, "python"))
