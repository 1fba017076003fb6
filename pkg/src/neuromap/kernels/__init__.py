"""Hot kernels, compiled when the extension is built, pure Python otherwise.

Set ``NEUROMAP_PURE_PYTHON=1`` to force the fallback. Both backends are
importable directly as ``python_backend`` and ``compiled_backend`` (None when
the extension is missing) for testing and benchmarking.
"""

import os

from . import _pykernels as python_backend

try:
    from . import _ckernels as compiled_backend
except ImportError:
    compiled_backend = None

if compiled_backend is not None and not os.environ.get("NEUROMAP_PURE_PYTHON"):
    backend = compiled_backend
    BACKEND = "compiled"
else:
    backend = python_backend
    BACKEND = "python"

E, W, N, S, LOCAL, NO_DIR = (python_backend.E, python_backend.W, python_backend.N,
                             python_backend.S, python_backend.LOCAL, python_backend.NO_DIR)

permitted_ports = backend.permitted_ports
route_next = backend.route_next
trace_route = backend.trace_route
count_inversions = backend.count_inversions
kl_pass = backend.kl_pass
cut_costs = backend.cut_costs
placement_costs = backend.placement_costs
elmore_grid = backend.elmore_grid
repair_assign = backend.repair_assign

BACKENDS = {"python": python_backend}
if compiled_backend is not None:
    BACKENDS["compiled"] = compiled_backend
