"""Python bindings for the urllc C++ library.

Configs and sweep specs are plain dicts with the same keys as the JSON files
the command-line tool reads.
"""

import json

from . import _urllc
from ._urllc import SearchSpaceTooLarge, fbl_rate_approx, fbl_rate_exact, q_function, q_inverse

__all__ = [
    "SearchSpaceTooLarge",
    "default_config",
    "fbl_rate_approx",
    "fbl_rate_exact",
    "gains",
    "oracle",
    "q_function",
    "q_inverse",
    "solve",
    "sweep",
]


def default_config():
    return json.loads(_urllc.default_config_json())


def _dump(cfg):
    return json.dumps(cfg)


def gains(config):
    """Worst-case effective gains as an (M, N, K) array, and P_max in watts."""
    return _urllc.gains(_dump(config))


def solve(config, tol=1e-6, max_iter=200):
    return _urllc.solve(_dump(config), tol, max_iter)


def oracle(config, limit=1e7):
    return _urllc.oracle(_dump(config), limit)


def sweep(spec):
    """Runs a sweep and returns its rows as dicts (NaN means where nothing was usable)."""
    text = _urllc.sweep_csv(_dump(spec))
    lines = text.strip().split("\n")
    header = lines[0].split(",")
    rows = []
    for line in lines[1:]:
        vals = line.split(",")
        row = {h: float(v) for h, v in zip(header, vals)}
        row["infeasible"] = int(row["infeasible"])
        rows.append(row)
    return rows
