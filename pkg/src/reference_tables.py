"""Published L2 errors and rates of the reference experiments, keyed by study preset."""

from typing import Dict, Optional

import numpy as np

# preset -> {'sizes': [...], 'errL2': {lambda: [...]}, 'rate': {lambda: float}}
REFERENCE_TABLES: Dict[str, Dict] = {
    'ex1_tri_type2': {
        'sizes': [5, 10, 15, 20, 25],
        'errL2': {
            1e0: [1.1208e-01, 2.9679e-02, 1.3421e-02, 7.6091e-03, 4.8911e-03],
            1e2: [1.0645e-01, 2.8443e-02, 1.2860e-02, 7.2846e-03, 4.6791e-03],
            1e4: [1.0640e-01, 2.8434e-02, 1.2856e-02, 7.2822e-03, 4.6775e-03],
            1e6: [1.0640e-01, 2.8434e-02, 1.2855e-02, 7.2821e-03, 4.6775e-03],
            1e8: [1.0640e-01, 2.8434e-02, 1.2855e-02, 7.2820e-03, 4.6777e-03],
        },
        'rate': {1e0: 1.95, 1e2: 1.94, 1e4: 1.94, 1e6: 1.94, 1e8: 1.94},
    },
    'ex1_tri_type3': {
        'sizes': [5, 10, 15, 20, 25],
        'errL2': {
            1e0: [3.0839e-01, 7.6958e-02, 3.4534e-02, 1.9499e-02, 1.2500e-02],
            1e2: [2.9286e-01, 7.2817e-02, 3.2637e-02, 1.8411e-02, 1.1795e-02],
            1e4: [2.9265e-01, 7.2761e-02, 3.2611e-02, 1.8396e-02, 1.1785e-02],
            1e6: [2.9265e-01, 7.2760e-02, 3.2611e-02, 1.8396e-02, 1.1785e-02],
            1e8: [2.9265e-01, 7.2760e-02, 3.2611e-02, 1.8396e-02, 1.1785e-02],
        },
        'rate': {1e0: 1.99, 1e2: 1.99, 1e4: 1.99, 1e6: 1.99, 1e8: 1.99},
    },
    'ex3_quad_type2': {
        'sizes': [5, 10, 15, 20, 25],
        'errL2': {
            1e2: [6.7057e-02, 2.1470e-02, 9.8523e-03, 5.6095e-03, 3.6112e-03],
            1e8: [6.7205e-02, 2.1516e-02, 9.8757e-03, 5.6234e-03, 3.6204e-03],
        },
        'rate': {1e2: 1.82, 1e8: 1.82},
    },
    'ex3_quad_type3': {
        'sizes': [5, 10, 15, 20, 25],
        'errL2': {
            1e2: [1.5715e-01, 5.0710e-02, 2.3895e-02, 1.3758e-02, 8.9081e-03],
            1e8: [1.5730e-01, 5.0792e-02, 2.3943e-02, 1.3789e-02, 8.9297e-03],
        },
        'rate': {1e2: 1.78, 1e8: 1.78},
    },
    'ex1_voronoi_unified': {
        'sizes': [32, 64, 128, 256, 512],
        'errL2': {
            1e0: [6.7235e-02, 3.6869e-02, 1.8102e-02, 9.4467e-03, 4.7476e-03],
            1e2: [6.9307e-02, 3.8020e-02, 1.8849e-02, 9.8457e-03, 4.9499e-03],
            1e4: [6.9387e-02, 3.8072e-02, 1.8875e-02, 9.8609e-03, 4.9582e-03],
            1e6: [6.9387e-02, 3.8072e-02, 1.8875e-02, 9.8611e-03, 4.9583e-03],
            1e8: [6.9387e-02, 3.8072e-02, 1.8875e-02, 9.8611e-03, 4.9583e-03],
        },
        'rate': {1e0: 1.88, 1e2: 1.87, 1e4: 1.87, 1e6: 1.87, 1e8: 1.87},
    },
}


def _match_lambda(table: Dict, lam: float) -> Optional[float]:
    for key in table['errL2']:
        if np.isclose(key, lam, rtol=1e-9):
            return key
    return None


def reference_error(name: str, lam: float, size: int) -> Optional[float]:
    """Published L2 error for (preset, lambda, mesh size), or None."""
    table = REFERENCE_TABLES.get(name)
    if table is None or size not in table['sizes']:
        return None
    key = _match_lambda(table, lam)
    if key is None:
        return None
    return table['errL2'][key][table['sizes'].index(size)]


def reference_rate(name: str, lam: float) -> Optional[float]:
    """Published L2 rate for (preset, lambda), or None."""
    table = REFERENCE_TABLES.get(name)
    if table is None:
        return None
    key = _match_lambda(table, lam)
    return None if key is None else table['rate'][key]
