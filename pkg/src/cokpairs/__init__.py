"""Sandpile groups and symmetric-matrix cokernels with duality pairings.

Exact integer linear algebra, pairing construction and classification,
seeded matrix and graph ensembles, moment counting by independent routes,
closed-form predictions, and batch experiments with a CLI.
"""

__version__ = "0.1.0"

from .errors import (
    BudgetExceeded,
    NotALift,
    NotInDual,
    NotInSpan,
    NotSymmetric,
    UnbalancedDistribution,
)
from .groups import FinAbGroup, GroupElement, GroupHom, parse_group
from .intmat import IntMatrix, RationalVector, SnfResult, smith_normal_form
from .pairings import PairClassId, PairedGroup, PairingGram, QmodZ, parse_paired_group

__all__ = [
    "BudgetExceeded",
    "FinAbGroup",
    "GroupElement",
    "GroupHom",
    "IntMatrix",
    "NotALift",
    "NotInDual",
    "NotInSpan",
    "NotSymmetric",
    "PairClassId",
    "PairedGroup",
    "PairingGram",
    "QmodZ",
    "RationalVector",
    "SnfResult",
    "UnbalancedDistribution",
    "parse_group",
    "parse_paired_group",
    "smith_normal_form",
    "__version__",
]
