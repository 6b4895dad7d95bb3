"""gmconn: explicit absolute Gauss-Manin connection matrices.

Constructs connection matrices for Hodge-Tate structures and for the
rank <= 2 and rank 3 Hodge structures attached to elliptic curves, over
a finitely presented ring of differential constants, and verifies them
against independent numeric oracles (theta-based period computations
and finite differences along parameter families).
"""

__version__ = "0.1.0"

from .constfield import (ConstExpr, ConstFieldError, Context, OneForm,
                         TwoForm, WitnessError, dlog, qspan_dim)
from .numutil import Precision

__all__ = [
    "ConstExpr", "ConstFieldError", "Context", "OneForm", "TwoForm",
    "WitnessError", "dlog", "qspan_dim", "Precision", "__version__",
]
