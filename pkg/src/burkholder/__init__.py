"""Sharp constants and special functions for p-th moment inequalities between
two Bessel processes driven by one Brownian motion, with grid certification
and Monte Carlo checks."""

from .burkfun import BurkholderFamily, eval_U, eval_V, eval_W, certify_inequalities
from .constants import ConstantsBundle, solve
from .errors import BurkholderError, InvalidParams
from .specfun import Params, SeriesSolution, build_series, evaluate

__version__ = "0.1.0"

__all__ = [
    "BurkholderFamily", "BurkholderError", "ConstantsBundle", "InvalidParams", "Params",
    "SeriesSolution", "build_series", "certify_inequalities", "eval_U", "eval_V", "eval_W",
    "evaluate", "solve", "__version__",
]
