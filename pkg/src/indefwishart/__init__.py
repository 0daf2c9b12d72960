"""Exact eigenvalue-ratio and condition-number distributions of indefinite
rank-2 Wishart matrices A = W^T W Sigma, for any ghost parameter beta > 0,
with Monte Carlo samplers to check them against."""

from .analysis import *  # noqa: F401,F403
from .analysis import __all__ as _analysis_all
from .densities import *  # noqa: F401,F403
from .densities import __all__ as _densities_all
from .sampling import *  # noqa: F401,F403
from .sampling import __all__ as _sampling_all
from .specfun import *  # noqa: F401,F403
from .specfun import __all__ as _specfun_all

__version__ = "0.1.0"
__all__ = _specfun_all + _sampling_all + _densities_all + _analysis_all
