"""Market dynamics toolkit.

Four simulation and backtesting engines behind one library and CLI:

- ``support``: two-support-level price ODE, stability analysis and simulation
- ``ratchet``: fluctuation-ratchet two-asset trader with analytic return/risk
  and a market-neutral backtester
- ``sgame``: agent-based market game with capital-gain strategy scoring,
  temperature-driven mood transitions, short-fraction ensembles and slaved runs
- ``growth``: cash-flow sustainability of a fund driving constant market growth
- ``gl``: quartic free-energy landscape linking game temperature to order

plus ``timeseries`` (shared price-series model and CSV I/O), ``seeds``
(counter-based reproducible RNG streams) and ``reports`` (CSV/SVG emission).
"""

from . import gl, growth, ratchet, reports, seeds, sgame, support, timeseries
from .errors import MarketDynError

__version__ = "0.1.0"

__all__ = [
    "MarketDynError",
    "__version__",
    "gl",
    "growth",
    "ratchet",
    "reports",
    "seeds",
    "sgame",
    "support",
    "timeseries",
]
