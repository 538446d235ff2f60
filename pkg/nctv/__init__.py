# flake8: noqa
__version__ = "v0.3.0"

from .config import Config, ThetaMode
from .errors import NctvException
from .report import CheckRecord, Report
from .suites import EnableSuite, FindSuite, FindSuites, run_suite
from .theta import ThetaParser, ThetaValue

# Default global configuration
CONFIG = Config()
