from __future__ import annotations

import copy
import os
from enum import Enum
from typing import TYPE_CHECKING, Optional

from nctv.errors import NctvException

if TYPE_CHECKING:
    from nctv.theta import ThetaValue


class ThetaMode(Enum):
    """Enum for the ways the rotation parameter θ can be given."""

    FORMAL = 0
    RATIONAL = 1
    NUMERIC = 2


class ConfigException(NctvException):
    """Exception for invalid suite configurations."""
    pass


DEFAULT_GROUPS = ["Z2", "Z3", "Z4", "Z6"]


class Config:
    """
    Configuration class for nctv suites.
    """

    def __init__(self, parent: Optional[Config] = None, **settings):
        self._parent = parent
        self._settings = settings
        self._initial_settings = copy.deepcopy(settings)

    @property
    def suite(self) -> str:
        """
        Name of the verification suite to run.
        """
        default_value = "symbolic"
        if (fget := Config.suite.fget) is not None:
            return self._get_setting(fget.__name__, default_value)
        return default_value

    @suite.setter
    def suite(self, value: str):
        if (fget := Config.suite.fget) is not None:
            self._set_setting(fget.__name__, value)

    @property
    def groups(self) -> list[str]:
        """
        Group selectors, e.g. "Z4" or "flip3" for the flip on Z^3.
        """
        default_value = list(DEFAULT_GROUPS)
        if (fget := Config.groups.fget) is not None:
            return self._get_setting(fget.__name__, default_value)
        return default_value

    @groups.setter
    def groups(self, value: list[str]):
        if (fget := Config.groups.fget) is not None:
            self._set_setting(fget.__name__, value)

    @property
    def thetas(self) -> Optional[list[ThetaValue]]:
        """
        Values of θ to check; None lets each suite use its own default list.
        """
        default_value = None
        if (fget := Config.thetas.fget) is not None:
            return self._get_setting(fget.__name__, default_value)
        return default_value

    @thetas.setter
    def thetas(self, value: Optional[list[ThetaValue]]):
        if (fget := Config.thetas.fget) is not None:
            self._set_setting(fget.__name__, value)

    @property
    def grid_n(self) -> int:
        """
        Number of sample points of the numeric grid.
        """
        default_value = 2048
        if (fget := Config.grid_n.fget) is not None:
            return self._get_setting(fget.__name__, default_value)
        return default_value

    @grid_n.setter
    def grid_n(self, value: int):
        if (fget := Config.grid_n.fget) is not None:
            self._set_setting(fget.__name__, value)

    @property
    def grid_l(self) -> float:
        """
        Half-width of the numeric grid.
        """
        default_value = 12.0
        if (fget := Config.grid_l.fget) is not None:
            return self._get_setting(fget.__name__, default_value)
        return default_value

    @grid_l.setter
    def grid_l(self, value: float):
        if (fget := Config.grid_l.fget) is not None:
            self._set_setting(fget.__name__, value)

    @property
    def tolerance(self) -> Optional[float]:
        """
        When set, replaces the per-check tolerance of every numeric check.
        """
        default_value = None
        if (fget := Config.tolerance.fget) is not None:
            return self._get_setting(fget.__name__, default_value)
        return default_value

    @tolerance.setter
    def tolerance(self, value: Optional[float]):
        if (fget := Config.tolerance.fget) is not None:
            self._set_setting(fget.__name__, value)

    @property
    def jobs(self) -> int:
        """
        Number of worker threads a suite fans out to.
        """
        default_value = int(os.environ.get("NCTV_DEFAULT_JOBS", "1"))
        if (fget := Config.jobs.fget) is not None:
            return self._get_setting(fget.__name__, default_value)
        return default_value

    @jobs.setter
    def jobs(self, value: int):
        if (fget := Config.jobs.fget) is not None:
            self._set_setting(fget.__name__, value)

    @property
    def seed(self) -> int:
        """
        Seed for the randomized identity checks.
        """
        default_value = 0
        if (fget := Config.seed.fget) is not None:
            return self._get_setting(fget.__name__, default_value)
        return default_value

    @seed.setter
    def seed(self, value: int):
        if (fget := Config.seed.fget) is not None:
            self._set_setting(fget.__name__, value)

    @property
    def samples(self) -> int:
        """
        Number of random samples drawn for each randomized identity.
        """
        default_value = 1000
        if (fget := Config.samples.fget) is not None:
            return self._get_setting(fget.__name__, default_value)
        return default_value

    @samples.setter
    def samples(self, value: int):
        if (fget := Config.samples.fget) is not None:
            self._set_setting(fget.__name__, value)

    @property
    def window(self) -> int:
        """
        Truncation |n|, |m| <= window of the inner product sums.
        """
        default_value = 6
        if (fget := Config.window.fget) is not None:
            return self._get_setting(fget.__name__, default_value)
        return default_value

    @window.setter
    def window(self, value: int):
        if (fget := Config.window.fget) is not None:
            self._set_setting(fget.__name__, value)

    @property
    def kernel_cache_size(self) -> int:
        """
        Maximum number of dense kernel matrices kept in memory.
        """
        default_value = 6
        if (fget := Config.kernel_cache_size.fget) is not None:
            return self._get_setting(fget.__name__, default_value)
        return default_value

    @kernel_cache_size.setter
    def kernel_cache_size(self, value: int):
        if (fget := Config.kernel_cache_size.fget) is not None:
            self._set_setting(fget.__name__, value)

    @property
    def timing(self) -> bool:
        """
        When true, record wall-clock time in the report.
        """
        default_value = False
        if (fget := Config.timing.fget) is not None:
            return self._get_setting(fget.__name__, default_value)
        return default_value

    @timing.setter
    def timing(self, value: bool):
        if (fget := Config.timing.fget) is not None:
            self._set_setting(fget.__name__, value)

    def validate(self):
        """
        Check the settings against the constraints suites rely on.

        :raises ConfigException: If any setting is out of range
        """
        n = self.grid_n
        if n < 256 or n & (n - 1):
            raise ConfigException(f"Grid point count must be a power of two >= 256, got {n}")
        if self.grid_l < 8:
            raise ConfigException(f"Grid half-width must be at least 8, got {self.grid_l}")
        if self.jobs < 1:
            raise ConfigException(f"Parallelism must be at least 1, got {self.jobs}")
        if self.samples < 1:
            raise ConfigException(f"Sample count must be positive, got {self.samples}")
        if self.window < 4:
            raise ConfigException(f"Truncation window must be at least 4, got {self.window}")
        if self.tolerance is not None and self.tolerance <= 0:
            raise ConfigException(f"Tolerance must be positive, got {self.tolerance}")
        for theta in self.thetas or []:
            value = theta.as_float()
            if theta.mode == ThetaMode.NUMERIC and not 0 < value <= 1:
                raise ConfigException(f"Float theta must lie in (0, 1], got {theta}")
            if theta.mode == ThetaMode.RATIONAL and not 0 <= value <= 1:
                raise ConfigException(f"Rational theta must lie in [0, 1], got {theta}")

    def to_json(self) -> dict:
        """
        Echo of the effective settings, as recorded in reports.
        """
        fields = {
            "suite": self.suite,
            "groups": list(self.groups),
            "thetas": None if self.thetas is None else [str(t) for t in self.thetas],
            "grid_n": self.grid_n,
            "grid_l": self.grid_l,
            "tolerance": self.tolerance,
            "seed": self.seed,
            "samples": self.samples,
            "window": self.window,
        }
        return {f: v for f, v in fields.items() if v is not None}

    def reset_default(self):
        """
        Reset the configuration to the default settings.
        """
        self._settings = copy.deepcopy(self._initial_settings)

    def _get_setting(self, name: str, default):
        """
        Get a setting value from the settings dictionary or the parent configuration.
        If not found, return the default value.

        :param name: Name of the setting
        :param default: Default value, used when the setting is not found in
            the settings dictionary and this configuration has no parent
        :return: The requested setting value
        """
        fallback = default if not self._parent else getattr(self._parent, name)
        return self._settings.get(name, fallback)

    def _set_setting(self, name: str, value):
        """
        Set a setting value in the settings dictionary.

        :param name: Name of the setting
        :param value: Value to set
        """
        self._settings[name] = value
