from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Type, Union

from nctv.config import ThetaMode
from nctv.errors import NctvException

# Order matters: specific parsers should appear before more generic ones,
# because the first matching parser will be used
THETA_PARSERS: list[Type[ThetaParser]] = []


class ParseException(NctvException):
    """Exception for theta argument parsing errors."""
    pass


def ThetaParserType(cls: Type[ThetaParser]):
    """
    Decorator to register a theta parser class.
    """
    THETA_PARSERS.insert(0, cls)  # Push to the front
    return cls


@dataclass(frozen=True)
class ThetaValue:
    """
    A parsed rotation parameter: the formal symbol, an exact rational or a float.
    """

    mode: ThetaMode
    value: Union[None, Fraction, float] = None

    @classmethod
    def formal(cls) -> ThetaValue:
        return cls(ThetaMode.FORMAL)

    def as_float(self) -> Optional[float]:
        """Return the numeric value of θ, or None for the formal symbol."""
        if self.value is None:
            return None
        return float(self.value)

    def __str__(self) -> str:
        return ThetaParser.create(self.mode).encode(self)


class ThetaParser:
    """
    Base class for theta argument parsers.
    """

    mode: ThetaMode

    @staticmethod
    def create(mode: ThetaMode) -> ThetaParser:
        """
        Return the parser responsible for the given mode.
        """
        for parser in THETA_PARSERS:
            if parser.mode == mode:
                return parser()
        raise ParseException(f"No theta parser for mode {mode}")

    @staticmethod
    def parse(text: str) -> ThetaValue:
        """
        Parse a command-line theta argument with the first matching parser.

        :param text: Either "formal", an exact fraction "p/q", or a float
        :raises ParseException: When no parser accepts the text or the value is invalid
        """
        text = text.strip()
        for parser in THETA_PARSERS:
            if parser.matches(text):
                instance = parser()
                value = instance.decode(text)
                if not instance.validate(value):
                    raise ParseException(f"Theta value '{text}' is out of range")
                return value
        raise ParseException(f"Cannot parse theta argument '{text}'")

    @staticmethod
    def matches(text: str) -> bool:
        """
        Determine if this parser can read the given text.
        """
        raise NotImplementedError()

    def decode(self, text: str) -> ThetaValue:
        raise NotImplementedError()

    def encode(self, value: ThetaValue) -> str:
        """
        Convert the value back to the text accepted by `decode`.
        """
        return str(value.value)

    def validate(self, value: ThetaValue) -> bool:
        """
        Return true if the decoded value is admissible.
        """
        return True


@ThetaParserType
class NumericThetaParser(ThetaParser):
    mode = ThetaMode.NUMERIC

    @staticmethod
    def matches(text: str) -> bool:
        try:
            float(text)
        except ValueError:
            return False
        return True

    def decode(self, text: str) -> ThetaValue:
        return ThetaValue(ThetaMode.NUMERIC, float(text))

    def encode(self, value: ThetaValue) -> str:
        return repr(value.value)

    def validate(self, value: ThetaValue) -> bool:
        theta = value.as_float()
        return theta is not None and math.isfinite(theta) and 0 < theta <= 1


@ThetaParserType
class RationalThetaParser(ThetaParser):
    mode = ThetaMode.RATIONAL
    pattern = re.compile(r"^-?\d+\s*/\s*\d+$")

    @staticmethod
    def matches(text: str) -> bool:
        return RationalThetaParser.pattern.match(text) is not None

    def decode(self, text: str) -> ThetaValue:
        numerator, denominator = (int(part) for part in text.split("/"))
        if denominator == 0:
            raise ParseException(f"Theta value '{text}' has a zero denominator")
        return ThetaValue(ThetaMode.RATIONAL, Fraction(numerator, denominator))

    def encode(self, value: ThetaValue) -> str:
        return f"{value.value.numerator}/{value.value.denominator}"

    def validate(self, value: ThetaValue) -> bool:
        return 0 <= value.value <= 1


@ThetaParserType
class FormalThetaParser(ThetaParser):
    mode = ThetaMode.FORMAL

    @staticmethod
    def matches(text: str) -> bool:
        return text.lower() in ("formal", "t", "theta")

    def decode(self, text: str) -> ThetaValue:
        return ThetaValue.formal()

    def encode(self, value: ThetaValue) -> str:
        return "formal"
