from typing import Optional


class CpncError(Exception):
    """Base class for every error raised by the completion engine."""


class ParseError(CpncError):
    def __init__(self, message: str, line_number: Optional[int] = None):
        self.line_number = line_number
        prefix = f"line {line_number}: " if line_number is not None else ""
        super().__init__(f"{prefix}{message}")


class ArgumentError(CpncError, ValueError):
    pass


class FormatError(CpncError):
    pass


class CoverageError(CpncError):
    def __init__(self, missing: list[str], suggestions: Optional[dict] = None):
        self.missing = missing
        self.suggestions = suggestions or {}

        shown = missing[:10]
        rendered = []
        for text in shown:
            hint = self.suggestions.get(text)
            rendered.append(f"{text!r} (closest: {hint!r})" if hint else repr(text))

        more = f" and {len(missing) - len(shown)} more" if len(missing) > 10 else ""
        super().__init__(
            f"{len(missing)} node(s) have no embedding: {', '.join(rendered)}{more}"
        )


class NumericDomainError(CpncError, ArithmeticError):
    pass


class ConfigurationError(CpncError):
    pass


class UnassignedNodeError(CpncError, LookupError):
    pass
