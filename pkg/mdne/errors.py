from __future__ import annotations

from typing import TYPE_CHECKING

if TYPE_CHECKING:
    from pathlib import Path

    from pydantic import ValidationError

__all__ = (
    "CheckpointError",
    "ConfigError",
    "ContractError",
    "DataError",
    "EmptyInputError",
    "EvaluationError",
    "MDNEException",
    "ParseError",
    "ShapeError",
    "SplitError",
    "TrainingError",
)


class MDNEException(Exception):
    """Base exception class for all mdne errors."""


class ShapeError(MDNEException):
    """Exception that's raised when operand dimensions do not agree.

    Attributes
    ----------
    operation: :class:`str`
        Name of the operation that rejected its operands.
    shapes: :class:`tuple`
        The offending shapes, in argument order.
    """

    def __init__(self, operation: str, *shapes: tuple[int, ...]) -> None:
        self.operation = operation
        self.shapes = shapes
        rendered = ", ".join("x".join(map(str, shape)) for shape in shapes)
        super().__init__(f"{operation}: incompatible shapes {rendered}")


class DataError(MDNEException):
    """Exception that's raised when input data cannot be turned into a network."""


class ParseError(DataError):
    """Exception that's raised for a malformed line in a data file.

    Attributes
    ----------
    path: :class:`pathlib.Path`
        The file being parsed.
    line_no: :class:`int`
        One-based line number of the offending line.
    reason: :class:`str`
        What was wrong with the line.
    """

    def __init__(self, path: Path, line_no: int, reason: str) -> None:
        self.path = path
        self.line_no = line_no
        self.reason = reason
        super().__init__(f"{path}:{line_no}: {reason}")


class EmptyInputError(DataError):
    """Exception that's raised when a data file yields zero nodes."""

    def __init__(self, path: Path) -> None:
        self.path = path
        super().__init__(f"{path}: no nodes found")


class SplitError(MDNEException):
    """Exception that's raised when an evaluation split cannot be drawn."""


class ContractError(MDNEException):
    """Exception that's raised when a call violates an API contract.

    This covers stale forward caches and new-node inference with no modality.
    """


class TrainingError(MDNEException):
    """Exception that's raised when fine-tuning diverges.

    Attributes
    ----------
    iteration: :class:`int`
        The iteration at which the loss stopped being finite.
    loss: :class:`float`
        The offending loss value.
    """

    def __init__(self, iteration: int, loss: float, message: str | None = None) -> None:
        self.iteration = iteration
        self.loss = loss
        super().__init__(message or f"loss became {loss} at iteration {iteration}")


class EvaluationError(MDNEException):
    """Exception that's raised when an evaluation protocol cannot run."""


class CheckpointError(MDNEException):
    """Exception that's raised when a checkpoint file is unreadable."""


class ConfigError(MDNEException):
    """Exception that's raised for an invalid experiment or training configuration.

    Attributes
    ----------
    errors: :class:`list`
        The pydantic error records, if the error came from validation.
    """

    def __init__(self, message: str, *, validation: ValidationError | None = None) -> None:
        self.errors = validation.errors() if validation is not None else []
        if validation is not None:
            details = "; ".join(
                f"{'.'.join(map(str, err['loc']))}: {err['msg']}" for err in self.errors
            )
            message = f"{message}: {details}"
        super().__init__(message)
