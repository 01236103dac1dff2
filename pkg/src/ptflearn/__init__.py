"""Learning DNF expressions and polynomial threshold functions from their
heavy low-degree Fourier coefficients."""

from ptflearn.errors import BudgetExhausted, ContractViolation, FrontierExceeded

__version__ = "0.1.0"

__all__ = ["BudgetExhausted", "ContractViolation", "FrontierExceeded", "__version__"]
