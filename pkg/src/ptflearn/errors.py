class ContractViolation(RuntimeError):
    """An algorithm observed a state its guarantees rule out (CLI exit code 2)."""


class BudgetExhausted(RuntimeError):
    """An oracle or search ran past its configured budget (CLI exit code 3)."""


class FrontierExceeded(BudgetExhausted):
    """The feature-construction frontier outgrew its cap.

    Under a smoothed distribution this usually means an unlucky perturbation
    rather than a bug, so callers may retry with a fresh draw.
    """
