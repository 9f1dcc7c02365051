import os
from dataclasses import dataclass, replace

BUDGET_ENV_VAR = "SOS_GGM_BUDGET"
DEFAULT_BUDGET = 4_000_000


@dataclass(frozen=True)
class SolverConfig:
    """Numeric defaults shared by the solvers, the measure builders and the CLI"""

    tol: float = 1e-12
    residual_tol: float = 1e-10
    dedupe_tol: float = 1e-9
    diagonal_tol: float = 1e-6
    branch_merge_tol: float = 1e-8
    refine_width: float = 1e-13
    truncation: int = 20
    radius: int = 1
    budget: int = DEFAULT_BUDGET
    transition_width: float = 1e-6
    multistart: int = 50

    @classmethod
    def from_env(cls, environ=None):
        """
        Build the configuration, letting SOS_GGM_BUDGET override the enumeration budget

        Args:
            environ (Mapping): Environment to read, defaults to os.environ

        Returns:
            SolverConfig: Configuration with the budget override applied
        """
        environ = os.environ if environ is None else environ
        raw = environ.get(BUDGET_ENV_VAR)
        if raw is None or raw.strip() == "":
            return cls()
        try:
            budget = int(raw.replace("_", ""))
        except ValueError:
            raise ValueError(f"{BUDGET_ENV_VAR} must be an integer, got {raw!r}")
        if budget <= 0:
            raise ValueError(f"{BUDGET_ENV_VAR} must be positive, got {budget}")
        return cls(budget=budget)

    def with_overrides(self, **changes):
        """Copy with the non-None keyword values replaced"""
        return replace(self, **{key: value for key, value in changes.items() if value is not None})


# Configuration for the solver package
config = SolverConfig.from_env()
