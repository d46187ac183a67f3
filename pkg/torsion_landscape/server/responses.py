from typing import List, Optional

from pydantic import BaseModel

from torsion_landscape.analytic.field import DEFAULT_ALPHA, DEFAULT_H, RootConfig


class VerifyRequest(BaseModel):
    """
    Body of a verification request.
    Without ``roots`` the pattern +-(2j - 1) is used,
    without ``epsilon`` the epsilon search runs.
    """

    k: int = 2
    roots: Optional[List[float]] = None
    epsilon: Optional[float] = None
    alpha: float = DEFAULT_ALPHA
    h: float = DEFAULT_H

    def to_config(self) -> RootConfig:
        roots = self.roots if self.roots is not None else RootConfig.canonical_roots(self.k)
        # the search ignores epsilon, any admissible value will do
        epsilon = self.epsilon if self.epsilon is not None else 1.0
        return RootConfig(k=self.k, roots=roots, epsilon=epsilon, alpha=self.alpha, h=self.h)


class JobResults(BaseModel):
    id: str
    nextUri: Optional[str] = None
    cancelUri: Optional[str] = None


class ErrorDetail(BaseModel):
    type: str
    message: str


class ErrorResults(BaseModel):
    error: ErrorDetail

    @classmethod
    def from_exception(cls, error: Exception) -> "ErrorResults":
        return cls(error=ErrorDetail(type=type(error).__name__, message=str(error)))
