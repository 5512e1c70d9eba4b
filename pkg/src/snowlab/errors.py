"""Exception hierarchy.

Every error carries a stable ``code`` so the CLI can emit machine-readable
failure payloads.
"""
from __future__ import annotations


class SnowlabError(ValueError):
    code = "SnowlabError"

    def payload(self) -> dict:
        return {"code": self.code, "message": str(self)}


class MatrixFormatError(SnowlabError):
    code = "MatrixFormatError"


class NonSymmetric(SnowlabError):
    code = "NonSymmetric"

    def __init__(self, pair):
        self.pair = tuple(int(v) for v in pair)
        super().__init__(f"dist[{self.pair[0]}][{self.pair[1]}] != dist[{self.pair[1]}][{self.pair[0]}]")

    def payload(self):
        return {**super().payload(), "pair": list(self.pair)}


class NegativeEntry(SnowlabError):
    code = "NegativeEntry"

    def __init__(self, pair):
        self.pair = tuple(int(v) for v in pair)
        super().__init__(f"negative distance at {self.pair}")

    def payload(self):
        return {**super().payload(), "pair": list(self.pair)}


class NonzeroDiagonal(SnowlabError):
    code = "NonzeroDiagonal"

    def __init__(self, index):
        self.index = int(index)
        super().__init__(f"dist[{self.index}][{self.index}] != 0")

    def payload(self):
        return {**super().payload(), "index": self.index}


class TriangleViolation(SnowlabError):
    """``dist[i][k] > dist[i][j] + dist[j][k]``; ``triple`` is ``(i, k, j)``."""

    code = "TriangleViolation"

    def __init__(self, triple, excess: float):
        self.triple = tuple(int(v) for v in triple)
        self.excess = float(excess)
        i, k, j = self.triple
        super().__init__(f"triangle inequality fails for d({i},{k}) via {j} (excess {self.excess!r})")

    def payload(self):
        return {**super().payload(), "triple": list(self.triple), "excess": self.excess}


class UltrametricViolation(TriangleViolation):
    code = "UltrametricViolation"


class SOutOfRange(SnowlabError):
    code = "SOutOfRange"


class DegenerateSpace(SnowlabError):
    code = "DegenerateSpace"


class EmptyThresholds(SnowlabError):
    code = "EmptyThresholds"


class BadExponents(SnowlabError):
    code = "BadExponents"


class InfeasibleWindow(SnowlabError):
    code = "InfeasibleWindow"


class OutOfDomain(SnowlabError):
    code = "OutOfDomain"


class ToleranceUnreachable(SnowlabError):
    code = "ToleranceUnreachable"


class InvalidCube(SnowlabError):
    code = "InvalidCube"


class SanityFailure(SnowlabError):
    code = "SanityFailure"

    def __init__(self, message: str, witness=None):
        self.witness = witness
        super().__init__(message)

    def payload(self):
        return {**super().payload(), "witness": self.witness}


class ConfigError(SnowlabError):
    code = "ConfigError"
