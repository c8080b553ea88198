# app/schemas/report.py
from typing import Any, Dict, List, Optional

from pydantic import BaseModel

from app.schemas.verdict import Verdict, Witness


class ClaimCheck(BaseModel):
    claim: str
    reproduced: bool
    detail: str = ""


class Report(BaseModel):
    """
    Machine-readable outcome of one CLI command.

    Everything except `timings` is a function of the inputs, the seed and
    the tool version.
    """

    command: str
    inputs_digest: str
    tool_version: str
    seed: Optional[int] = None
    verdicts: Dict[str, Verdict] = {}
    certificates: Dict[str, Any] = {}
    witnesses: Dict[str, Witness] = {}
    claims: List[ClaimCheck] = []
    details: Dict[str, Any] = {}
    timings: Dict[str, float] = {}

    def add_verdict(self, name: str, verdict: Verdict) -> None:
        """Stores the verdict, moving its witness to the witnesses table."""
        if verdict.witness is not None:
            self.witnesses[name] = verdict.witness
            verdict = verdict.model_copy(update={"witness": None})
        self.verdicts[name] = verdict

    def add_claim(self, claim: str, reproduced: bool, detail: str = "") -> None:
        self.claims.append(ClaimCheck(claim=claim, reproduced=reproduced, detail=detail))

    @property
    def all_reproduced(self) -> bool:
        return all(c.reproduced for c in self.claims)
