"""Advisors answer failure queries: mock rule tables, a null baseline, or an external model."""

from .llm import LlmAdvisor, LlmConfig, ReplayTransport, llm_advise
from .mock import MockAdvisor, NullAdvisor, mock_advise, null_advise
from .protocol import (
    WILL_FAIL,
    WILL_SUCCEED,
    Advisor,
    AdvisorQuery,
    AdvisorVerdict,
    ConditionDefinition,
    MissingCondition,
    RecoveryProposal,
    parse_verdict,
    validate_verdict,
)

ADVISOR_NAMES = ("mock", "mock-blind", "llm", "null")


def make_advisor(name: str, **kwargs) -> Advisor:
    if name == "mock":
        return MockAdvisor("full")
    if name == "mock-blind":
        return MockAdvisor("blind")
    if name == "null":
        return NullAdvisor()
    if name == "llm":
        return LlmAdvisor(**kwargs)
    raise ValueError(f"unknown advisor {name!r}; choose from {', '.join(ADVISOR_NAMES)}")


__all__ = [
    "ADVISOR_NAMES",
    "Advisor",
    "AdvisorQuery",
    "AdvisorVerdict",
    "ConditionDefinition",
    "LlmAdvisor",
    "LlmConfig",
    "MissingCondition",
    "MockAdvisor",
    "NullAdvisor",
    "RecoveryProposal",
    "ReplayTransport",
    "WILL_FAIL",
    "WILL_SUCCEED",
    "llm_advise",
    "make_advisor",
    "mock_advise",
    "null_advise",
    "parse_verdict",
    "validate_verdict",
]
