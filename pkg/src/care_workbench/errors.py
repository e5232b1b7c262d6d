"""Error types shared across the workbench.

Every domain failure carries a stable machine-readable ``code`` drawn from a
closed set, so the HTTP API and the CLI can map failures deterministically
(see ``control_plane``). Programmer errors (bad argument types, violated call
preconditions that are not part of a documented contract) raise plain
``ValueError``/``TypeError`` instead.
"""

from __future__ import annotations

from typing import Any


class CareError(Exception):
    """Base class for all domain errors.

    Attributes:
        code: stable machine token, e.g. ``stale_base`` or ``gate_not_satisfied``.
        message: human-readable description.
        details: optional structured payload (e.g. a gate's missing list).
    """

    code: str = "error"

    def __init__(self, message: str, *, code: str | None = None, details: dict[str, Any] | None = None):
        super().__init__(message)
        if code is not None:
            self.code = code
        self.message = message
        self.details: dict[str, Any] = details or {}

    def to_payload(self) -> dict[str, Any]:
        return {"code": self.code, "message": self.message, "details": self.details}


class NotFoundError(CareError):
    code = "not_found"


# --- artifact_store ---------------------------------------------------------

class IllegalKindForPhase(CareError):
    code = "illegal_kind_for_phase"


class EmptyContent(CareError):
    code = "empty_content"


class StaleBase(CareError):
    code = "stale_base"


class MalformedDiff(CareError):
    code = "malformed_diff"


class DiffConflict(CareError):
    code = "diff_conflict"


class ProposalNotPending(CareError):
    code = "proposal_not_pending"


class HelperAgentCannotApprove(CareError):
    code = "helper_agent_cannot_approve"


class VersionNotHead(CareError):
    code = "version_not_head"


class RejectedRequiresRevision(CareError):
    code = "rejected_requires_revision"


# --- phase_engine -----------------------------------------------------------

class GateNotSatisfied(CareError):
    code = "gate_not_satisfied"


class AlreadyAtFinalPhase(CareError):
    code = "already_at_final_phase"


class NotAnEarlierPhase(CareError):
    code = "not_an_earlier_phase"


# --- helper_agent / transports ----------------------------------------------

class TransportFailure(CareError):
    code = "transport_failure"


class TemplateViolation(CareError):
    code = "template_violation"


# --- cmr_client ---------------------------------------------------------------

class NetworkError(CareError):
    code = "network_error"


class MalformedResponse(CareError):
    code = "malformed_response"


# --- benchmark ----------------------------------------------------------------

class EmptyExpectedSet(CareError):
    code = "empty_expected_set"


class EmptyCorpus(CareError):
    code = "empty_corpus"


class BenchmarkMismatch(CareError):
    code = "benchmark_mismatch"


class FairnessViolation(CareError):
    code = "fairness_violation"


# --- control_plane ------------------------------------------------------------

class AuthFailure(CareError):
    code = "auth_failure"


class RoleForbidden(CareError):
    code = "role_forbidden"


#: The closed set of error codes the HTTP API may emit, with their status codes.
HTTP_STATUS_BY_CODE: dict[str, int] = {
    "not_found": 404,
    "illegal_kind_for_phase": 422,
    "empty_content": 422,
    "stale_base": 409,
    "malformed_diff": 422,
    "diff_conflict": 409,
    "proposal_not_pending": 409,
    "helper_agent_cannot_approve": 403,
    "version_not_head": 409,
    "rejected_requires_revision": 409,
    "gate_not_satisfied": 409,
    "already_at_final_phase": 409,
    "not_an_earlier_phase": 422,
    "transport_failure": 502,
    "template_violation": 422,
    "network_error": 502,
    "malformed_response": 502,
    "empty_expected_set": 422,
    "empty_corpus": 422,
    "benchmark_mismatch": 422,
    "fairness_violation": 409,
    "auth_failure": 401,
    "role_forbidden": 403,
    "invalid_request": 422,
    "error": 500,
}
