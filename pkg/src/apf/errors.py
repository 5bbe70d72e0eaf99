from __future__ import annotations


class ApfError(Exception):
    """Base class for all errors raised by the kernel."""


# -- ajd ----------------------------------------------------------------------


class AjdError(ApfError):
    pass


class MalformedDocument(AjdError):
    pass


class MissingComponent(AjdError):
    def __init__(self, name: str):
        super().__init__(f"missing component: {name}")
        self.name = name


class UnknownDomainKind(AjdError):
    def __init__(self, value: object):
        super().__init__(f"unknown domain kind: {value!r}")
        self.value = value


class DanglingDomainRef(AjdError):
    def __init__(self, domain_id: str, where: str = ""):
        suffix = f" (referenced from {where})" if where else ""
        super().__init__(f"dangling domain reference: {domain_id!r}{suffix}")
        self.domain_id = domain_id
        self.where = where


class DuplicateDomainId(AjdError):
    def __init__(self, domain_id: str):
        super().__init__(f"duplicate domain id: {domain_id!r}")
        self.domain_id = domain_id


# -- world --------------------------------------------------------------------


class WorldError(ApfError):
    pass


class UnknownDomain(WorldError):
    pass


class UnknownVariable(WorldError):
    pass


class LexicalTarget(WorldError):
    pass


class UnknownVerb(WorldError):
    pass


class DomainFault(WorldError):
    pass


class PastTick(WorldError):
    pass


# -- performer ----------------------------------------------------------------


class PerformerError(ApfError):
    pass


class NoCapabilityCoversIntent(PerformerError):
    pass


class UnknownSlot(PerformerError):
    pass


class AlreadyBound(PerformerError):
    pass


# -- verification ---------------------------------------------------------------


class VerificationError(ApfError):
    pass


class SelfApproval(VerificationError):
    pass


class ApproverUnavailable(VerificationError):
    pass


# -- ledger ---------------------------------------------------------------------


class LedgerError(ApfError):
    pass


class UncertifiedFact(LedgerError):
    pass


class IncompleteTrajectory(LedgerError):
    pass


# -- scenarios / trace ------------------------------------------------------------


class FixtureParseError(ApfError):
    pass


class TraceSchemaError(ApfError):
    def __init__(self, message: str, line: int | None = None):
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)
        self.line = line
