"""Exception hierarchy shared by all kwf modules."""


class KwfError(Exception):
    """Base class; the CLI maps these to exit code 2."""


# keystructure
class PatternError(KwfError):
    pass


class AdjacentSlots(PatternError):
    pass


class NoKeyword(PatternError):
    pass


class RoleCountMismatch(PatternError):
    pass


class DuplicatePragmatics(KwfError):
    pass


class DuplicateId(KwfError):
    pass


class UnknownTag(KwfError):
    pass


class GrammarError(KwfError):
    pass


# pump
class UnbalancedTag(KwfError):
    pass


class NestedSameTag(KwfError):
    pass


# crystallizer
class EmptyCrystal(KwfError):
    pass


class RequirementViolation(KwfError):
    pass


# knowware
class IncompleteMeta(KwfError):
    pass


class MalformedContainer(KwfError):
    pass


# middleware
class VerifyFailed(KwfError):
    pass


class NoKeyRole(KwfError):
    pass


class MixedSubjects(KwfError):
    pass


class MixedPragmatics(KwfError):
    pass


# binder
class UnboundKnowware(KwfError):
    pass


class DuplicateMemberUnresolvable(KwfError):
    pass


class NoSuchMethod(KwfError):
    pass


class MissingData(KwfError):
    pass


class PlanMismatch(KwfError):
    pass


class NotCoUsed(KwfError):
    pass


class ProgramInvalid(KwfError):
    pass


# server
class WrongLayer(KwfError):
    pass


class NotFound(KwfError):
    pass


class FormatError(KwfError):
    """A text file (ks, kel, view, program) could not be parsed."""
