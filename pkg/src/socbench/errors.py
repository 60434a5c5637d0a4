"""Exception hierarchy shared across the toolkit.

Every domain error derives from SocbenchError so that API handlers and the
CLI can map failures to status codes / exit codes in one place.
"""


class SocbenchError(Exception):
    """Base class for all domain errors."""


# -- capture format / transformation ----------------------------------------

class MalformedHeader(SocbenchError):
    """Input does not start with a valid classic pcap global header."""


class TruncatedPacket(SocbenchError):
    """A packet record is shorter than its header declares."""


class ReadOnlyCapture(SocbenchError):
    """The capture's link type does not support rewriting."""


class OverlappingMap(SocbenchError):
    """Two source prefixes of an address map overlap."""


class EmptyCapture(SocbenchError):
    """Operation requires at least one packet."""


class NonPositiveSpeed(SocbenchError):
    """Playback speed must be > 0."""


class MixedLinkType(SocbenchError):
    """Captures with different link types cannot be merged."""


# -- trace library -----------------------------------------------------------

class MalformedCapture(SocbenchError):
    """Uploaded capture bytes failed to parse."""


class RoleAddressAbsent(SocbenchError):
    """A role address never appears in the capture."""


class NotFound(SocbenchError):
    """Lookup by id failed."""


class TraceInUse(SocbenchError):
    """Trace is referenced by a stored scenario and cannot be removed."""


class NoTraceForPhase(SocbenchError):
    """Random pick requested for a phase with no traces."""


# -- scenario / assembly -----------------------------------------------------

class UnknownTrace(SocbenchError):
    """Scenario references a trace id that does not resolve."""


class SchemaViolation(SocbenchError):
    """Persisted JSON or uploaded data does not match the documented schema."""


class ConflictingRoles(SocbenchError):
    """An address ends up in both the attacker and victim sets."""


class GroundTruthIncomplete(SocbenchError):
    """Scenario yields an empty attacker or victim set."""


# -- injection ---------------------------------------------------------------

class SinkUnavailable(SocbenchError):
    """Injection sink cannot be opened or written."""


class PastSchedule(SocbenchError):
    """Scheduled start lies in the past."""


class CapturePermissionDenied(SocbenchError):
    """Raw-frame emission requires privileges the process lacks."""


class AlreadyFinished(SocbenchError):
    """Session is no longer cancellable."""


# -- report evaluation -------------------------------------------------------

class EmptyFile(SocbenchError):
    """Uploaded report file contains no data rows."""


class UnmatchedIncident(SocbenchError):
    """Incident does not match the ground truth it is scored against."""


class UnknownCondition(SocbenchError):
    """Report carries a condition label outside the declared set."""


# -- statistics --------------------------------------------------------------

class EmptySample(SocbenchError):
    """Rank-sum test requires both samples to be nonempty."""


class ArityMismatch(SocbenchError):
    """Condition comparison requires exactly two summaries."""


# -- service -----------------------------------------------------------------

class BindFailure(SocbenchError):
    """HTTP service could not bind its address."""
