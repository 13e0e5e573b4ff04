"""Type definitions for the additive growth model toolkit."""

from enum import Enum

# Lattices are capped so that subsets of types fit in one machine word.
MAX_TYPES = 32

# Mapping tables hold |F|^|T| rows; larger tables are rejected.
MAX_TABLE_ENTRIES = 2**20

# Node budget for the bounded reachability search of the growth-model check.
DEFAULT_NODE_BUDGET = 10**6

# Boundedness check limits: sites read by one mapping and the rate of one mapping.
DEFAULT_MAX_SITES = 8
DEFAULT_MAX_RATE = 1e6

# Dual-type enumeration is exponential in |F|; warn above this size.
DUAL_WARN_TYPES = 20

# Self-duality search enumerates lattice isomorphisms only up to this size.
ISOMORPHISM_SEARCH_TYPES = 12

DEFAULT_CONFIDENCE = 0.95
CSV_PRECISION = 6

MODEL_FILE_FORMAT = "additive-growth/1"

PASSIVE = 0


class Verdict(str, Enum):
    """Outcome of a report-valued check."""

    OK = "ok"
    FAIL = "fail"
    INCONCLUSIVE = "inconclusive"


class MappingClass(str, Enum):
    """Classification of a transition mapping by the fate of its organisms."""

    PRODUCTIVE = "productive"  # every organism waxes
    DESTRUCTIVE = "destructive"  # every organism wanes
    MIXED = "mixed"


class FateVerdict(str, Enum):
    """Fate of one organism under one mapping."""

    WAXES = "waxes"
    WANES = "wanes"
    NEITHER = "neither"


class ProductionCategory(str, Enum):
    """Named production patterns of a single organism."""

    PERSISTENCE = "persistence"
    MOVEMENT = "movement"
    BIRTH = "birth"
    DEATH = "death"
    PROMOTION = "promotion"
    DEMOTION = "demotion"
    DEATH_WITH_DISPERSAL = "death-with-dispersal"
    NEIGHBOUR_ASSISTED_SURVIVAL = "neighbour-assisted-survival"
    TRANSMUTATION = "transmutation"
    OTHER = "other"


class GeometryKind(str, Enum):
    """Kind of finite site set a model is simulated on."""

    TORUS = "torus"
    GRAPH = "graph"


class GrowthModelError(ValueError):
    """Base class for every domain error; ``witness`` names the offending objects."""

    def __init__(self, message: str, witness=None):
        """Initialize the error with an optional witness."""
        super().__init__(message)
        self.witness = witness


class LatticeTooLarge(GrowthModelError):
    """Raised when a type set exceeds ``MAX_TYPES``."""


class PosetViolation(GrowthModelError):
    """Raised when the order relation is not a partial order with 0 at the bottom."""


class JoinViolation(GrowthModelError):
    """Raised when a join table is not the least upper bound of the order."""


class ArityMismatch(GrowthModelError):
    """Raised when a local configuration does not match a mapping's site tuple."""


class TableTooLarge(GrowthModelError):
    """Raised when a mapping table would exceed ``MAX_TABLE_ENTRIES`` rows."""


class DuplicateMapping(GrowthModelError):
    """Raised when an event structure holds the same mapping twice."""


class BoundExceeded(GrowthModelError):
    """Raised when a transition violates the site-count or rate bound."""


class NegativeRate(GrowthModelError):
    """Raised when a model parameter or rate is negative."""


class RateMismatch(GrowthModelError):
    """Raised when assigned mapping rates do not sum to the transition rate."""


class SideEffect(GrowthModelError):
    """Raised when a coupled mapping changes more than its assigned transitions."""


class OverlapViolation(GrowthModelError):
    """Raised when one mapping realizes transitions whose triggers can hold together."""


class NotAdditive(GrowthModelError):
    """Raised when an operation needs an additive mapping and gets another."""


class NotDualType(GrowthModelError):
    """Raised when a computed dual set is not increasing and decomposable."""


class NotMultiColour(GrowthModelError):
    """Raised when an operation needs unique decompositions of compound types."""


class CommutationFailure(GrowthModelError):
    """Raised when a lifted mapping does not project onto the original."""


class PreconditionFailed(GrowthModelError):
    """Raised when a statistical test is asked of a model that fails its conditions."""


class GeometryError(GrowthModelError):
    """Raised when templates cannot be placed on the requested site set."""


class ModelFileError(GrowthModelError):
    """Raised when a model file does not follow the schema."""
