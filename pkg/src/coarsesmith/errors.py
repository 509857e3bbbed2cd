"""Exception hierarchy shared by every module."""


class CoarseSmithError(Exception):
    """Base class; ``module`` names the pipeline stage that raised."""

    module = "coarsesmith"


class IdentityFailure(CoarseSmithError):
    """A mathematical identity that must hold exactly did not (signals a bug)."""


# metric_core
class NonSquareMatrix(CoarseSmithError):
    module = "metric_core"


class NegativeDistance(CoarseSmithError):
    module = "metric_core"


class NotAPermutation(CoarseSmithError):
    module = "metric_core"


class GroupLawViolation(CoarseSmithError):
    module = "metric_core"


class NonSymmetricGenerators(CoarseSmithError):
    module = "metric_core"


class InvalidAction(CoarseSmithError):
    module = "metric_core"


class EmptySubsetOfNonemptySpace(CoarseSmithError):
    module = "metric_core"


# fixed_sets
class EmptyScaleList(CoarseSmithError):
    module = "fixed_sets"


class ActionNotLeftMultiplication(CoarseSmithError):
    module = "fixed_sets"


# coverings
class RadiusNotPositive(CoarseSmithError):
    module = "coverings"


class CannotSatisfyLebesgue(CoarseSmithError):
    module = "coverings"


class NotAPartition(CoarseSmithError):
    module = "coverings"


# complexes
class NotRegular(CoarseSmithError):
    module = "complexes"


class RegularityNotReachedAfterTwo(IdentityFailure):
    module = "complexes"


class PointCoveredByNoSet(CoarseSmithError):
    module = "complexes"


class NotSimplicial(CoarseSmithError):
    module = "complexes"


# homology_fq
class NotASubcomplex(CoarseSmithError):
    module = "homology_fq"


class FrontierEmptyForUnboundedModel(CoarseSmithError):
    module = "homology_fq"


class TruncationMasksTopDegree(CoarseSmithError):
    module = "homology_fq"


class NotPrime(CoarseSmithError):
    module = "homology_fq"


# smith_theory
class NotCyclicOfOrderP(CoarseSmithError):
    module = "smith_theory"


class NotInvariant(CoarseSmithError):
    module = "smith_theory"


class ChainSequenceNotExact(IdentityFailure):
    module = "smith_theory"


# limits_cli
class BoundedFixedSetAbsent(CoarseSmithError):
    module = "limits_cli"


class NotStabilized(CoarseSmithError):
    module = "limits_cli"


class PreconditionFailed(CoarseSmithError):
    module = "limits_cli"
