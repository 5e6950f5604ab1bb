"""Generalized happy numbers: the digit power-sum map, its cycle sets, fast
searches for runs of consecutive happy numbers, and checkable certificates
for arbitrarily long runs."""

from .core import (
    ClassifierCache,
    CycleSet,
    Params,
    Trajectory,
    condition_holds,
    contraction_bound,
    cycle_set,
    digits_of,
    is_happy,
    power_digit_sum,
    residue_invariance_witness,
    trajectory,
)
from .certificate import WitnessCertificate, verify_certificate
from .search import (
    RunRecord,
    ScanCheckpoint,
    find_cover_h,
    find_happy_in_residue,
    find_least_run,
    parallel_scan,
)

__version__ = "0.1.0"

__all__ = [
    "ClassifierCache",
    "CycleSet",
    "Params",
    "RunRecord",
    "ScanCheckpoint",
    "Trajectory",
    "WitnessCertificate",
    "condition_holds",
    "contraction_bound",
    "cycle_set",
    "digits_of",
    "find_cover_h",
    "find_happy_in_residue",
    "find_least_run",
    "is_happy",
    "parallel_scan",
    "power_digit_sum",
    "residue_invariance_witness",
    "trajectory",
    "verify_certificate",
]
