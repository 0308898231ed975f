"""Nested towers over free R^{2d} actions and the staged construction on them."""

from towers.centers import CubeCollection, assemble_collection, choose_centers
from towers.model import ActionModel, FlowState, SampledActionModel, SolenoidActionModel, rotation_vector
from towers.partition import (
    PartitionData,
    PartitionReport,
    ReturnSet,
    delta_fine_partition,
    hausdorff_distance,
    refines,
    return_sets,
    signature_distance,
    trivial_partition,
    validate_partition,
)
from towers.stage import (
    BudgetReport,
    CellStage,
    ConditionDCertificate,
    ErrorLedger,
    GeneralStage,
    budget_ledger,
    build_general,
    condition_d_bound,
    condition_d_check,
    first_general_stage,
    general_stage,
    modulus_delta,
)
from towers.tower import (
    BudgetViolationError,
    ConditionDError,
    DomainError,
    NoRoomError,
    PartitionResourceError,
    StageFitError,
    TowerData,
    TowerParameterError,
)
from towers.validate import CoverageEstimate, TowerReport, check_action_laws, estimate_coverage, validate_tower

__all__ = [
    "ActionModel",
    "BudgetReport",
    "BudgetViolationError",
    "CellStage",
    "ConditionDCertificate",
    "ConditionDError",
    "CoverageEstimate",
    "CubeCollection",
    "DomainError",
    "ErrorLedger",
    "FlowState",
    "GeneralStage",
    "NoRoomError",
    "PartitionData",
    "PartitionReport",
    "PartitionResourceError",
    "ReturnSet",
    "SampledActionModel",
    "SolenoidActionModel",
    "StageFitError",
    "TowerData",
    "TowerParameterError",
    "TowerReport",
    "assemble_collection",
    "budget_ledger",
    "build_general",
    "check_action_laws",
    "choose_centers",
    "condition_d_bound",
    "condition_d_check",
    "delta_fine_partition",
    "estimate_coverage",
    "first_general_stage",
    "general_stage",
    "hausdorff_distance",
    "modulus_delta",
    "refines",
    "return_sets",
    "rotation_vector",
    "signature_distance",
    "trivial_partition",
    "validate_partition",
    "validate_tower",
]
