"""Exact cube geometry, almost-polynomially-convex decompositions and their certificates."""

from polyconvex.boxes import Box, Strip, component_count, measure_of_box_union, rescale_boxes
from polyconvex.certificate import CertificateStructureError, ReplayReport, SplitStep
from polyconvex.cubes import (
    DisjointnessError,
    HostLemmaError,
    SubCubeIndex,
    UnitCube,
    grid_incidence,
    host_grid_cube,
    nearest_lattice,
)
from polyconvex.decompose import (
    DecompositionParameterError,
    DecompositionResult,
    certificate_replay,
    decompose,
    rescale_result,
)
from polyconvex.kallin import (
    KallinPreconditionError,
    KallinWitness,
    ProductCertificate,
    kallin_witness,
    product_union_certificate,
    replay_product_certificate,
)

__all__ = [
    "Box",
    "CertificateStructureError",
    "DecompositionParameterError",
    "DecompositionResult",
    "DisjointnessError",
    "HostLemmaError",
    "KallinPreconditionError",
    "KallinWitness",
    "ProductCertificate",
    "ReplayReport",
    "SplitStep",
    "Strip",
    "SubCubeIndex",
    "UnitCube",
    "certificate_replay",
    "component_count",
    "decompose",
    "grid_incidence",
    "host_grid_cube",
    "kallin_witness",
    "measure_of_box_union",
    "nearest_lattice",
    "product_union_certificate",
    "replay_product_certificate",
    "rescale_boxes",
    "rescale_result",
]
