"""Spiral-wave anchoring under combined rotational and translational
symmetry breaking: drift dynamics near a rotating wave, Poincare/Floquet
analysis of anchoring, and a desk-scale excitable-media experiment."""

__version__ = "0.1.0"

from .bundle import (
    BundleParams,
    HFamily,
    PerturbationSpec,
    eval_G,
    eval_H,
    rhs,
    rhs_transformed,
)
from .dynamics import (
    DirectFlow,
    PoincareResult,
    ScanRecord,
    ScanTable,
    Trajectory,
    TransformedFlow,
    anchoring_center,
    classify,
    integrate,
    monodromy,
    newton_fixed_point,
    parameter_grid,
    time2pi_map,
    wedge_scan,
)
from .fourier import (
    FourierSeries,
    ReferencePath,
    build_FG_j1,
    build_FG_jstar,
    series_eval,
    solve_U,
    sup_norm,
    y_apply,
    y_invert,
)
from .rdas import (
    Field2D,
    RdasConfig,
    RdasResult,
    TipPath,
    build_phi,
    bump_value,
    ddx1,
    init_spiral,
    laplacian5,
    read_snapshot,
    rest_state,
    revolution_centers,
    rk2_step,
    tip_locate,
    write_snapshot,
)
from .rdas import run as run_rdas
from . import errors

__all__ = [
    "BundleParams",
    "HFamily",
    "PerturbationSpec",
    "eval_G",
    "eval_H",
    "rhs",
    "rhs_transformed",
    "FourierSeries",
    "ReferencePath",
    "series_eval",
    "sup_norm",
    "y_apply",
    "y_invert",
    "build_FG_j1",
    "build_FG_jstar",
    "solve_U",
    "Trajectory",
    "integrate",
    "TransformedFlow",
    "DirectFlow",
    "time2pi_map",
    "monodromy",
    "newton_fixed_point",
    "anchoring_center",
    "classify",
    "wedge_scan",
    "parameter_grid",
    "PoincareResult",
    "ScanRecord",
    "ScanTable",
    "Field2D",
    "RdasConfig",
    "RdasResult",
    "TipPath",
    "laplacian5",
    "ddx1",
    "build_phi",
    "bump_value",
    "rest_state",
    "init_spiral",
    "rk2_step",
    "tip_locate",
    "run_rdas",
    "revolution_centers",
    "read_snapshot",
    "write_snapshot",
    "errors",
    "__version__",
]
