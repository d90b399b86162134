from .ambit_set import AmbitSet, BoundaryArc, BoundaryDiscretization
from .circle_quadrature import CircleQuadrature
from .experiment import DEFAULT_R_GRID, DEFAULT_Z_GRID, Experiment, ModelOptions
from .kernel_specs import (
    BumpVanishing,
    Isotropic,
    KernelSpec,
    Polynomial,
    PolynomialRadial,
    PowerLaw,
    RadialProfile,
    Tabulated,
    kernel_from_dict,
    profile_from_dict,
)
from .levy_measures import (
    CompoundPoisson,
    ConstantJumps,
    DiscreteJumps,
    ExponentialJumps,
    GHDensity,
    JumpLaw,
    LevyMeasure,
    NormalJumps,
    StableDensity,
    jump_law_from_dict,
    levy_measure_from_dict,
)
from .realizations import (
    AtomRealization,
    ConstantVolatility,
    GridRealization,
    IndependentGridVolatility,
    LatticeVolatility,
    LevyRealization,
    VolatilityField,
    VolatilitySpec,
    Window,
    volatility_from_dict,
)
from .reports import (
    RegularityReport,
    AuditReport,
    CFReport,
    ComponentDiagnostic,
    FluxDecomposition,
    IntegrabilityReport,
    IsotropyReport,
    ModelReport,
    RateReport,
    TailFit,
)
from .shapes import (
    Annulus,
    BoundaryCurve,
    CircleCurve,
    ConvexPolygon,
    Disk,
    JordanDomainSpec,
    PolygonCurve,
    SetDifference,
    shape_from_dict,
)
from .triplet import CharacteristicTriplet, Regime, SeedStableParams
