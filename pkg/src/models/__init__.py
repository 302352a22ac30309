from .enums import (
    BehaviorKind,
    ContactKind,
    DynamicsMode,
    ObjectiveKind,
    OpponentKind,
    PuckStart,
    Side,
    SpeedModelKind,
)
from .errors import (
    ArtifactError,
    ConfigError,
    HockeyError,
    MissingArtifactError,
    SchemaVersionError,
)
from .table import (
    ContactEvent,
    MalletCommand,
    MalletState,
    PuckState,
    TableGeometry,
    WorldState,
)
from .belief import Belief, ObservationModel
from .plans import BehaviorMode, ContactPlan, ShotPlan
from .config import (
    ArmModel,
    EstimatorConfig,
    ExplorationPolicy,
    MatchConfig,
    MpcConfig,
    SamplerConfig,
    ShotConfig,
    ShotWeights,
    SimConfig,
    TacticConfig,
    TrainConfig,
    load_config,
)

__all__ = [
    "BehaviorKind",
    "ContactKind",
    "DynamicsMode",
    "ObjectiveKind",
    "OpponentKind",
    "PuckStart",
    "Side",
    "SpeedModelKind",
    "ArtifactError",
    "ConfigError",
    "HockeyError",
    "MissingArtifactError",
    "SchemaVersionError",
    "ContactEvent",
    "MalletCommand",
    "MalletState",
    "PuckState",
    "TableGeometry",
    "WorldState",
    "Belief",
    "ObservationModel",
    "BehaviorMode",
    "ContactPlan",
    "ShotPlan",
    "ArmModel",
    "EstimatorConfig",
    "ExplorationPolicy",
    "MatchConfig",
    "MpcConfig",
    "SamplerConfig",
    "ShotConfig",
    "ShotWeights",
    "SimConfig",
    "TacticConfig",
    "TrainConfig",
    "load_config",
]
