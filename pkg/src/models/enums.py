from enum import Enum


class DynamicsMode(str, Enum):
    """Locally-linear regimes of the puck dynamics."""

    FREE = "free"  # No wall or mallet contact
    WALL = "wall"  # Puck touching a table wall
    MALLET = "mallet"  # Puck touching a mallet


class ContactKind(str, Enum):
    """What the puck hit during a simulation step."""

    WALL = "Wall"
    MALLET = "Mallet"


class Side(str, Enum):
    """Goal side, seen from the agent."""

    OURS = "Ours"  # Goal behind the agent (x = -length/2)
    THEIRS = "Theirs"  # Opponent goal (x = +length/2)


class BehaviorKind(str, Enum):
    """Behavior modes of the heuristic state machine."""

    SHOOT = "Shoot"
    DEFEND = "Defend"
    PREPARE = "Prepare"
    HOME = "Home"


class ObjectiveKind(str, Enum):
    """What a contact plan is trying to achieve."""

    SHOT_ANGLE = "ShotAngle"
    KILL_VELOCITY = "KillVelocity"
    PREPARE_TARGET = "PrepareTarget"
    HOME = "Home"  # Rest target, no puck contact intended


class OpponentKind(str, Enum):
    """Opponent options for matches."""

    NONE = "None"
    STATIC_WALL = "StaticWall"  # Fixed blocking disc in front of their goal
    MIRROR_AGENT = "MirrorAgent"  # Same agent, rotated 180 degrees


class PuckStart(str, Enum):
    """How the puck is served at match start and after goals."""

    LAUNCH = "launch"  # Launched from the opponent half toward the agent
    STATIONARY = "stationary"  # At rest somewhere in the agent half


class SpeedModelKind(str, Enum):
    """Contact speed model used by the shot planner."""

    CONSTANT = "constant"
    ARM = "arm"
