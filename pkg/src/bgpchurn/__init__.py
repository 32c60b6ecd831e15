"""BGP update-churn toolkit.

Parses archived BGP messages bit-exactly, labels announcements by
path/community change, attributes beacon-prefix churn to schedule
phases, prunes update files down to their necessary messages, and
replays the update-suppression lab experiments in a deterministic
simulator.
"""

from .errors import BgpChurnError

__version__ = "0.1.0"

__all__ = ["BgpChurnError", "__version__"]
