"""Router state and per-router BGP mechanics.

Wire messages carry (prefix, path, communities, next_hop, med); RIB
routes additionally remember where they were learned.  The decision
process and export rules live here; the event loop lives in engine.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union


@dataclass(frozen=True)
class Announcement:
    prefix: str
    path: tuple[int, ...]
    communities: tuple[int, ...] = ()
    next_hop: str = ""
    med: Optional[int] = None


@dataclass(frozen=True)
class Withdrawal:
    prefix: str


Message = Union[Announcement, Withdrawal]


@dataclass(frozen=True)
class Route:
    """One RIB entry; wire attributes plus bookkeeping."""

    prefix: str
    path: tuple[int, ...]
    communities: tuple[int, ...]
    next_hop: str
    med: Optional[int] = None
    local_pref: int = 100
    learned_from: Optional[str] = None  # neighbor name; None = originated here
    ebgp: bool = False

    @property
    def originated(self) -> bool:
        return self.learned_from is None


@dataclass(frozen=True)
class RouterProfile:
    """Behavior switches distinguishing the observed implementations.

    maintains_adj_rib_out: keep per-neighbor sent state and never
    re-send an advertisement equal to it.
    forwards_communities_ebgp_default: send communities over eBGP
    without per-session opt-in.
    suppress_dup_on_community_change_only: suppress an equal
    re-advertisement only when the local best route kept its next hop
    (a pure community change); a next-hop change still re-sends.
    """

    name: str = "default-forwarding"
    maintains_adj_rib_out: bool = False
    forwards_communities_ebgp_default: bool = True
    suppress_dup_on_community_change_only: bool = False


ACTION_ADD_COMMUNITY = "add_community"
ACTION_STRIP_ALL = "strip_all_communities"
ACTION_NONE = "none"


@dataclass(frozen=True)
class PolicyRule:
    """Community manipulation attached to one router/session/direction."""

    direction: str  # ingress | egress
    neighbor: str
    action: str
    community: Optional[int] = None

    def apply(self, communities: tuple[int, ...]) -> tuple[int, ...]:
        if self.action == ACTION_STRIP_ALL:
            return ()
        if self.action == ACTION_ADD_COMMUNITY:
            if self.community is None:
                raise ValueError("add_community rule without a value")
            return communities + (self.community,)
        return communities


@dataclass
class SimRouter:
    name: str
    asn: int
    router_id: int
    profile: RouterProfile = field(default_factory=RouterProfile)
    policies: list[PolicyRule] = field(default_factory=list)
    # (neighbor, prefix) -> Route as accepted after ingress policy
    adj_rib_in: dict[tuple[str, str], Route] = field(default_factory=dict)
    loc_rib: dict[str, Route] = field(default_factory=dict)
    origin_routes: dict[str, Route] = field(default_factory=dict)
    # (neighbor, prefix) -> last message sent; doubles as the
    # Adj-RIB-Out when the profile maintains one
    last_sent: dict[tuple[str, str], Message] = field(default_factory=dict)

    def rules(self, direction: str, neighbor: str) -> list[PolicyRule]:
        return [
            r
            for r in self.policies
            if r.direction == direction and r.neighbor == neighbor
        ]

    def apply_policies(
        self, direction: str, neighbor: str, communities: tuple[int, ...]
    ) -> tuple[int, ...]:
        for rule in self.rules(direction, neighbor):
            communities = rule.apply(communities)
        return communities

    def rib_in_routes(self, prefix: str) -> list[tuple[str, Route]]:
        return [
            (neighbor, route)
            for (neighbor, p), route in self.adj_rib_in.items()
            if p == prefix
        ]
