"""The four-AS lab, its community policies, and the experiment matrix.

Topology (arrows are eBGP sessions, plain lines iBGP full mesh):

            AS Z (64498)
               Z1  ... originates 198.51.100.0/24
              /  \\
         eBGP    eBGP
            /      \\
           Y2 ----- Y3      AS Y (64497)
             \\     /
              \\   /
               Y1
               |
              eBGP
               |
               X1           AS X (64496)
               |
              eBGP
               |
               C1           AS C (64499), the collector

Y2 is preferred at Y1 before the flap (lower router id breaks the
tie); disabling the Y1-Y2 link switches Y1's best route to the Y3
branch, changing only the internal next hop unless ingress policies
tag each branch with a distinct community.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from .engine import CaptureLog, EBGP, IBGP, SimEvent, Simulation
from .routing import (
    ACTION_ADD_COMMUNITY,
    ACTION_STRIP_ALL,
    Announcement,
    PolicyRule,
    RouterProfile,
)

ASN_X = 64496
ASN_Y = 64497
ASN_Z = 64498
ASN_C = 64499

LAB_PREFIX = "198.51.100.0/24"
COMMUNITY_Y300 = (ASN_Y << 16) | 300  # tagged at Y2 ingress
COMMUNITY_Y400 = (ASN_Y << 16) | 400  # tagged at Y3 ingress

FLAP_AT = 100

PROFILES: dict[str, RouterProfile] = {
    p.name: p
    for p in (
        RouterProfile(
            name="default-forwarding",
            maintains_adj_rib_out=False,
            forwards_communities_ebgp_default=True,
        ),
        RouterProfile(
            name="adj-rib-out",
            maintains_adj_rib_out=True,
            forwards_communities_ebgp_default=True,
        ),
        RouterProfile(
            name="no-forward",
            maintains_adj_rib_out=False,
            forwards_communities_ebgp_default=False,
        ),
        RouterProfile(
            name="community-suppress",
            maintains_adj_rib_out=False,
            forwards_communities_ebgp_default=True,
            suppress_dup_on_community_change_only=True,
        ),
    )
}

_ROUTERS = (
    ("X1", ASN_X),
    ("Y1", ASN_Y),
    ("Y2", ASN_Y),
    ("Y3", ASN_Y),
    ("Z1", ASN_Z),
    ("C1", ASN_C),
)

_SESSIONS = (
    ("Y1", "Y2", IBGP),
    ("Y1", "Y3", IBGP),
    ("Y2", "Y3", IBGP),
    ("Z1", "Y2", EBGP),
    ("Z1", "Y3", EBGP),
    ("Y1", "X1", EBGP),
    ("X1", "C1", EBGP),
)

# ingress tagging used by exp2/exp3/exp4: each Y border router marks
# which branch a route entered through
_TAG_POLICIES = (
    ("Y2", PolicyRule("ingress", "Z1", ACTION_ADD_COMMUNITY, COMMUNITY_Y300)),
    ("Y3", PolicyRule("ingress", "Z1", ACTION_ADD_COMMUNITY, COMMUNITY_Y400)),
)


@dataclass(frozen=True)
class Experiment:
    """One scripted lab run: policies, session overrides, the flap."""

    name: str
    policies: tuple[tuple[str, PolicyRule], ...] = ()
    # eBGP sessions forced to carry communities regardless of profile;
    # exp3/exp4 pin the Y1-X1 session open so the filter placement at
    # X1 stays the only variable under test
    send_communities: tuple[tuple[str, str], ...] = ()
    events: tuple[SimEvent, ...] = (SimEvent(at=FLAP_AT, kind="link_down", a="Y1", b="Y2"),)


EXPERIMENTS: dict[str, Experiment] = {
    "exp1": Experiment(name="exp1"),
    "exp2": Experiment(name="exp2", policies=_TAG_POLICIES),
    "exp3": Experiment(
        name="exp3",
        policies=_TAG_POLICIES
        + (("X1", PolicyRule("egress", "C1", ACTION_STRIP_ALL)),),
        send_communities=(("Y1", "X1"),),
    ),
    "exp4": Experiment(
        name="exp4",
        policies=_TAG_POLICIES
        + (("X1", PolicyRule("ingress", "Y1", ACTION_STRIP_ALL)),),
        send_communities=(("Y1", "X1"),),
    ),
}


def build_lab_topology(
    profile: RouterProfile,
    policies: Iterable[tuple[str, PolicyRule]] = (),
    send_communities: Iterable[tuple[str, str]] = (),
) -> Simulation:
    """Assemble the lab with one behavior profile on every router."""
    sim = Simulation()
    for name, asn in _ROUTERS:
        sim.add_router(name, asn, profile)
    for a, b, kind in _SESSIONS:
        sim.add_session(a, b, kind)
    for a, b in send_communities:
        sim.session_between(a, b).send_communities = True
    for router, rule in policies:
        sim.routers[router].policies.append(rule)
    sim.set_origin("Z1", LAB_PREFIX)
    return sim


def run_experiment(
    name: str, profile: RouterProfile
) -> tuple[Simulation, CaptureLog]:
    exp = EXPERIMENTS[name]
    sim = build_lab_topology(profile, exp.policies, exp.send_communities)
    log = sim.run(exp.events)
    return sim, log


def _has_duplicate(
    log: CaptureLog, sender: str, receiver: str, since: int
) -> bool:
    """Any announcement at/after `since` equal to its predecessor?"""
    previous: dict[str, Announcement] = {}
    for entry in log.announcements(sender, receiver):
        msg = entry.message
        if entry.at >= since and previous.get(msg.prefix) == msg:
            return True
        previous[msg.prefix] = msg
    return False


def _carries_as_community(log: CaptureLog, sender: str, receiver: str, asn: int) -> bool:
    return any(
        community >> 16 == asn
        for entry in log.announcements(sender, receiver)
        for community in entry.message.communities
    )


@dataclass(frozen=True)
class ExperimentOutcome:
    profile: str
    exp1: bool  # duplicate on Y1->X1 after the next-hop-only flap
    exp2: bool  # community tagged inside Y visible at the collector
    exp3: bool  # duplicate at the collector despite egress strip at X1
    exp4: bool  # ingress strip at X1 stops the duplicate entirely

    def as_tuple(self) -> tuple[bool, bool, bool, bool]:
        return (self.exp1, self.exp2, self.exp3, self.exp4)


def evaluate_profile(profile: RouterProfile) -> ExperimentOutcome:
    _, log1 = run_experiment("exp1", profile)
    _, log2 = run_experiment("exp2", profile)
    _, log3 = run_experiment("exp3", profile)
    _, log4 = run_experiment("exp4", profile)
    return ExperimentOutcome(
        profile=profile.name,
        exp1=_has_duplicate(log1, "Y1", "X1", FLAP_AT),
        exp2=_carries_as_community(log2, "X1", "C1", ASN_Y),
        exp3=_has_duplicate(log3, "X1", "C1", FLAP_AT),
        exp4=not log4.announcements("X1", "C1", since=FLAP_AT),
    )


def run_experiment_matrix(
    profiles: Optional[Sequence[RouterProfile]] = None,
) -> list[ExperimentOutcome]:
    if profiles is None:
        profiles = list(PROFILES.values())
    return [evaluate_profile(p) for p in profiles]
