"""Record cleaning: route-server path repair, timestamp disambiguation.

Both operations are order-preserving and idempotent; they run per file
before classification.
"""

from __future__ import annotations

from dataclasses import replace
from typing import Iterable, Iterator, Optional

from .allocation import AllocationTable, FilterStats, filter_allocated
from .mrt.bgp import AS_SEQUENCE, BgpAttributes, PathSegment
from .model import UpdateRecord

FLAG_REPAIRED_PATH = "repaired_path"
FLAG_ANOMALOUS_EMPTY_PATH = "anomalous_empty_path"
FLAG_OVERFLOW_SECOND = "overflow_second"


def _leftmost_asn(record: UpdateRecord) -> Optional[int]:
    for el in record.path_elements():
        return el if isinstance(el, int) else None
    return None


def repair_route_server_path(record: UpdateRecord) -> UpdateRecord:
    """Prepend the peer ASN when a route server left itself off the path.

    Applies to announcements whose leftmost AS differs from the session
    peer; an empty path becomes just the peer ASN and is flagged
    anomalous.  Multi-hop gaps beyond the one missing ASN cannot be
    detected here and are left alone.
    """
    if not record.is_announcement or record.attrs is None:
        return record
    peer = record.session.peer_asn
    elements = record.path_elements()
    if elements and _leftmost_asn(record) == peer:
        return record
    new_segments = (PathSegment(AS_SEQUENCE, (peer,)),) + record.attrs.segments
    attrs = replace(record.attrs, segments=new_segments)
    flagged = record.with_flag(FLAG_REPAIRED_PATH)
    if not elements:
        flagged = flagged.with_flag(FLAG_ANOMALOUS_EMPTY_PATH)
    return replace(flagged, attrs=attrs)


def disambiguate_timestamps(
    records: Iterable[UpdateRecord],
) -> Iterator[UpdateRecord]:
    """Spread same-second runs of coarse timestamps by +1 us per record.

    Only records without native microsecond stamps are renumbered; a
    run longer than 10^6 spills into the next second's range and is
    flagged.  Native-stamped records break a run.
    """
    run_second: Optional[int] = None
    run_index = 0
    for rec in records:
        if rec.native_usec:
            run_second = None
            yield rec
            continue
        second = rec.arrival_us // 1_000_000
        if second != run_second:
            run_second = second
            run_index = 0
        if run_index == 0:
            run_index = 1
            yield rec
            continue
        bumped = replace(rec, arrival_us=second * 1_000_000 + run_index)
        if run_index >= 1_000_000:
            bumped = bumped.with_flag(FLAG_OVERFLOW_SECOND)
        run_index += 1
        yield bumped


def normalize_stream(
    records: Iterable[UpdateRecord],
    allocation: Optional[AllocationTable] = None,
    allocation_stats: Optional[FilterStats] = None,
    repair_paths: bool = True,
) -> Iterator[UpdateRecord]:
    """Full cleaning pipeline in publication order.

    Allocation filter (optional), route-server repair, then timestamp
    disambiguation.
    """
    stream: Iterable[UpdateRecord] = records
    if allocation is not None:
        stream = filter_allocated(stream, allocation, allocation_stats)
    if repair_paths:
        stream = (repair_route_server_path(r) for r in stream)
    return disambiguate_timestamps(stream)
