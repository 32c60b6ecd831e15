"""Archive URL planning and cache-safe downloading."""

from __future__ import annotations

import gzip
import io
from datetime import datetime, timezone

import pytest

from bgpchurn.errors import UnknownCollector
from bgpchurn.fetch import (
    ArchiveTarget,
    RetryPolicy,
    fetch,
    fetch_target,
    plan_urls,
    probe_mrt_payload,
)
from bgpchurn.mrt.codec import write_mrt_stream

from helpers import update_entry


def day(kind="updates", project="ripe_ris", collector="rrc00"):
    return ArchiveTarget(
        project=project,
        collector=collector,
        kind=kind,
        start=datetime(2023, 5, 1, tzinfo=timezone.utc),
        end=datetime(2023, 5, 2, tzinfo=timezone.utc),
    )


def mrt_blob(compress=None) -> bytes:
    buf = io.BytesIO()
    write_mrt_stream([update_entry(1_600_000_000)], buf)
    raw = buf.getvalue()
    return gzip.compress(raw) if compress == "gzip" else raw


# --- planning ---


def test_ripe_day_has_288_files():
    plan = plan_urls(day())
    assert len(plan) == 288
    assert plan[0].url == (
        "https://data.ris.ripe.net/rrc00/2023.05/updates.20230501.0000.gz"
    )
    assert plan[1].relative_path == "rrc00/2023.05/updates.20230501.0005.gz"
    assert plan[-1].relative_path == "rrc00/2023.05/updates.20230501.2355.gz"


def test_routeviews_day_has_96_files():
    plan = plan_urls(day(project="routeviews", collector="route-views2"))
    assert len(plan) == 96
    # the original collector sits at the archive root
    assert plan[0].url == (
        "http://archive.routeviews.org/bgpdata/2023.05/UPDATES/"
        "updates.20230501.0000.bz2"
    )
    assert plan[1].relative_path == "bgpdata/2023.05/UPDATES/updates.20230501.0015.bz2"


def test_routeviews_secondary_collector_path():
    plan = plan_urls(day(project="routeviews", collector="route-views3"))
    assert plan[0].relative_path == (
        "route-views3/bgpdata/2023.05/UPDATES/updates.20230501.0000.bz2"
    )


def test_rib_planning():
    ris = plan_urls(day(kind="rib"))
    assert len(ris) == 3  # every 8 hours
    assert ris[0].relative_path == "rrc00/2023.05/bview.20230501.0000.gz"
    rv = plan_urls(day(kind="rib", project="routeviews", collector="route-views2"))
    assert len(rv) == 12  # every 2 hours
    assert rv[0].relative_path == "bgpdata/2023.05/RIBS/rib.20230501.0000.bz2"


def test_partial_range_aligns_to_grid():
    target = ArchiveTarget(
        project="ripe_ris",
        collector="rrc00",
        kind="updates",
        start=datetime(2023, 5, 1, 10, 2, tzinfo=timezone.utc),
        end=datetime(2023, 5, 1, 10, 20, tzinfo=timezone.utc),
    )
    plan = plan_urls(target)
    assert [p.relative_path.rsplit(".", 2)[1] for p in plan] == ["1005", "1010", "1015"]


def test_empty_range():
    target = ArchiveTarget(
        project="ripe_ris",
        collector="rrc00",
        kind="updates",
        start=datetime(2023, 5, 1, tzinfo=timezone.utc),
        end=datetime(2023, 5, 1, tzinfo=timezone.utc),
    )
    assert plan_urls(target) == []


def test_month_boundary_crossing():
    target = ArchiveTarget(
        project="ripe_ris",
        collector="rrc01",
        kind="updates",
        start=datetime(2023, 4, 30, 23, 50, tzinfo=timezone.utc),
        end=datetime(2023, 5, 1, 0, 10, tzinfo=timezone.utc),
    )
    months = {p.relative_path.split("/")[1] for p in plan_urls(target)}
    assert months == {"2023.04", "2023.05"}


def test_collector_name_validation():
    with pytest.raises(UnknownCollector):
        day(collector="rrc1")  # needs two digits
    with pytest.raises(UnknownCollector):
        day(collector="route-views2")  # wrong project
    with pytest.raises(UnknownCollector):
        day(project="routeviews", collector="rrc00")
    with pytest.raises(UnknownCollector):
        day(project="routeviews", collector="route-views2;rm")
    assert day(collector="rrc21").collector == "rrc21"
    assert day(project="routeviews", collector="route-views.sydney").collector


def test_bad_target_fields():
    with pytest.raises(ValueError):
        day(project="torrents")
    with pytest.raises(ValueError):
        day(kind="tables")


# --- payload probe ---


def test_probe_accepts_real_payloads():
    assert probe_mrt_payload(mrt_blob())
    assert probe_mrt_payload(mrt_blob(compress="gzip"))


def test_probe_rejects_garbage():
    assert not probe_mrt_payload(b"<html>404 not found</html>")
    assert not probe_mrt_payload(b"")
    assert not probe_mrt_payload(b"\x1f\x8b broken gzip stream")
    # plausible length but absurd record type
    assert not probe_mrt_payload(b"\x00" * 4 + b"\xff\xff" + b"\x00" * 6)


# --- fetching with a fake transport ---


class FakeTransport:
    def __init__(self, responses):
        self.responses = responses  # url -> bytes | Exception | [attempt, ...]
        self.calls = []

    def __call__(self, url):
        self.calls.append(url)
        result = self.responses[url]
        if isinstance(result, list):
            result = result.pop(0)
        if isinstance(result, Exception):
            raise result
        return result


def no_sleep(_):
    pass


def two_file_plan():
    return plan_urls(
        ArchiveTarget(
            project="ripe_ris",
            collector="rrc00",
            kind="updates",
            start=datetime(2023, 5, 1, tzinfo=timezone.utc),
            end=datetime(2023, 5, 1, 0, 10, tzinfo=timezone.utc),
        )
    )


def test_fetch_downloads_and_commits(tmp_path):
    plan = two_file_plan()
    blob = mrt_blob(compress="gzip")
    transport = FakeTransport({p.url: blob for p in plan})
    report = fetch(plan, tmp_path, transport=transport, sleep=no_sleep)
    assert report.downloaded == 2
    assert report.cached == 0
    assert report.complete
    assert report.counts_consistent()
    for item in plan:
        assert (tmp_path / item.relative_path).read_bytes() == blob
    assert not list(tmp_path.rglob("*.tmp"))


def test_fetch_warm_cache_never_touches_network(tmp_path):
    plan = two_file_plan()
    blob = mrt_blob(compress="gzip")
    transport = FakeTransport({p.url: blob for p in plan})
    fetch(plan, tmp_path, transport=transport, sleep=no_sleep)
    transport.calls.clear()

    again = fetch(plan, tmp_path, transport=transport, sleep=no_sleep)
    assert transport.calls == []
    assert again.cached == 2
    assert again.downloaded == 0
    assert again.counts_consistent()


def test_fetch_retries_then_succeeds(tmp_path):
    plan = two_file_plan()[:1]
    url = plan[0].url
    transport = FakeTransport(
        {url: [ConnectionError("reset"), mrt_blob(compress="gzip")]}
    )
    sleeps = []
    report = fetch(plan, tmp_path, transport=transport,
                   retry=RetryPolicy(attempts=3, backoff_s=2.0),
                   sleep=sleeps.append)
    assert report.downloaded == 1
    assert report.complete
    assert len(transport.calls) == 2
    assert sleeps == [2.0]  # first backoff step only


def test_fetch_rejects_corrupt_payload(tmp_path):
    plan = two_file_plan()[:1]
    url = plan[0].url
    transport = FakeTransport({url: b"<html>error page</html>"})
    report = fetch(plan, tmp_path, transport=transport,
                   retry=RetryPolicy(attempts=2, backoff_s=0.1), sleep=no_sleep)
    assert report.downloaded == 0
    assert report.failures[url] == "payload failed MRT header probe"
    assert len(transport.calls) == 2  # kept retrying to the attempt cap
    assert not (tmp_path / plan[0].relative_path).exists()
    assert not list(tmp_path.rglob("*.tmp"))


def test_fetch_offline_mode(tmp_path):
    plan = two_file_plan()
    blob = mrt_blob(compress="gzip")
    cached = tmp_path / plan[0].relative_path
    cached.parent.mkdir(parents=True)
    cached.write_bytes(blob)
    transport = FakeTransport({})
    report = fetch(plan, tmp_path, transport=transport, offline=True, sleep=no_sleep)
    assert transport.calls == []
    assert report.cached == 1
    assert len(report.failures) == 1
    assert report.counts_consistent()


def test_fetch_exhausted_retries_reports_error(tmp_path):
    plan = two_file_plan()[:1]
    url = plan[0].url
    transport = FakeTransport({url: ConnectionError("refused")})
    report = fetch(plan, tmp_path, transport=transport,
                   retry=RetryPolicy(attempts=3, backoff_s=1.0), sleep=no_sleep)
    assert len(transport.calls) == 3
    assert "refused" in report.failures[url]
    assert not report.complete


def test_fetch_target_wrapper(tmp_path):
    target = ArchiveTarget(
        project="ripe_ris",
        collector="rrc00",
        kind="updates",
        start=datetime(2023, 5, 1, tzinfo=timezone.utc),
        end=datetime(2023, 5, 1, 0, 5, tzinfo=timezone.utc),
    )
    blob = mrt_blob(compress="gzip")
    plan, report = fetch_target(
        target,
        tmp_path,
        transport=lambda url: blob,
        sleep=no_sleep,
    )
    assert len(plan) == 1
    assert report.downloaded == 1


def test_retry_policy_backoff_doubles():
    assert list(RetryPolicy(attempts=3, backoff_s=1.5).delays()) == [1.5, 3.0, 6.0]
