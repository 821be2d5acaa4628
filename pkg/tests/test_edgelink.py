import json

import pytest

from edgeattend.edgelink import (
    AttendanceEvent,
    BundleFormatError,
    DeviceConfig,
    EdgeLink,
    OfflineQueue,
    SendResult,
    TransportOutcome,
    new_event_id,
    read_bundle,
    read_bundle_text,
)


class FakeServer:
    """In-process transport double recording applied event ids."""

    def __init__(self):
        self.applied: list[str] = []
        self.mode = "up"  # up | down | flaky-after
        self.fail_after = 0
        self.posts = 0

    def post_event(self, event):
        self.posts += 1
        if self.mode == "down":
            return TransportOutcome.RETRYABLE
        if self.mode == "flaky-after" and self.posts > self.fail_after:
            return TransportOutcome.RETRYABLE
        if self.mode == "reject":
            return TransportOutcome.MALFORMED
        if event.event_id not in self.applied:
            self.applied.append(event.event_id)
        return TransportOutcome.ACCEPTED


def ev(i, sid="s01"):
    return AttendanceEvent(
        event_id=f"e-{i:04d}",
        device_id="dev0",
        session_id="sess0",
        student_id=sid,
        distance=0.12,
        track_id=i,
        t=1_000 + i,
    )


def net_config():
    return DeviceConfig(mode="network", server_url="http://server.test")


class TestAttendanceEvent:
    def test_json_round_trip(self):
        e = AttendanceEvent(new_event_id(), "d", "s", "stu", 0.25, 3, 123456, thumbnail=b"\xff\xd8x")
        back = AttendanceEvent.from_json(json.loads(json.dumps(e.to_json())))
        assert back == e

    def test_negative_distance_rejected(self):
        with pytest.raises(ValueError):
            ev(1).__class__(**{**ev(1).__dict__, "distance": -0.1})

    def test_thumbnail_cap(self):
        with pytest.raises(ValueError, match="16 KiB"):
            AttendanceEvent("e", "d", "s", "stu", 0.1, 1, 0, thumbnail=b"x" * (16 * 1024 + 1))


class TestDeviceConfig:
    def test_network_requires_server_url(self):
        with pytest.raises(ValueError):
            DeviceConfig(mode="network", server_url=None)

    def test_hotspot_needs_no_server(self):
        DeviceConfig(mode="hotspot")

    def test_file_round_trip(self, tmp_path):
        cfg = DeviceConfig(mode="network", server_url="http://h", threshold=0.37, tracker={"max_distance": 50})
        cfg.save(tmp_path / "cfg.json")
        back = DeviceConfig.load(tmp_path / "cfg.json")
        assert back == cfg


class TestSend:
    def test_healthy_server_delivers_queue_unchanged(self, tmp_path):
        srv = FakeServer()
        link = EdgeLink(net_config(), tmp_path, transport=srv)
        assert link.send(ev(1)) is SendResult.DELIVERED
        assert link.queue.journal_length == 0
        assert srv.applied == ["e-0001"]

    def test_server_down_queues(self, tmp_path):
        srv = FakeServer()
        srv.mode = "down"
        link = EdgeLink(net_config(), tmp_path, transport=srv)
        assert link.send(ev(1)) is SendResult.QUEUED
        assert link.queue.journal_length == 1

    def test_hotspot_always_queues(self, tmp_path):
        link = EdgeLink(DeviceConfig(mode="hotspot"), tmp_path, transport=FakeServer())
        assert link.send(ev(1)) is SendResult.QUEUED
        assert link.send(ev(2)) is SendResult.QUEUED
        assert link.queue.journal_length == 2

    def test_down_then_up_order_preserved(self, tmp_path):
        srv = FakeServer()
        link = EdgeLink(net_config(), tmp_path, transport=srv)
        srv.mode = "down"
        assert link.send(ev(1)) is SendResult.QUEUED
        srv.mode = "up"
        assert link.flush() == 1
        assert link.send(ev(2)) is SendResult.DELIVERED
        assert srv.applied == ["e-0001", "e-0002"]

    def test_send_behind_pending_queues_to_keep_order(self, tmp_path):
        srv = FakeServer()
        link = EdgeLink(net_config(), tmp_path, transport=srv)
        srv.mode = "down"
        link.send(ev(1))
        srv.mode = "up"
        # e1 still pending: e2 must not overtake it
        assert link.send(ev(2)) is SendResult.QUEUED
        link.flush()
        assert srv.applied == ["e-0001", "e-0002"]

    def test_malformed_goes_to_dead_letter(self, tmp_path):
        srv = FakeServer()
        srv.mode = "reject"
        link = EdgeLink(net_config(), tmp_path, transport=srv)
        assert link.send(ev(1)) is SendResult.DEAD_LETTERED
        assert link.queue.journal_length == 0
        dead = (tmp_path / "dead-letter.jsonl").read_text().strip().splitlines()
        assert len(dead) == 1


class TestFlush:
    def test_empty_queue(self, tmp_path):
        link = EdgeLink(net_config(), tmp_path, transport=FakeServer())
        assert link.flush() == 0

    def test_flushes_all(self, tmp_path):
        srv = FakeServer()
        link = EdgeLink(net_config(), tmp_path, transport=srv)
        srv.mode = "down"
        for i in range(5):
            link.send(ev(i))
        srv.mode = "up"
        assert link.flush() == 5
        assert link.queue.journal_length == 0
        assert srv.applied == [f"e-{i:04d}" for i in range(5)]

    def test_mid_flush_failure_acknowledged_prefix(self, tmp_path):
        srv = FakeServer()
        link = EdgeLink(net_config(), tmp_path, transport=srv)
        srv.mode = "down"
        for i in range(5):
            link.send(ev(i))
        srv.mode = "flaky-after"
        srv.fail_after = srv.posts + 2  # two more acks, then failure
        assert link.flush() == 2
        assert link.queue.cursor == 2
        srv.mode = "up"
        assert link.flush() == 3
        assert len(set(srv.applied)) == 5

    def test_resent_events_keep_original_id(self, tmp_path):
        srv = FakeServer()
        link = EdgeLink(net_config(), tmp_path, transport=srv)
        srv.mode = "down"
        link.send(ev(7))
        srv.mode = "up"
        link.flush()
        link2 = EdgeLink(net_config(), tmp_path, transport=srv)
        link2.flush()
        assert srv.applied == ["e-0007"]


class TestJournalDurability:
    def test_restart_recovers_unacknowledged_suffix(self, tmp_path):
        srv = FakeServer()
        link = EdgeLink(net_config(), tmp_path, transport=srv)
        srv.mode = "down"
        for i in range(4):
            link.send(ev(i))
        srv.mode = "flaky-after"
        srv.fail_after = srv.posts + 1
        link.flush()  # acks exactly one
        # simulate crash: drop in-memory state, reload from disk
        srv.mode = "up"
        link2 = EdgeLink(net_config(), tmp_path, transport=srv)
        assert [e.event_id for e in link2.queue.pending()] == ["e-0001", "e-0002", "e-0003"]
        assert link2.flush() == 3
        assert srv.applied == [f"e-{i:04d}" for i in range(4)]

    def test_cursor_clamped_on_corrupt_state(self, tmp_path):
        q = OfflineQueue(tmp_path)
        q.append(ev(1))
        (tmp_path / "queue.cursor").write_text("999")
        q2 = OfflineQueue(tmp_path)
        assert q2.cursor == 1
        (tmp_path / "queue.cursor").write_text("junk")
        q3 = OfflineQueue(tmp_path)
        assert q3.cursor == 0

    def test_compaction_after_full_ack(self, tmp_path):
        q = OfflineQueue(tmp_path)
        for i in range(3):
            q.append(ev(i))
        q.ack(3)
        assert q.journal_length == 0
        assert (tmp_path / "queue.jsonl").read_text() == ""
        q.append(ev(9))
        assert [e.event_id for e in q.pending()] == ["e-0009"]


class TestBundles:
    def test_export_import_empty(self, tmp_path):
        link = EdgeLink(DeviceConfig(mode="hotspot"), tmp_path / "q", transport=None)
        n = link.export_bundle(tmp_path / "b.jsonl")
        assert n == 0
        header, events = read_bundle(tmp_path / "b.jsonl")
        assert header["count"] == 0 and events == []

    def test_export_has_header_and_events(self, tmp_path):
        link = EdgeLink(DeviceConfig(mode="hotspot", device_id="devX", session_id="sessY"), tmp_path / "q")
        for i in range(3):
            link.send(ev(i))
        link.export_bundle(tmp_path / "b.jsonl")
        header, events = read_bundle(tmp_path / "b.jsonl")
        assert header["device_id"] == "devX"
        assert header["session_id"] == "sessY"
        assert header["count"] == 3
        assert [e.event_id for e in events] == [f"e-{i:04d}" for i in range(3)]

    def test_header_count_mismatch_rejected(self, tmp_path):
        link = EdgeLink(DeviceConfig(mode="hotspot"), tmp_path / "q")
        for i in range(3):
            link.send(ev(i))
        link.export_bundle(tmp_path / "b.jsonl")
        lines = (tmp_path / "b.jsonl").read_text().strip().splitlines()
        corrupted = "\n".join(lines[:-1])  # drop one event, keep header count
        with pytest.raises(BundleFormatError):
            read_bundle_text(corrupted)

    def test_malformed_line_reports_line_number(self):
        text = '{"count": 2, "device_id": "d", "session_id": "s", "exported_at": 0}\nnot json\n'
        with pytest.raises(BundleFormatError) as err:
            read_bundle_text(text)
        assert err.value.line == 2

    def test_empty_text_rejected(self):
        with pytest.raises(BundleFormatError):
            read_bundle_text("")


class TestDeviceApp:
    def test_config_endpoint_round_trip(self, tmp_path):
        from fastapi.testclient import TestClient

        from edgeattend.device import DeviceConfigStore, create_device_app

        store = DeviceConfigStore(tmp_path / "cfg.json", DeviceConfig(mode="hotspot"))
        link = EdgeLink(store.config, tmp_path / "q")
        client = TestClient(create_device_app(store, link))

        got = client.get("/config").json()
        assert got["mode"] == "hotspot"
        new = {**got, "mode": "network", "server_url": "http://srv", "threshold": 0.5}
        assert client.put("/config", json=new).status_code == 200
        assert store.config.threshold == 0.5
        assert DeviceConfig.load(tmp_path / "cfg.json").mode == "network"

    def test_config_validation_surfaces_422(self, tmp_path):
        from fastapi.testclient import TestClient

        from edgeattend.device import DeviceConfigStore, create_device_app

        store = DeviceConfigStore(tmp_path / "cfg.json", DeviceConfig(mode="hotspot"))
        client = TestClient(create_device_app(store, None))
        bad = {"mode": "network", "server_url": None}
        assert client.put("/config", json=bad).status_code == 422

    def test_bundle_endpoint_serves_journal(self, tmp_path):
        from fastapi.testclient import TestClient

        from edgeattend.device import DeviceConfigStore, create_device_app

        store = DeviceConfigStore(tmp_path / "cfg.json", DeviceConfig(mode="hotspot"))
        link = EdgeLink(store.config, tmp_path / "q")
        link.send(ev(1))
        client = TestClient(create_device_app(store, link))
        text = client.get("/bundle").text
        header, events = read_bundle_text(text)
        assert header["count"] == 1 and events[0].event_id == "e-0001"
