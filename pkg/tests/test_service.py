import threading
import time

import numpy as np
import pytest

from pitchscope.errors import ControlRejected
from pitchscope.service import RingBuffer, StreamService, serve
from pitchscope.wavio import write_wav_24
from pitchscope.wire import decode_record, decode_records, encode_record

FS = 44100.0


class CaptureSink:
    def __init__(self):
        self.played = []

    def play(self, samples, f_s):
        self.played.append((np.array(samples), f_s))


@pytest.fixture()
def tone(make_tone):
    return make_tone(220.0, 1.0, amplitude=0.3)


def drain(sub):
    out = []
    while True:
        payload = sub.get(timeout=0.01)
        if payload is None:
            return out
        recs, _ = decode_records(payload)
        out.extend(recs)


class TestRingBuffer:
    def test_wraparound_order(self):
        ring = RingBuffer(10)
        ring.append(np.arange(7.0))
        ring.append(np.arange(7.0, 13.0))
        np.testing.assert_array_equal(ring.snapshot(), np.arange(3.0, 13.0))

    def test_oversized_append(self):
        ring = RingBuffer(5)
        ring.append(np.arange(12.0))
        np.testing.assert_array_equal(ring.snapshot(), np.arange(7.0, 12.0))

    def test_clear(self):
        ring = RingBuffer(5)
        ring.append(np.ones(3))
        ring.clear()
        assert len(ring) == 0


class TestStateMachine:
    def test_initial_monitoring(self):
        svc = StreamService()
        assert svc.mode == "monitoring"
        avail = svc.availability()
        assert avail["STOP"] and not avail["REC.START"]
        assert not avail["PLAY.WORK"] and not avail["PLAY.REF"]

    def test_stop_then_play_work(self, tone):
        sink = CaptureSink()
        svc = StreamService(sink=sink)
        svc.feed(tone)
        svc.control("STOP")
        assert svc.mode == "stopped"
        svc.control("PLAY.WORK")
        assert len(sink.played) == 1
        np.testing.assert_array_equal(sink.played[0][0], tone)

    def test_play_ref_without_reference_rejected(self, tone):
        svc = StreamService()
        svc.feed(tone)
        svc.control("STOP")
        with pytest.raises(ControlRejected):
            svc.control("PLAY.REF")

    def test_playback_rejected_while_monitoring(self, tone):
        svc = StreamService()
        svc.feed(tone)
        with pytest.raises(ControlRejected):
            svc.control("PLAY.WORK")

    def test_rec_start_clears_buffers(self, tone):
        svc = StreamService()
        svc.feed(tone)
        svc.control("STOP")
        assert len(svc.ring) > 0
        svc.control("REC.START")
        assert svc.mode == "monitoring"
        assert len(svc.ring) == 0
        assert svc.feed(tone) > 0  # pipeline restarted cleanly

    def test_stop_ignores_input(self, tone):
        svc = StreamService()
        svc.control("STOP")
        assert svc.feed(tone) == 0
        assert len(svc.ring) == 0

    def test_quit(self, tone):
        svc = StreamService()
        svc.control("QUIT")
        assert not svc.running
        assert svc.feed(tone) == 0

    def test_unknown_command(self):
        svc = StreamService()
        with pytest.raises(ControlRejected):
            svc.control("EXPLODE")

    def test_load_ref_and_play(self, tone, tmp_path):
        path = tmp_path / "ref.wav"
        write_wav_24(path, tone, int(FS))
        sink = CaptureSink()
        svc = StreamService(sink=sink)
        svc.control("LOAD.REF", str(path))
        svc.feed(tone)
        svc.control("STOP")
        svc.control("PLAY.REF")
        assert len(sink.played) == 1

    def test_load_ref_bad_file(self, tmp_path):
        bad = tmp_path / "bad.wav"
        bad.write_bytes(b"junk")
        svc = StreamService()
        with pytest.raises(ControlRejected):
            svc.control("LOAD.REF", str(bad))


class TestSaveWork:
    def test_requires_work_directory(self, tone):
        svc = StreamService()
        svc.feed(tone)
        with pytest.raises(ControlRejected):
            svc.control("SAVE.WORK")

    def test_set_work_validates_directory(self):
        svc = StreamService()
        with pytest.raises(ControlRejected):
            svc.control("SET.WORK", "/definitely/not/a/dir")

    def test_unique_names_same_second(self, tone, tmp_path):
        svc = StreamService()
        svc.feed(tone)
        svc.control("SET.WORK", str(tmp_path))
        one = svc.control("SAVE.WORK")["saved_path"]
        two = svc.control("SAVE.WORK")["saved_path"]
        assert one != two
        from pitchscope.wavio import read_wav
        back, fs = read_wav(one)
        assert fs == int(FS)
        assert len(back) == len(tone)

    def test_config_persisted(self, tone, tmp_path):
        cfg = tmp_path / "session.cfg"
        svc = StreamService(config_path=str(cfg))
        svc.control("SET.WORK", str(tmp_path))
        svc2 = StreamService(config_path=str(cfg))
        assert svc2.work_directory == str(tmp_path)


class TestCalibrationFlow:
    def test_cal_voice(self, make_tone):
        svc = StreamService()
        svc.control("CAL.LEVEL", 70.0)
        x = make_tone(1000.0, 6.0, amplitude=0.1)
        for i in range(0, len(x), 4410):
            svc.feed(x[i:i + 4410])
        state = svc.control("CAL.VOICE")
        assert state["calibrated"]
        sub = svc.subscribe()
        svc.feed(make_tone(1000.0, 0.2, amplitude=0.1))
        recs = [r for r in drain(sub) if r["type"] == "frame"]
        assert recs and recs[-1]["level"]["spl_slow_db"] is not None

    def test_cal_voice_unstable_rejected(self, make_tone):
        svc = StreamService()
        x = make_tone(1000.0, 6.0)
        ramp = np.linspace(0.01, 1.0, len(x))
        for i in range(0, len(x), 4410):
            svc.feed((x * ramp)[i:i + 4410])
        with pytest.raises(ControlRejected):
            svc.control("CAL.VOICE")

    def test_cal_voice_rejected_when_stopped(self):
        svc = StreamService()
        svc.control("STOP")
        with pytest.raises(ControlRejected):
            svc.control("CAL.VOICE")

    def test_cal_ref(self, make_tone, tmp_path):
        path = tmp_path / "calref.wav"
        write_wav_24(path, make_tone(1000.0, 4.0, amplitude=0.2), int(FS))
        svc = StreamService()
        svc.control("LOAD.REF", str(path))
        svc.control("CAL.LEVEL", 65.0)
        state = svc.control("CAL.REF")
        assert state["calibrated"]

    def test_cal_level_must_be_offered(self):
        svc = StreamService()
        with pytest.raises(ControlRejected):
            svc.control("CAL.LEVEL", 72.0)


class TestSubscriptions:
    def test_frames_arrive_encoded(self, tone):
        svc = StreamService()
        sub = svc.subscribe()
        svc.feed(tone)
        recs = drain(sub)
        frames = [r for r in recs if r["type"] == "frame"]
        assert frames
        assert all("candidates" in f for f in frames)

    def test_fps_decimation(self, make_tone):
        svc = StreamService()
        full = svc.subscribe()
        slow = svc.subscribe(fps=50.0)
        svc.feed(make_tone(220.0, 0.3))  # stays under the queue bound
        n_full = len(drain(full))
        n_slow = len(drain(slow))
        assert 0 < n_full < 64
        assert n_slow == pytest.approx(n_full / 4, abs=2)

    def test_drop_oldest_never_blocks(self, make_tone):
        svc = StreamService()
        sub = svc.subscribe()
        x = make_tone(220.0, 3.0)
        for i in range(0, len(x), 8820):
            svc.feed(x[i:i + 8820])  # nobody drains: queue saturates
        recs = drain(sub)
        assert len(recs) <= 64

    def test_phase_maps_subscription(self, tone):
        svc = StreamService()
        sub = svc.subscribe(phase_maps=True)
        svc.feed(tone)
        frames = [r for r in drain(sub) if r["type"] == "frame"]
        assert frames and "phase_maps" in frames[-1]

    def test_state_records_broadcast(self, tone):
        svc = StreamService()
        sub = svc.subscribe()
        svc.feed(tone)
        svc.control("STOP")
        recs = drain(sub)
        assert recs[-1]["type"] == "state"
        assert recs[-1]["mode"] == "stopped"


class TestWebSocket:
    def test_end_to_end(self, tone, tmp_path):
        from websockets.sync.client import connect

        svc = StreamService()
        server = serve(svc, "127.0.0.1", 18765)
        thread = threading.Thread(target=server.serve_forever, daemon=True)
        thread.start()
        try:
            with connect("ws://127.0.0.1:18765") as conn:
                hello = decode_record(conn.recv(timeout=5))
                assert hello["type"] == "hello"
                assert hello["schema_version"] == 1
                assert len(hello["bank_centers_hz"]) == 37
                assert hello["state"]["available"]["STOP"]

                svc.feed(tone)
                got_frame = False
                for _ in range(10):
                    rec = decode_record(conn.recv(timeout=5))
                    if rec["type"] == "frame":
                        got_frame = True
                        break
                assert got_frame

                conn.send(encode_record(
                    {"type": "control", "command": "STOP"}).decode())
                while True:
                    rec = decode_record(conn.recv(timeout=5))
                    if rec["type"] == "ack":
                        assert rec["mode"] == "stopped"
                        break

                conn.send(encode_record(
                    {"type": "control", "command": "PLAY.REF"}).decode())
                while True:
                    rec = decode_record(conn.recv(timeout=5))
                    if rec["type"] == "error":
                        assert rec["command"] == "PLAY.REF"
                        break
        finally:
            svc.running = False
            time.sleep(0.4)  # watchdog shuts the server down
            thread.join(timeout=5)
            assert not thread.is_alive()
