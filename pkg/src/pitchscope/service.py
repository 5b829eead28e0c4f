"""Live analysis service: ingestion, session state machine, frame fan-out.

One producer feeds samples (a capture adapter or a WAV file) while the
service is monitoring; the analysis pipeline runs in that producer's
thread and publishes serialized frames to any number of subscribers, each
behind a bounded drop-oldest queue so a slow client can never stall
capture.  Control commands (the tool's buttons) serialize through a lock
and follow a two-mode machine: monitoring <-> stopped, with playback only
while stopped and level calibration only while monitoring.

Wire transport is a WebSocket; every message in either direction is a
length-prefixed JSON record (see :mod:`pitchscope.wire`).
"""
from __future__ import annotations

import datetime as _dt
import os
import queue
import threading
import time

import numpy as np

from .config import load_config, save_config
from .errors import CalibrationRejected, ControlRejected, FormatError
from .levels import DEFAULT_REFERENCE_SPL_CHOICES, LevelMeter
from .pipeline import Analyzer, AnalyzerSettings, spectrum_bin_centers
from .snr import CalibrationTable
from .wavio import ensure_rate, read_wav, write_wav_24
from .wire import encode_record, frame_record, hello_record

RING_SECONDS = 60.0
COMMANDS = (
    "REC.START", "SAVE.WORK", "STOP", "PLAY.WORK", "PLAY.REF", "QUIT",
    "SET.WORK", "LOAD.REF", "CAL.VOICE", "CAL.REF", "CAL.LEVEL",
)


class RingBuffer:
    """Fixed-capacity sample ring; appending never blocks."""

    def __init__(self, capacity: int):
        self._buf = np.zeros(capacity)
        self._pos = 0
        self._count = 0

    def __len__(self):
        return min(self._count, len(self._buf))

    def append(self, samples: np.ndarray):
        x = np.asarray(samples, dtype=float)
        cap = len(self._buf)
        if len(x) >= cap:
            self._buf[:] = x[-cap:]
            self._pos = 0
            self._count += len(x)
            return
        end = self._pos + len(x)
        if end <= cap:
            self._buf[self._pos:end] = x
        else:
            split = cap - self._pos
            self._buf[self._pos:] = x[:split]
            self._buf[:end - cap] = x[split:]
        self._pos = end % cap
        self._count += len(x)

    def snapshot(self) -> np.ndarray:
        n = len(self)
        if self._count <= len(self._buf):
            return self._buf[:n].copy()
        return np.concatenate([self._buf[self._pos:], self._buf[:self._pos]])

    def clear(self):
        self._pos = 0
        self._count = 0


class NullSink:
    """Playback endpoint that silently discards audio (no device backend)."""

    def play(self, samples: np.ndarray, f_s: float):
        pass


class Subscription:
    """Bounded drop-oldest frame queue for one client."""

    def __init__(self, every: int = 1, phase_maps: bool = False, depth: int = 64):
        self.every = max(1, every)
        self.phase_maps = phase_maps
        self._q: queue.Queue = queue.Queue(maxsize=depth)
        self._seen = 0
        self.closed = False

    def offer(self, payload: bytes):
        self._seen += 1
        if (self._seen - 1) % self.every:
            return
        while True:
            try:
                self._q.put_nowait(payload)
                return
            except queue.Full:
                try:
                    self._q.get_nowait()  # drop oldest
                except queue.Empty:
                    pass

    def push_control(self, payload: bytes):
        # state records bypass decimation but still respect the bound
        while True:
            try:
                self._q.put_nowait(payload)
                return
            except queue.Full:
                try:
                    self._q.get_nowait()
                except queue.Empty:
                    pass

    def get(self, timeout: float | None = None) -> bytes | None:
        try:
            return self._q.get(timeout=timeout)
        except queue.Empty:
            return None


class StreamService:
    """Session owner: state machine, pipeline, ring buffer, subscribers."""

    def __init__(self, settings: AnalyzerSettings | None = None,
                 table: CalibrationTable | None = None,
                 config_path: str | None = None,
                 sink=None):
        self.settings = settings or AnalyzerSettings()
        self._table = table
        self.sink = sink or NullSink()
        self.config_path = config_path
        self.config = load_config(config_path)
        self.mode = "monitoring"
        self.running = True
        self.work_directory = self.config.get("work_directory", "") or ""
        self.reference: np.ndarray | None = None
        self.reference_path = ""
        self.cal_level_db = 70.0
        self._lock = threading.RLock()
        self._subs: list[Subscription] = []
        self._frame_count = 0
        fs = self.settings.sample_rate_hz
        self.ring = RingBuffer(int(RING_SECONDS * fs))
        self.analyzer = self._new_analyzer()
        ref = self.config.get("reference_path", "")
        if ref:
            try:
                self._load_reference(ref)
            except (FormatError, OSError):
                pass
        off = self.config.get("calibration_offset_db", "")
        spl = self.config.get("calibration_reference_spl_db", "")
        if off and spl:
            from .levels import CalibrationState
            self.analyzer.meter.calibration = CalibrationState(
                float(off), float(spl), "restored")

    # -- pipeline ------------------------------------------------------------

    def _new_analyzer(self) -> Analyzer:
        meter = LevelMeter(self.settings.sample_rate_hz)
        return Analyzer(settings=self.settings, table=self._table, meter=meter)

    def feed(self, samples: np.ndarray) -> int:
        """Producer entry point; returns frames published (0 when stopped)."""
        with self._lock:
            if self.mode != "monitoring" or not self.running:
                return 0
            self.ring.append(samples)
            frames = self.analyzer.feed(samples)
            return self._publish(frames)

    def finish_input(self) -> int:
        """Flush the pipeline at end of a file source."""
        with self._lock:
            if self.mode != "monitoring" or not self.running:
                return 0
            return self._publish(self.analyzer.finish())

    def _publish(self, frames) -> int:
        for frame in frames:
            self._frame_count += 1
            plain = None
            maps = None
            for sub in self._subs:
                if sub.closed:
                    continue
                if sub.phase_maps:
                    if maps is None:
                        maps = encode_record(frame_record(frame, phase_maps=True))
                    sub.offer(maps)
                else:
                    if plain is None:
                        plain = encode_record(frame_record(frame))
                    sub.offer(plain)
        self._subs = [s for s in self._subs if not s.closed]
        return len(frames)

    def run_wav(self, path, pace: bool = False, block: int = 4096) -> int:
        """Feed a WAV file as the input source; returns frames published."""
        samples, fs = read_wav(path)
        samples = ensure_rate(samples, fs, int(self.settings.sample_rate_hz))
        total = 0
        for i in range(0, len(samples), block):
            chunk = samples[i:i + block]
            total += self.feed(chunk)
            if pace:
                time.sleep(len(chunk) / self.settings.sample_rate_hz)
            if not self.running:
                return total
        total += self.finish_input()
        return total

    # -- subscriptions --------------------------------------------------------

    def subscribe(self, fps: float | None = None, phase_maps: bool = False,
                  depth: int = 64) -> Subscription:
        hop_rate = self.settings.sample_rate_hz / self.settings.hop_samples
        every = 1 if not fps else max(1, int(round(hop_rate / fps)))
        sub = Subscription(every=every, phase_maps=phase_maps, depth=depth)
        with self._lock:
            self._subs.append(sub)
        return sub

    def unsubscribe(self, sub: Subscription):
        sub.closed = True

    def hello(self) -> dict:
        bank = self.analyzer.bank
        cal = self.analyzer.meter.calibration if self.analyzer.meter else None
        return hello_record({
            "sample_rate_hz": self.settings.sample_rate_hz,
            "hop_samples": self.settings.hop_samples,
            "salience_threshold_db": self.settings.salience_threshold_db,
            "bank_centers_hz": list(bank.centers_hz),
            "spectrum_freqs_hz": list(spectrum_bin_centers(self.settings)),
            "calibration": None if cal is None else {
                "offset_db": cal.offset_db,
                "reference_spl_db": cal.reference_spl_db,
            },
            "cal_level_choices_db": list(DEFAULT_REFERENCE_SPL_CHOICES),
            "state": self.state_record(),
        })

    # -- state machine ---------------------------------------------------------

    def availability(self) -> dict[str, bool]:
        monitoring = self.mode == "monitoring"
        has_work = len(self.ring) > 0
        has_ref = self.reference is not None
        return {
            "REC.START": not monitoring,
            "SAVE.WORK": has_work and bool(self.work_directory),
            "STOP": monitoring,
            "PLAY.WORK": not monitoring and has_work,
            "PLAY.REF": not monitoring and has_ref,
            "QUIT": True,
            "SET.WORK": True,
            "LOAD.REF": True,
            "CAL.VOICE": monitoring,
            "CAL.REF": monitoring and has_ref,
            "CAL.LEVEL": True,
        }

    def state_record(self) -> dict:
        cal = self.analyzer.meter.calibration if self.analyzer.meter else None
        return {
            "type": "state",
            "mode": self.mode,
            "running": self.running,
            "available": self.availability(),
            "work_directory": self.work_directory,
            "reference_path": self.reference_path,
            "cal_level_db": self.cal_level_db,
            "calibrated": cal is not None,
        }

    def control(self, command: str, arg=None) -> dict:
        """Execute a button command; returns the new state record.

        Raises ControlRejected when the command is not available in the
        current mode, mirroring the availability mask.
        """
        with self._lock:
            if command not in COMMANDS:
                raise ControlRejected(command, self.mode, "unknown command")
            if not self.availability()[command]:
                raise ControlRejected(command, self.mode, "not available")
            extras = self._execute(command, arg) or {}
            state = self.state_record()
            state.update(extras)
            payload = encode_record(state)
            for sub in self._subs:
                sub.push_control(payload)
            return state

    def _execute(self, command: str, arg):
        if command == "REC.START":
            self.ring.clear()
            self.analyzer = self._new_analyzer()
            self._frame_count = 0
            self.mode = "monitoring"
        elif command == "STOP":
            self.mode = "stopped"
        elif command == "QUIT":
            self.mode = "stopped"
            self.running = False
        elif command == "SAVE.WORK":
            return {"saved_path": self.save_work()}
        elif command == "PLAY.WORK":
            self.sink.play(self.ring.snapshot(), self.settings.sample_rate_hz)
        elif command == "PLAY.REF":
            self.sink.play(self.reference, self.settings.sample_rate_hz)
        elif command == "SET.WORK":
            path = str(arg or "")
            if not os.path.isdir(path):
                raise ControlRejected(command, self.mode,
                                      f"not a directory: {path}")
            self.work_directory = path
            self._save_config()
        elif command == "LOAD.REF":
            try:
                self._load_reference(str(arg or ""))
            except (FormatError, OSError) as exc:
                raise ControlRejected(command, self.mode, str(exc)) from exc
            self._save_config()
        elif command == "CAL.LEVEL":
            level = float(arg)
            if level not in DEFAULT_REFERENCE_SPL_CHOICES:
                raise ControlRejected(command, self.mode,
                                      f"level {level} not offered")
            self.cal_level_db = level
        elif command == "CAL.VOICE":
            try:
                self.analyzer.meter.calibrate(self.cal_level_db)
            except CalibrationRejected as exc:
                raise ControlRejected(command, self.mode, str(exc)) from exc
            self._save_config()
        elif command == "CAL.REF":
            try:
                self._calibrate_from_reference()
            except CalibrationRejected as exc:
                raise ControlRejected(command, self.mode, str(exc)) from exc
            self._save_config()
        return None

    def save_work(self) -> str:
        data = self.ring.snapshot()
        stamp = _dt.datetime.now().strftime("%Y%m%d_%H%M%S")
        base = os.path.join(self.work_directory, f"work_{stamp}")
        path = base + ".wav"
        counter = 0
        while os.path.exists(path):
            counter += 1
            path = f"{base}_{counter:02d}.wav"
        try:
            write_wav_24(path, data, int(self.settings.sample_rate_hz))
        except OSError as exc:
            raise ControlRejected("SAVE.WORK", self.mode, str(exc)) from exc
        return path

    def _load_reference(self, path: str):
        samples, fs = read_wav(path)
        self.reference = ensure_rate(samples, fs,
                                     int(self.settings.sample_rate_hz))
        self.reference_path = path

    def _calibrate_from_reference(self):
        """Offset from the reference buffer's C-weighted slow level."""
        fs = self.settings.sample_rate_hz
        if self.reference is None or len(self.reference) < int(3 * fs):
            raise CalibrationRejected("reference shorter than 3 s")
        meter = LevelMeter(fs)
        block = 4096
        for i in range(0, len(self.reference), block):
            meter.process_block(self.reference[i:i + block])
        state = meter.calibrate(self.cal_level_db)
        self.analyzer.meter.calibration = state

    def _save_config(self):
        if not self.config_path:
            return
        cal = self.analyzer.meter.calibration if self.analyzer.meter else None
        self.config.update({
            "work_directory": self.work_directory,
            "reference_path": self.reference_path,
            "calibration_offset_db": "" if cal is None else repr(cal.offset_db),
            "calibration_reference_spl_db":
                "" if cal is None else repr(cal.reference_spl_db),
            "salience_threshold_db": repr(self.settings.salience_threshold_db),
            "hop_samples": str(self.settings.hop_samples),
        })
        save_config(self.config_path, self.config)


def handle_connection(service: StreamService, conn):
    """Serve one WebSocket client: hello, control dispatch, frame push."""
    from .wire import decode_record

    sub = service.subscribe()
    conn.send(encode_record(service.hello()).decode())
    stop = threading.Event()

    def pump():
        while not stop.is_set() and service.running:
            payload = sub.get(timeout=0.25)
            if payload is None:
                continue
            try:
                conn.send(payload.decode())
            except Exception:
                break
        service.unsubscribe(sub)

    pusher = threading.Thread(target=pump, daemon=True)
    pusher.start()
    try:
        for message in conn:
            try:
                rec = decode_record(message)
            except (ValueError, UnicodeDecodeError):
                conn.send(encode_record(
                    {"type": "error", "reason": "malformed record"}).decode())
                continue
            kind = rec.get("type")
            if kind == "control":
                try:
                    state = service.control(rec.get("command", ""), rec.get("arg"))
                    ack = dict(state)
                    ack["type"] = "ack"
                    ack["command"] = rec.get("command")
                    conn.send(encode_record(ack).decode())
                except ControlRejected as exc:
                    conn.send(encode_record({
                        "type": "error", "command": exc.command,
                        "reason": exc.reason, "state": service.state_record(),
                    }).decode())
            elif kind == "subscribe":
                service.unsubscribe(sub)
                sub = service.subscribe(fps=rec.get("fps"),
                                        phase_maps=bool(rec.get("phase_maps")))
            elif kind == "ping":
                conn.send(encode_record({"type": "pong"}).decode())
    finally:
        stop.set()
        service.unsubscribe(sub)


def serve(service: StreamService, host: str = "127.0.0.1", port: int = 8765):
    """Run the WebSocket server until the service quits; returns the server."""
    from websockets.sync.server import serve as ws_serve

    server = ws_serve(lambda conn: handle_connection(service, conn), host, port)

    def watchdog():
        while service.running:
            time.sleep(0.2)
        server.shutdown()

    threading.Thread(target=watchdog, daemon=True).start()
    return server
