// The main training display: scrolling waveform / candidate / salience
// panels, chromatic gridlines shared with the note strip and the staves,
// the best-candidate circles, SPL bar, level indicator and spectrum.
// Pure function of (frames, hello): the same inputs give identical pixels.

import type { FrameRecord, HelloRecord } from "./protocol.js";
import { Raster, type Color } from "./raster.js";
import {
    BASS_LINES,
    DEFAULT_AXIS,
    TREBLE_LINES,
    freqToMidi,
    isNatural,
    midiToY,
    noteName,
} from "./scale.js";

export const VIEW_W = 1000;
export const VIEW_H = 480;
export const SCROLL_SECONDS = 6.0;

const BG: Color = [12, 12, 16];
const PANEL: Color = [24, 24, 30];
const BORDER: Color = [70, 70, 80];
const GRID_DIM: Color = [36, 36, 44];
const GRID_C: Color = [60, 60, 72];
const WAVE: Color = [120, 200, 230];
const SALIENCE: Color = [200, 170, 90];
const GREEN: Color = [40, 220, 70];
const RED: Color = [230, 60, 50];
const BLUE: Color = [80, 130, 255];
const TEXT: Color = [200, 200, 205];
const STAVE: Color = [150, 150, 160];

const SCROLL_X1 = 619;
const AXIS = DEFAULT_AXIS;

export interface TrainingReport {
    greenCircle: boolean;
    staveCircle: boolean;
    circleLabel: string;
    splCalibrated: boolean;
}

function panel(r: Raster, x: number, y: number, w: number, h: number): void {
    r.fillRect(x, y, w, h, PANEL);
    r.hline(x, x + w - 1, y, BORDER);
    r.hline(x, x + w - 1, y + h - 1, BORDER);
    r.vline(x, y, y + h - 1, BORDER);
    r.vline(x + w - 1, y, y + h - 1, BORDER);
}

function timeToX(tMs: number, lastMs: number): number {
    return Math.round(SCROLL_X1 - ((lastMs - tMs) / (SCROLL_SECONDS * 1000)) * (SCROLL_X1 + 1));
}

function dbToY(db: number, y0: number, y1: number, lo: number, hi: number): number {
    const t = Math.max(0, Math.min(1, (db - lo) / (hi - lo)));
    return Math.round(y1 - t * (y1 - y0));
}

export function renderTrainingView(
    frames: FrameRecord[],
    hello: HelloRecord,
    status = "",
): { raster: Raster; report: TrainingReport } {
    const r = new Raster(VIEW_W, VIEW_H, BG);
    const last = frames.length ? frames[frames.length - 1] : null;
    const lastMs = last ? last.t_ms : 0;

    panel(r, 0, 0, 620, 80);        // waveform scroll
    panel(r, 0, 84, 620, 240);      // candidates scroll
    panel(r, 0, 328, 620, 80);      // salience scroll
    panel(r, 0, 412, 620, 36);      // level indicator
    panel(r, 624, 0, 296, 80);      // aligned snippet
    panel(r, 624, 84, 36, 240);     // note-name strip
    panel(r, 664, 84, 256, 240);    // staves
    panel(r, 664, 328, 256, 40);    // best readout
    panel(r, 624, 372, 296, 76);    // spectrum
    panel(r, 924, 0, 76, 448);      // SPL bar

    drawChromaticGrid(r);
    drawStaves(r);
    drawNoteStrip(r);

    for (const f of frames) {
        const x = timeToX(f.t_ms, lastMs);
        if (x < 0 || x > SCROLL_X1) continue;
        drawWaveColumn(r, x, f);
        drawCandidateColumn(r, x, f);
        drawSalienceColumn(r, x, f);
    }

    const report: TrainingReport = {
        greenCircle: false,
        staveCircle: false,
        circleLabel: "",
        splCalibrated: last?.level?.calibrated ?? false,
    };
    if (last) {
        drawSnippet(r, last);
        drawSpectrum(r, last);
        drawLevelIndicator(r, last);
        drawSplBar(r, last);
        if (last.best) {
            // green circle + frequency number appear only for a salient best
            const label = `${last.best.freq_hz.toFixed(0)} ${last.best.note_name}`;
            r.disc(684, 348, 9, GREEN);
            r.text(700, 345, label, TEXT, 1);
            report.greenCircle = true;
            report.circleLabel = label;
            const y = midiToY(AXIS, last.best.midi_float);
            r.circle(792, y, 7, RED);
            r.circle(792, y, 6, RED);
            report.staveCircle = true;
        }
    }
    r.text(6, 456, status.slice(0, 120), TEXT, 1);
    return { raster: r, report };
}

function drawChromaticGrid(r: Raster): void {
    for (let midi = AXIS.midiLo; midi <= AXIS.midiHi; midi++) {
        const y = midiToY(AXIS, midi);
        const c = midi % 12 === 0 ? GRID_C : GRID_DIM;
        if (isNatural(midi)) r.hline(1, 918, y, c);
    }
}

function drawStaves(r: Raster): void {
    for (const midi of [...TREBLE_LINES, ...BASS_LINES]) {
        r.hline(668, 904, midiToY(AXIS, midi), STAVE);
    }
    // per-stave index numbers at the right side (octave indices)
    r.text(908, midiToY(AXIS, 71) - 3, "4", TEXT, 1);
    r.text(908, midiToY(AXIS, 50) - 3, "3", TEXT, 1);
}

function drawNoteStrip(r: Raster): void {
    for (let midi = AXIS.midiLo; midi <= AXIS.midiHi; midi++) {
        if (midi % 12 === 0 || midi % 12 === 9) { // every C and A
            r.text(627, midiToY(AXIS, midi) - 3, noteName(midi), TEXT, 1);
        }
    }
}

function drawWaveColumn(r: Raster, x: number, f: FrameRecord): void {
    if (!f.level) return;
    const amp = Math.min(1, 10 ** (f.level.dbfs_peak / 20));
    const half = Math.round(amp * 37);
    r.vline(x, 40 - half, 40 + half, WAVE);
}

function drawCandidateColumn(r: Raster, x: number, f: FrameRecord): void {
    for (const [freq, snr] of f.candidates) {
        const y = midiToY(AXIS, freqToMidi(freq));
        if (y <= AXIS.yTop || y >= AXIS.yBottom) continue;
        const s = snr === null ? 0 : Math.max(0, Math.min(1, (snr - 5) / 60));
        const v = Math.round(90 + 165 * s);
        r.px(x, y, [v, v, v]);
        r.px(x, y + 1, [v, v, v]);
    }
    if (f.best) {
        const y = midiToY(AXIS, f.best.midi_float);
        r.px(x, y, GREEN);
        r.px(x, y + 1, GREEN);
    }
}

function drawSalienceColumn(r: Raster, x: number, f: FrameRecord): void {
    const y = dbToY(f.salience_db, 332, 404, -10, 80);
    r.vline(x, y, 404, SALIENCE);
}

function drawSnippet(r: Raster, f: FrameRecord): void {
    const wave = f.aligned_waveform;
    if (!wave.length) return;
    let peak = 1e-9;
    for (const v of wave) peak = Math.max(peak, Math.abs(v));
    let prevY = 40;
    for (let i = 0; i < wave.length; i++) {
        const x = 626 + Math.round((i / Math.max(1, wave.length - 1)) * 291);
        const y = 40 - Math.round((wave[i] / peak) * 36);
        if (i > 0) r.line(x - 1, prevY, x, y, WAVE);
        prevY = y;
    }
}

function drawSpectrum(r: Raster, f: FrameRecord): void {
    if (!f.spectrum_db) return;
    const n = f.spectrum_db.length;
    let prevY = 446;
    for (let i = 0; i < n; i++) {
        const x = 626 + Math.round((i / (n - 1)) * 291);
        const y = dbToY(f.spectrum_db[i], 374, 445, -100, 0);
        if (i > 0) r.line(x - 1, prevY, x, y, GREEN);
        prevY = y;
    }
}

function drawLevelIndicator(r: Raster, f: FrameRecord): void {
    if (!f.level) return;
    const x0 = 4;
    const x1 = 615;
    const toX = (db: number) =>
        x0 + Math.round(Math.max(0, Math.min(1, (db + 100) / 100)) * (x1 - x0));
    for (let db = -100; db <= 0; db += 10) {
        r.vline(toX(db), 440, 445, BORDER);
    }
    r.fillRect(x0, 424, toX(f.level.dbfs_rms) - x0, 6, [70, 90, 120]);
    r.vline(toX(f.level.dbfs_peak), 416, 445, RED);
    r.vline(toX(f.level.dbfs_rms), 416, 445, BLUE);
    r.vline(toX(f.level.dbfs_rms_smoothed), 416, 445, GREEN);
    r.text(8, 415, "DBFS", TEXT, 1);
}

function drawSplBar(r: Raster, f: FrameRecord): void {
    if (!f.level) return;
    const lv = f.level;
    const calibrated = lv.calibrated && lv.spl_fast_db !== null && lv.spl_slow_db !== null;
    const lo = calibrated ? 30 : -100;
    const hi = calibrated ? 110 : 0;
    const fast = calibrated ? (lv.spl_fast_db as number) : lv.cweight_fast_dbfs;
    const slow = calibrated ? (lv.spl_slow_db as number) : lv.cweight_slow_dbfs;
    const yOf = (db: number) => dbToY(db, 24, 428, lo, hi);
    r.fillRect(938, yOf(fast), 36, 428 - yOf(fast) + 1, GREEN);
    r.hline(932, 982, yOf(slow), RED);
    r.text(928, 6, calibrated ? "DB SPL" : "DBFS", TEXT, 1);
    if (!calibrated) r.text(932, 434, "UNCAL", SALIENCE, 1);
}
