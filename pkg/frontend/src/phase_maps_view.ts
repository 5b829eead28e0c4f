// Phase-attribute view: stacked time-frequency images of phase (cyclic
// colors), normalized instantaneous frequency (diverging around 1) and
// normalized group delay (diverging around 0, where GCIs show as vertical
// bars), plus the aligned waveform strip, the per-channel RMS plot and a
// note/tuning readout.

import { cyclic, diverging } from "./colormap.js";
import type { FrameRecord, HelloRecord } from "./protocol.js";
import { Raster, type Color } from "./raster.js";

export const MAPS_W = 1000;
export const MAPS_H = 480;

const BG: Color = [12, 12, 16];
const PANEL: Color = [24, 24, 30];
const BORDER: Color = [70, 70, 80];
const TEXT: Color = [200, 200, 205];
const WAVE: Color = [120, 200, 230];
const GREEN: Color = [40, 220, 70];
const HINT: Color = [200, 170, 90];

const MAP_X = 4;
const MAP_W = 840;
const STRIP_H = 56;
const MAP_H = 128;
const MAP_GAP = 10;

export interface MapsReport {
    enabled: boolean;
    columns: number;
}

export function renderPhaseMaps(
    frames: FrameRecord[],
    hello: HelloRecord,
): { raster: Raster; report: MapsReport } {
    const r = new Raster(MAPS_W, MAPS_H, BG);
    const withMaps = frames.filter((f) => f.phase_maps);
    if (!withMaps.length) {
        r.text(340, 230, "PHASE MAPS OFF: SUBSCRIBE WITH PHASE MAPS ENABLED",
            HINT, 1);
        return { raster: r, report: { enabled: false, columns: 0 } };
    }
    const nch = hello.bank_centers_hz.length;
    const cols = Math.min(withMaps.length, MAP_W);
    const recent = withMaps.slice(-cols);
    const rowH = MAP_H / nch;

    const tops = [STRIP_H + 8, STRIP_H + 8 + MAP_H + MAP_GAP,
        STRIP_H + 8 + 2 * (MAP_H + MAP_GAP)];
    for (const top of tops) panel(r, MAP_X - 1, top - 1, MAP_W + 2, MAP_H + 2);
    r.text(MAP_X + 846 - 840, tops[0] - 1 - 0, "", TEXT); // keep layout stable

    recent.forEach((f, i) => {
        const maps = f.phase_maps!;
        const x = MAP_X + i;
        for (let ch = 0; ch < nch; ch++) {
            const y0 = Math.round(tops[0] + MAP_H - (ch + 1) * rowH);
            const y1 = Math.round(tops[0] + MAP_H - ch * rowH) - 1;
            const phase = maps.phase[ch];
            paintSpan(r, x, y0 + tops[0] - tops[0], y1,
                phase === null ? PANEL : cyclic(phase / (2 * Math.PI) + 0.5));
            const nif = maps.norm_if[ch];
            paintSpan(r, x, y0 + (tops[1] - tops[0]), y1 + (tops[1] - tops[0]),
                nif === null ? PANEL : diverging((nif - 1) * 4));
            const ngd = maps.norm_gd[ch];
            paintSpan(r, x, y0 + (tops[2] - tops[0]), y1 + (tops[2] - tops[0]),
                ngd === null ? PANEL : diverging(ngd * 2));
        }
    });

    const labels = ["PHASE", "NORM IF", "NORM GD"];
    tops.forEach((top, i) => r.text(MAP_X + 2, top - 9, labels[i], TEXT, 1));

    const last = recent[recent.length - 1];
    drawWaveStrip(r, last);
    drawRmsPlot(r, last, tops, nch);
    drawTuning(r, last);
    return { raster: r, report: { enabled: true, columns: cols } };
}

function panel(r: Raster, x: number, y: number, w: number, h: number): void {
    r.fillRect(x, y, w, h, PANEL);
    r.hline(x, x + w - 1, y, BORDER);
    r.hline(x, x + w - 1, y + h - 1, BORDER);
    r.vline(x, y, y + h - 1, BORDER);
    r.vline(x + w - 1, y, y + h - 1, BORDER);
}

function paintSpan(r: Raster, x: number, y0: number, y1: number, c: Color): void {
    for (let y = y0; y <= y1; y++) r.px(x, y, c);
}

function drawWaveStrip(r: Raster, f: FrameRecord): void {
    panel(r, MAP_X - 1, 2, MAP_W + 2, STRIP_H);
    const wave = f.aligned_waveform;
    if (!wave.length) return;
    let peak = 1e-9;
    for (const v of wave) peak = Math.max(peak, Math.abs(v));
    let prevY = 2 + STRIP_H / 2;
    for (let i = 0; i < wave.length; i++) {
        const x = MAP_X + Math.round((i / Math.max(1, wave.length - 1)) * (MAP_W - 1));
        const y = Math.round(2 + STRIP_H / 2 - (wave[i] / peak) * (STRIP_H / 2 - 4));
        if (i > 0) r.line(x - 1, prevY, x, y, WAVE);
        prevY = y;
    }
}

function drawRmsPlot(r: Raster, f: FrameRecord, tops: number[], nch: number): void {
    panel(r, 852, tops[0] - 1, 140, tops[2] + MAP_H - tops[0] + 2);
    const mags = f.phase_maps!.magnitude_db;
    const rowSpan = (tops[2] + MAP_H - tops[0]) / nch;
    let prev: [number, number] | null = null;
    for (let ch = 0; ch < nch; ch++) {
        const m = mags[ch];
        if (m === null) { prev = null; continue; }
        const t = Math.max(0, Math.min(1, (m + 120) / 120));
        const x = 856 + Math.round(t * 130);
        const y = Math.round(tops[2] + MAP_H - (ch + 0.5) * rowSpan);
        if (prev) r.line(prev[0], prev[1], x, y, GREEN);
        prev = [x, y];
    }
    r.text(856, tops[0] + 3, "RMS", TEXT, 1);
}

function drawTuning(r: Raster, f: FrameRecord): void {
    panel(r, 852, 2, 140, STRIP_H);
    if (!f.best) return;
    r.text(858, 8, `${f.best.freq_hz.toFixed(1)}`, TEXT, 1);
    r.text(858, 20, f.best.note_name, GREEN, 1);
    // tuning bar: black center line marks the target note, green the pitch
    const cx = 922;
    r.hline(piano(cx, -50), piano(cx, 50), 44, BORDER);
    r.vline(cx, 36, 52, [0, 0, 0]);
    r.vline(piano(cx, f.best.cents_offset), 38, 50, GREEN);
}

function piano(cx: number, cents: number): number {
    return cx + Math.round((Math.max(-50, Math.min(50, cents)) / 50) * 60);
}
