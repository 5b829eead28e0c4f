// Colormaps for the phase-attribute maps: a cyclic hue wheel for phase
// (which lives on a circle) and a blue-white-red diverging map for the
// normalized attributes.

import type { Color } from "./raster.js";

export function cyclic(t: number): Color {
    // t in [0, 1) around the circle -> HSV hue wheel at full saturation
    const h = ((t % 1) + 1) % 1;
    const i = Math.floor(h * 6);
    const f = h * 6 - i;
    const q = Math.round(255 * (1 - f));
    const u = Math.round(255 * f);
    switch (i % 6) {
        case 0: return [255, u, 0];
        case 1: return [q, 255, 0];
        case 2: return [0, 255, u];
        case 3: return [0, q, 255];
        case 4: return [u, 0, 255];
        default: return [255, 0, q];
    }
}

export function diverging(t: number): Color {
    // t in [-1, 1]: blue (-1) -> near-white (0) -> red (+1)
    const x = Math.max(-1, Math.min(1, t));
    if (x < 0) {
        const k = 1 + x; // 0 at -1, 1 at 0
        return [Math.round(60 + 175 * k), Math.round(90 + 145 * k), 255];
    }
    const k = 1 - x;
    return [255, Math.round(90 + 145 * k), Math.round(60 + 175 * k)];
}

export function grayscale(t: number): Color {
    const v = Math.round(255 * Math.max(0, Math.min(1, t)));
    return [v, v, v];
}
