// Deterministic software raster: every view draws into one of these, so a
// frame log renders to identical bytes anywhere (tests run it in node, the
// browser blits it into a canvas via ImageData).

import { GLYPH_H, GLYPH_W, glyphRows } from "./font.js";

export type Color = readonly [number, number, number];

export class Raster {
    readonly width: number;
    readonly height: number;
    readonly data: Uint8ClampedArray<ArrayBuffer>;

    constructor(width: number, height: number, fill: Color = [0, 0, 0]) {
        this.width = width;
        this.height = height;
        this.data = new Uint8ClampedArray(new ArrayBuffer(width * height * 4));
        this.clear(fill);
    }

    clear(c: Color): void {
        for (let i = 0; i < this.data.length; i += 4) {
            this.data[i] = c[0];
            this.data[i + 1] = c[1];
            this.data[i + 2] = c[2];
            this.data[i + 3] = 255;
        }
    }

    px(x: number, y: number, c: Color): void {
        if (x < 0 || y < 0 || x >= this.width || y >= this.height) return;
        const i = (y * this.width + x) * 4;
        this.data[i] = c[0];
        this.data[i + 1] = c[1];
        this.data[i + 2] = c[2];
        this.data[i + 3] = 255;
    }

    fillRect(x: number, y: number, w: number, h: number, c: Color): void {
        for (let yy = y; yy < y + h; yy++) {
            for (let xx = x; xx < x + w; xx++) this.px(xx, yy, c);
        }
    }

    hline(x0: number, x1: number, y: number, c: Color): void {
        for (let x = Math.min(x0, x1); x <= Math.max(x0, x1); x++) this.px(x, y, c);
    }

    vline(x: number, y0: number, y1: number, c: Color): void {
        for (let y = Math.min(y0, y1); y <= Math.max(y0, y1); y++) this.px(x, y, c);
    }

    line(x0: number, y0: number, x1: number, y1: number, c: Color): void {
        // Bresenham
        let [x, y] = [x0, y0];
        const dx = Math.abs(x1 - x0);
        const dy = -Math.abs(y1 - y0);
        const sx = x0 < x1 ? 1 : -1;
        const sy = y0 < y1 ? 1 : -1;
        let err = dx + dy;
        for (;;) {
            this.px(x, y, c);
            if (x === x1 && y === y1) break;
            const e2 = 2 * err;
            if (e2 >= dy) { err += dy; x += sx; }
            if (e2 <= dx) { err += dx; y += sy; }
        }
    }

    circle(cx: number, cy: number, r: number, c: Color): void {
        let x = r;
        let y = 0;
        let err = 1 - r;
        while (x >= y) {
            for (const [px, py] of [
                [x, y], [y, x], [-y, x], [-x, y],
                [-x, -y], [-y, -x], [y, -x], [x, -y],
            ]) this.px(cx + px, cy + py, c);
            y += 1;
            if (err < 0) err += 2 * y + 1;
            else { x -= 1; err += 2 * (y - x) + 1; }
        }
    }

    disc(cx: number, cy: number, r: number, c: Color): void {
        for (let dy = -r; dy <= r; dy++) {
            const w = Math.floor(Math.sqrt(r * r - dy * dy));
            this.hline(cx - w, cx + w, cy + dy, c);
        }
    }

    text(x: number, y: number, s: string, c: Color, scale = 1): void {
        let cx = x;
        for (const ch of s) {
            const rows = glyphRows(ch);
            for (let ry = 0; ry < GLYPH_H; ry++) {
                for (let rx = 0; rx < GLYPH_W; rx++) {
                    if (rows[ry] & (1 << (GLYPH_W - 1 - rx))) {
                        this.fillRect(cx + rx * scale, y + ry * scale, scale, scale, c);
                    }
                }
            }
            cx += (GLYPH_W + 1) * scale;
        }
    }

    countColor(c: Color): number {
        let n = 0;
        for (let i = 0; i < this.data.length; i += 4) {
            if (this.data[i] === c[0] && this.data[i + 1] === c[1]
                && this.data[i + 2] === c[2]) n++;
        }
        return n;
    }
}

export function textWidth(s: string, scale = 1): number {
    return s.length * (GLYPH_W + 1) * scale;
}

// Fraction of pixels that differ between two equally-sized rasters.
export function diffFraction(a: Raster, b: Raster): number {
    if (a.width !== b.width || a.height !== b.height) return 1;
    let diff = 0;
    const n = a.width * a.height;
    for (let i = 0; i < n; i++) {
        const j = i * 4;
        if (a.data[j] !== b.data[j] || a.data[j + 1] !== b.data[j + 1]
            || a.data[j + 2] !== b.data[j + 2]) diff++;
    }
    return diff / n;
}
