import { readFileSync } from "node:fs";
import { join } from "node:path";
import { describe, expect, test } from "vitest";

import {
    decodeRecord,
    decodeRecords,
    encodeRecord,
    type FrameRecord,
} from "../src/protocol.js";

const FIXTURES = join(__dirname, "fixtures");

describe("record codec", () => {
    test("round trip", () => {
        const rec = { type: "control", command: "STOP" };
        expect(decodeRecord(encodeRecord(rec))).toEqual(rec);
    });

    test("length prefix counts body bytes", () => {
        const text = encodeRecord({ note: "A4" });
        const [length, body] = text.split("\n");
        expect(Number(length)).toBe(new TextEncoder().encode(body).length);
    });

    test("multi-byte characters measured in bytes", () => {
        const rec = { label: "420 ±2 cents" };
        expect(decodeRecord(encodeRecord(rec))).toEqual(rec);
    });

    test("stream with leftover", () => {
        const enc = new TextEncoder();
        const a = enc.encode(encodeRecord({ n: 1 }));
        const b = enc.encode(encodeRecord({ n: 2 }));
        const partial = b.subarray(0, b.length - 3);
        const blob = new Uint8Array(a.length + partial.length);
        blob.set(a);
        blob.set(partial, a.length);
        const { records, rest } = decodeRecords(blob);
        expect(records).toEqual([{ n: 1 }]);
        expect(rest.length).toBe(partial.length);
    });

    test("bad prefix rejected", () => {
        expect(() => decodeRecords(new TextEncoder().encode("oops\n{}\n")))
            .toThrow(/length prefix/);
    });
});

describe("frame log fixture", () => {
    const blob = new Uint8Array(readFileSync(join(FIXTURES, "frames.log")));
    const { records, rest } = decodeRecords(blob);

    test("parses fully", () => {
        expect(rest.length).toBe(0);
        expect(records.length).toBeGreaterThan(200);
        expect(records.every((r) => r.type === "frame")).toBe(true);
    });

    test("frames carry the display payload", () => {
        const frames = records as FrameRecord[];
        const voiced = frames.filter((f) => f.best !== null);
        expect(voiced.length).toBeGreaterThan(100);
        const f = voiced[voiced.length - 1];
        expect(f.candidates.length).toBeGreaterThan(0);
        expect(f.candidates.length).toBeLessThanOrEqual(4);
        expect(f.level).not.toBeNull();
        expect(f.spectrum_db!.length).toBe(176);
        expect(f.phase_maps!.phase.length).toBe(37);
        expect(f.aligned_waveform.length).toBeGreaterThan(10);
    });

    test("timestamps strictly increase", () => {
        const t = (records as FrameRecord[]).map((f) => f.t_ms);
        for (let i = 1; i < t.length; i++) expect(t[i]).toBeGreaterThan(t[i - 1]);
    });
});
