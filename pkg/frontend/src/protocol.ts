// Wire protocol: length-prefixed JSON records over WebSocket text messages
// or frame-log files. Each record is "<byte length>\n<json>\n".

export interface LevelInfo {
    dbfs_peak: number;
    dbfs_rms: number;
    dbfs_rms_smoothed: number;
    cweight_fast_dbfs: number;
    cweight_slow_dbfs: number;
    spl_fast_db: number | null;
    spl_slow_db: number | null;
    calibrated: boolean;
}

export interface BestReading {
    freq_hz: number;
    snr_db: number;
    midi_float: number;
    note_name: string;
    cents_offset: number;
}

export interface PhaseMaps {
    phase: (number | null)[];
    norm_if: (number | null)[];
    norm_gd: (number | null)[];
    magnitude_db: (number | null)[];
}

export interface FrameRecord {
    type: "frame";
    t_ms: number;
    warm_up: boolean;
    candidates: [number, number | null][];
    best: BestReading | null;
    salience_db: number;
    level: LevelInfo | null;
    spectrum_db: number[] | null;
    aligned_waveform: number[];
    phase_maps?: PhaseMaps;
}

export interface StateRecord {
    type: "state" | "ack" | "error";
    mode: string;
    running: boolean;
    available: Record<string, boolean>;
    work_directory: string;
    reference_path: string;
    cal_level_db: number;
    calibrated: boolean;
    command?: string;
    reason?: string;
    saved_path?: string;
}

export interface HelloRecord {
    type: "hello";
    schema_version: number;
    sample_rate_hz: number;
    hop_samples: number;
    salience_threshold_db: number;
    bank_centers_hz: number[];
    spectrum_freqs_hz: number[];
    calibration: { offset_db: number; reference_spl_db: number } | null;
    cal_level_choices_db: number[];
    state: StateRecord;
}

export type AnyRecord =
    | FrameRecord
    | StateRecord
    | HelloRecord
    | { type: string; [key: string]: unknown };

const encoder = new TextEncoder();
const decoder = new TextDecoder();

export function encodeRecord(obj: unknown): string {
    const body = JSON.stringify(obj);
    return `${encoder.encode(body).length}\n${body}\n`;
}

export function decodeRecord(text: string): AnyRecord {
    const records = decodeRecords(encoder.encode(text)).records;
    if (records.length !== 1) {
        throw new Error(`expected one record, got ${records.length}`);
    }
    return records[0];
}

export function decodeRecords(data: Uint8Array): { records: AnyRecord[]; rest: Uint8Array } {
    const records: AnyRecord[] = [];
    let pos = 0;
    for (;;) {
        let nl = -1;
        for (let i = pos; i < data.length; i++) {
            if (data[i] === 10) { nl = i; break; }
        }
        if (nl < 0) break;
        const length = Number(decoder.decode(data.subarray(pos, nl)));
        if (!Number.isInteger(length) || length < 0) {
            throw new Error(`bad record length prefix at byte ${pos}`);
        }
        const end = nl + 1 + length;
        if (end + 1 > data.length) break;
        records.push(JSON.parse(decoder.decode(data.subarray(nl + 1, end))));
        pos = end + 1; // trailing newline
    }
    return { records, rest: data.subarray(pos) };
}
