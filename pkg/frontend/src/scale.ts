// Pitch axis shared by the candidate scroll, the note-name strip and the
// staves: MIDI is linear in y so chromatic gridlines span all three panels.

export const NOTE_NAMES = ["C", "C#", "D", "D#", "E", "F", "F#", "G", "G#", "A", "A#", "B"];

export function freqToMidi(freqHz: number): number {
    return 69 + 12 * Math.log2(freqHz / 440);
}

export function midiToFreq(midi: number): number {
    return 440 * 2 ** ((midi - 69) / 12);
}

export function noteName(midi: number): string {
    const nearest = Math.floor(midi + 0.5);
    return NOTE_NAMES[((nearest % 12) + 12) % 12] + String(Math.floor(nearest / 12) - 1);
}

export function isNatural(midi: number): boolean {
    return !NOTE_NAMES[((midi % 12) + 12) % 12].includes("#");
}

export interface PitchAxis {
    midiLo: number;
    midiHi: number;
    yTop: number;
    yBottom: number;
}

export const DEFAULT_AXIS: PitchAxis = { midiLo: 40, midiHi: 84, yTop: 84, yBottom: 323 };

export function midiToY(axis: PitchAxis, midi: number): number {
    const t = (midi - axis.midiLo) / (axis.midiHi - axis.midiLo);
    return Math.round(axis.yBottom - t * (axis.yBottom - axis.yTop));
}

// Stave line positions (MIDI): treble E4 G4 B4 D5 F5, bass G2 B2 D3 F3 A3.
export const TREBLE_LINES = [64, 67, 71, 74, 77];
export const BASS_LINES = [43, 47, 50, 53, 57];
