// Button wiring: enablement comes only from the service's availability
// mask, and local UI state changes only on service acknowledgment.

import type { StateRecord } from "./protocol.js";

export const COMMANDS = [
    "REC.START", "SAVE.WORK", "STOP", "PLAY.WORK", "PLAY.REF",
    "QUIT", "SET.WORK", "LOAD.REF", "CAL.VOICE", "CAL.REF",
] as const;

export type Command = (typeof COMMANDS)[number];

export interface ButtonState {
    command: Command;
    enabled: boolean;
}

export function buttonStates(state: StateRecord | null): ButtonState[] {
    return COMMANDS.map((command) => ({
        command,
        enabled: state ? Boolean(state.available[command]) : false,
    }));
}

export function controlRecord(command: string, arg?: unknown): object {
    return arg === undefined
        ? { type: "control", command }
        : { type: "control", command, arg };
}

export function subscribeRecord(phaseMaps: boolean, fps?: number): object {
    return { type: "subscribe", phase_maps: phaseMaps, fps: fps ?? null };
}
