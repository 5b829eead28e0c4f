// WebSocket client for the analysis service: parses length-prefixed
// records and keeps a bounded drop-oldest frame queue so a slow render
// loop never backs up the socket.

import { controlRecord, subscribeRecord } from "./controls.js";
import {
    decodeRecord,
    encodeRecord,
    type AnyRecord,
    type FrameRecord,
    type HelloRecord,
    type StateRecord,
} from "./protocol.js";

export interface ClientHandlers {
    onHello?: (hello: HelloRecord) => void;
    onState?: (state: StateRecord) => void;
    onError?: (record: StateRecord) => void;
    onStatus?: (text: string) => void;
}

export class TrainerClient {
    readonly frames: FrameRecord[] = [];
    hello: HelloRecord | null = null;
    state: StateRecord | null = null;
    connected = false;
    private ws: WebSocket | null = null;
    private readonly maxQueue: number;

    constructor(private handlers: ClientHandlers = {}, maxQueue = 16) {
        this.maxQueue = maxQueue;
    }

    connect(url: string): void {
        const ws = new WebSocket(url);
        this.ws = ws;
        ws.onopen = () => {
            this.connected = true;
            this.handlers.onStatus?.("connected");
        };
        ws.onclose = () => {
            this.connected = false;
            this.handlers.onStatus?.("disconnected");
        };
        ws.onmessage = (event) => this.handleMessage(String(event.data));
    }

    handleMessage(text: string): void {
        let record: AnyRecord;
        try {
            record = decodeRecord(text);
        } catch {
            return;
        }
        switch (record.type) {
            case "hello":
                this.hello = record as HelloRecord;
                this.state = this.hello.state;
                this.handlers.onHello?.(this.hello);
                break;
            case "frame":
                this.frames.push(record as FrameRecord);
                while (this.frames.length > this.maxQueue) this.frames.shift();
                break;
            case "state":
            case "ack":
                this.state = record as StateRecord;
                this.handlers.onState?.(this.state);
                break;
            case "error":
                this.handlers.onError?.(record as StateRecord);
                break;
        }
    }

    takeFrames(): FrameRecord[] {
        return this.frames.splice(0, this.frames.length);
    }

    sendControl(command: string, arg?: unknown): void {
        this.ws?.send(encodeRecord(controlRecord(command, arg)));
    }

    setPhaseMaps(enabled: boolean): void {
        this.ws?.send(encodeRecord(subscribeRecord(enabled)));
    }
}
