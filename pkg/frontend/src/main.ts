// Browser bootstrap: canvas blitting, button row, view switching.

import { TrainerClient } from "./client.js";
import { buttonStates } from "./controls.js";
import type { FrameRecord } from "./protocol.js";
import { renderPhaseMaps, MAPS_H, MAPS_W } from "./phase_maps_view.js";
import { renderTrainingView, SCROLL_SECONDS, VIEW_H, VIEW_W } from "./training_view.js";
import type { Raster } from "./raster.js";

const HOP_HISTORY = 1400; // ~7 s at 200 frames/s

function el<T extends HTMLElement>(tag: string, parent: HTMLElement, text = ""): T {
    const node = document.createElement(tag) as T;
    if (text) node.textContent = text;
    parent.appendChild(node);
    return node;
}

function blit(canvas: HTMLCanvasElement, raster: Raster): void {
    const ctx = canvas.getContext("2d");
    if (!ctx) return;
    ctx.putImageData(new ImageData(raster.data, raster.width, raster.height), 0, 0);
}

export function start(root: HTMLElement): void {
    const bar = el<HTMLDivElement>("div", root);
    bar.className = "buttons";
    const status = el<HTMLDivElement>("div", root, "connecting");
    status.className = "status";
    const canvas = el<HTMLCanvasElement>("canvas", root);
    canvas.width = VIEW_W;
    canvas.height = VIEW_H;

    const history: FrameRecord[] = [];
    let view: "training" | "phase-maps" = "training";
    let toast = "";

    const client = new TrainerClient({
        onStatus: (text) => { status.textContent = text; },
        onState: () => renderButtons(),
        onError: (rec) => {
            toast = `${rec.command ?? "?"} rejected: ${rec.reason ?? ""}`;
            renderButtons();
        },
    });

    const viewButton = el<HTMLButtonElement>("button", bar, "PHASE MAPS");
    viewButton.onclick = () => {
        view = view === "training" ? "phase-maps" : "training";
        viewButton.textContent = view === "training" ? "PHASE MAPS" : "TRAINING";
        client.setPhaseMaps(view === "phase-maps");
        canvas.width = view === "training" ? VIEW_W : MAPS_W;
        canvas.height = view === "training" ? VIEW_H : MAPS_H;
    };
    const levelSelect = el<HTMLSelectElement>("select", bar);
    for (const db of [60, 65, 70, 75, 80]) {
        const opt = el<HTMLOptionElement>("option", levelSelect, `${db} dB`);
        opt.value = String(db);
        if (db === 70) opt.selected = true;
    }
    levelSelect.onchange = () =>
        client.sendControl("CAL.LEVEL", Number(levelSelect.value));

    const buttons = new Map<string, HTMLButtonElement>();
    for (const { command } of buttonStates(null)) {
        const b = el<HTMLButtonElement>("button", bar, command);
        b.onclick = () => {
            let arg: unknown;
            if (command === "SET.WORK") arg = prompt("work directory") ?? "";
            if (command === "LOAD.REF") arg = prompt("reference wav path") ?? "";
            client.sendControl(command, arg);
        };
        buttons.set(command, b);
    }

    function renderButtons(): void {
        for (const { command, enabled } of buttonStates(client.state)) {
            const b = buttons.get(command);
            if (b) b.disabled = !enabled;
        }
        status.textContent = `${client.connected ? "connected" : "disconnected"}`
            + (client.state ? ` | ${client.state.mode}` : "") + (toast ? ` | ${toast}` : "");
    }

    function frameLoop(): void {
        for (const f of client.takeFrames()) history.push(f);
        while (history.length > HOP_HISTORY) history.shift();
        if (client.hello && history.length) {
            const windowFrames = history.filter((f) =>
                f.t_ms >= history[history.length - 1].t_ms - SCROLL_SECONDS * 1000);
            if (view === "training") {
                blit(canvas, renderTrainingView(windowFrames, client.hello,
                    status.textContent ?? "").raster);
            } else {
                blit(canvas, renderPhaseMaps(windowFrames, client.hello).raster);
            }
        }
        requestAnimationFrame(frameLoop);
    }

    const url = new URLSearchParams(location.search).get("ws")
        ?? `ws://${location.hostname || "127.0.0.1"}:8765`;
    client.connect(url);
    renderButtons();
    requestAnimationFrame(frameLoop);
}

if (typeof document !== "undefined" && document.getElementById("app")) {
    start(document.getElementById("app") as HTMLElement);
}
