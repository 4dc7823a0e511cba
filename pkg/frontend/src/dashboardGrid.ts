// Interactive dashboard for one snapshot. Widgets sit on a 12-column CSS
// grid mirroring the server layout; drag and resize apply optimistically,
// patch the server, and reconcile from its response. A rejected operation
// snaps the widget back to where it was and shows the violated constraint.

import { ApiClient, ApiError } from "./api.js";
import { clear, el } from "./dom.js";
import { RENDER_MODES, WIDGET_TITLES, renderWidgetBody } from "./widgets.js";
import { downloadWidgetPng } from "./exportTools.js";
import type { CellJson, DescriptorJson, LayoutJson, LayoutOp } from "./types.js";

export interface OpResult {
    accepted: boolean;
    error?: ApiError;
}

/** Pixel height of one grid row; columns scale with the viewport. */
export const ROW_PX = 40;

/** Map a pointer position inside the grid to integer cell coordinates. */
export function gridCoordsFromPixels(
    px: number,
    py: number,
    gridWidthPx: number,
    columns: number,
): { x: number; y: number } {
    const colWidth = gridWidthPx > 0 ? gridWidthPx / columns : 1;
    return {
        x: Math.max(0, Math.floor(px / colWidth)),
        y: Math.max(0, Math.floor(py / ROW_PX)),
    };
}

export class DashboardGrid {
    readonly root: HTMLElement;
    descriptor: DescriptorJson | null = null;
    /** Local mirror of the server layout; replaced by every PATCH response. */
    layout: LayoutJson | null = null;

    private readonly statusBar: HTMLElement;
    private readonly grid: HTMLElement;
    private readonly cellElements = new Map<string, HTMLElement>();
    private draggedWidget: string | null = null;

    constructor(private readonly api: ApiClient) {
        this.statusBar = el("div", { class: "status-bar", hidden: true });
        this.grid = el("div", { class: "dashboard-grid" });
        this.grid.addEventListener("dragover", (ev) => ev.preventDefault());
        this.grid.addEventListener("drop", (ev) => this.onDrop(ev as DragEvent));
        this.root = el("div", { class: "dashboard" }, this.statusBar, this.grid);
    }

    private onDrop(ev: DragEvent): void {
        ev.preventDefault();
        const widget = ev.dataTransfer?.getData("text/widget") || this.draggedWidget;
        this.draggedWidget = null;
        if (!widget || !this.layout) return;
        const rect = this.grid.getBoundingClientRect();
        const target = gridCoordsFromPixels(
            ev.clientX - rect.left,
            ev.clientY - rect.top,
            rect.width,
            this.layout.grid_columns,
        );
        void this.moveWidget(widget, target.x, target.y);
    }

    async load(snapshotId: string): Promise<void> {
        this.descriptor = await this.api.getSnapshot(snapshotId);
        this.layout = this.descriptor.layout;
        this.render();
    }

    // ------------------------------------------------------------------
    // layout operations

    async moveWidget(widget: string, x: number, y: number): Promise<OpResult> {
        return this.applyOp({ op: "move", widget, x, y });
    }

    async resizeWidget(widget: string, w: number, h: number): Promise<OpResult> {
        return this.applyOp({ op: "resize", widget, w, h });
    }

    private async applyOp(op: LayoutOp): Promise<OpResult> {
        const descriptor = this.requireDescriptor();
        const before = this.cellOf(op.widget);
        this.placeCell(optimisticCell(before, op)); // optimistic: move under the cursor now
        try {
            const layout = await this.api.patchLayout(descriptor.id, op);
            this.layout = layout; // reconcile with the server's stored truth
            for (const cell of layout.cells) this.placeCell(cell);
            this.clearStatus();
            return { accepted: true };
        } catch (err) {
            this.placeCell(before); // snap back
            if (err instanceof ApiError) {
                this.showStatus(`${err.code}: ${err.message}`);
                return { accepted: false, error: err };
            }
            throw err;
        }
    }

    /** The layout as actually rendered, read back from element styles. */
    layoutFromDom(): LayoutJson {
        const layout = this.requireLayout();
        return {
            grid_columns: layout.grid_columns,
            cells: layout.cells.map((cell) => {
                const element = this.cellElements.get(cell.widget);
                if (!element) throw new Error(`widget ${cell.widget} is not rendered`);
                return parseCellStyle(cell.widget, element);
            }),
        };
    }

    cellOf(widget: string): CellJson {
        const layout = this.requireLayout();
        const cell = layout.cells.find((c) => c.widget === widget);
        if (!cell) throw new Error(`unknown widget ${widget}`);
        return { ...cell };
    }

    // ------------------------------------------------------------------
    // rendering

    private render(): void {
        const descriptor = this.requireDescriptor();
        const layout = this.requireLayout();
        clear(this.grid);
        this.cellElements.clear();
        this.grid.style.gridTemplateColumns = `repeat(${layout.grid_columns}, 1fr)`;
        this.grid.setAttribute("data-snapshot-id", descriptor.id);
        this.grid.setAttribute("data-store-seq", String(descriptor.store_seq));
        for (const cell of layout.cells) {
            const entry = descriptor.widgets[cell.widget];
            if (!entry) continue;
            const body = el("div", { class: "widget-body" });
            renderWidgetBody(cell.widget, entry, body);
            const element = el(
                "section",
                {
                    class: `widget mode-${RENDER_MODES[cell.widget] ?? "text"} ${entry.status}`,
                    "data-widget": cell.widget,
                    draggable: true,
                },
                el(
                    "header",
                    { class: "widget-header" },
                    el("h3", {}, WIDGET_TITLES[cell.widget] ?? cell.widget),
                    el("span", { class: "widget-status" }, entry.status),
                    el("button", {
                        class: "export-png",
                        title: "Export as PNG",
                        onclick: () => void downloadWidgetPng(element, cell.widget),
                    }, "png"),
                ),
                body,
                this.buildResizeHandle(cell.widget),
            );
            element.addEventListener("dragstart", (ev) => {
                this.draggedWidget = cell.widget;
                (ev as DragEvent).dataTransfer?.setData("text/widget", cell.widget);
            });
            this.grid.append(element);
            this.cellElements.set(cell.widget, element);
            this.placeCell(cell);
        }
    }

    private buildResizeHandle(widget: string): HTMLElement {
        const handle = el("div", { class: "resize-handle", title: "Drag to resize" });
        handle.addEventListener("mousedown", (down) => {
            down.preventDefault();
            const start = this.cellOf(widget);
            const rect = this.grid.getBoundingClientRect();
            const colWidth = rect.width > 0 && this.layout ? rect.width / this.layout.grid_columns : 1;
            const onUp = (up: MouseEvent) => {
                document.removeEventListener("mouseup", onUp);
                const dw = Math.round((up.clientX - (down as MouseEvent).clientX) / colWidth);
                const dh = Math.round((up.clientY - (down as MouseEvent).clientY) / ROW_PX);
                if (dw !== 0 || dh !== 0) void this.resizeWidget(widget, start.w + dw, start.h + dh);
            };
            document.addEventListener("mouseup", onUp);
        });
        return handle;
    }

    private placeCell(cell: CellJson): void {
        const element = this.cellElements.get(cell.widget);
        if (!element) return;
        element.style.gridColumnStart = String(cell.x + 1);
        element.style.gridColumnEnd = `span ${cell.w}`;
        element.style.gridRowStart = String(cell.y + 1);
        element.style.gridRowEnd = `span ${cell.h}`;
    }

    private showStatus(text: string): void {
        this.statusBar.textContent = text;
        this.statusBar.hidden = false;
    }

    private clearStatus(): void {
        this.statusBar.textContent = "";
        this.statusBar.hidden = true;
    }

    private requireDescriptor(): DescriptorJson {
        if (!this.descriptor) throw new Error("no snapshot loaded");
        return this.descriptor;
    }

    private requireLayout(): LayoutJson {
        if (!this.layout) throw new Error("no snapshot loaded");
        return this.layout;
    }
}

function optimisticCell(cell: CellJson, op: LayoutOp): CellJson {
    if (op.op === "move") return { ...cell, x: op.x, y: op.y };
    return { ...cell, w: op.w, h: op.h };
}

function parseCellStyle(widget: string, element: HTMLElement): CellJson {
    const span = (value: string) => Number(value.replace("span", "").trim());
    return {
        widget,
        x: Number(element.style.gridColumnStart) - 1,
        y: Number(element.style.gridRowStart) - 1,
        w: span(element.style.gridColumnEnd),
        h: span(element.style.gridRowEnd),
    };
}
