// Client-side export: the backend stores data, not pixels, so PNG and PDF
// come from the browser. A widget exports by painting its text onto a
// canvas; the whole dashboard exports through the print dialog in layout
// reading order (top to bottom, left to right).

import { el } from "./dom.js";
import type { LayoutJson } from "./types.js";

const PNG_WIDTH = 800;
const LINE_HEIGHT = 20;
const MARGIN = 16;

/** Visible text lines of a widget, header first. */
export function widgetTextLines(widget: Element): string[] {
    const lines: string[] = [];
    const walker = document.createTreeWalker(widget, NodeFilter.SHOW_TEXT);
    while (walker.nextNode()) {
        const text = walker.currentNode.textContent?.trim();
        if (text) lines.push(text);
    }
    return lines;
}

export function renderWidgetPng(widget: Element): string {
    const lines = widgetTextLines(widget);
    const canvas = document.createElement("canvas");
    canvas.width = PNG_WIDTH;
    canvas.height = MARGIN * 2 + LINE_HEIGHT * Math.max(lines.length, 1);
    const ctx = canvas.getContext("2d");
    if (!ctx) throw new Error("canvas 2d context unavailable in this browser");
    ctx.fillStyle = "#ffffff";
    ctx.fillRect(0, 0, canvas.width, canvas.height);
    ctx.fillStyle = "#1a1a1a";
    ctx.font = "14px sans-serif";
    lines.forEach((line, i) => {
        ctx.fillText(line, MARGIN, MARGIN + LINE_HEIGHT * (i + 1) - 6, PNG_WIDTH - 2 * MARGIN);
    });
    return canvas.toDataURL("image/png");
}

export async function downloadWidgetPng(widget: Element, name: string): Promise<string> {
    const dataUrl = renderWidgetPng(widget);
    const link = el("a", { download: `${name}.png`, href: dataUrl }) as HTMLAnchorElement;
    link.click();
    return dataUrl;
}

/**
 * Print the dashboard as a PDF via the browser's print dialog. Widgets are
 * cloned into a print sheet sorted by layout reading order so the paper
 * version reads the same way the grid does.
 */
export function printDashboardPdf(grid: Element, layout: LayoutJson): HTMLElement {
    const ordered = [...layout.cells].sort((a, b) => a.y - b.y || a.x - b.x);
    const sheet = el("div", { class: "print-sheet" });
    for (const cell of ordered) {
        const widget = grid.querySelector(`[data-widget="${cell.widget}"]`);
        if (!widget) continue;
        const copy = widget.cloneNode(true) as HTMLElement;
        copy.removeAttribute("style");
        copy.removeAttribute("draggable");
        sheet.append(copy);
    }
    document.body.append(sheet);
    document.body.classList.add("printing");
    try {
        if (typeof window.print === "function") window.print();
    } finally {
        document.body.classList.remove("printing");
        sheet.remove();
    }
    return sheet;
}
