// Moderation queue for citizen reports plus a pin map of what is already
// published. Rejecting needs a note before any request goes out (the
// server enforces the same rule); a report that changed under our feet
// turns into a refresh prompt instead of a dead button.

import { ApiClient, ApiError, isConflict } from "./api.js";
import { clear, el } from "./dom.js";
import type { GeoReportJson } from "./types.js";

const OSM_PIN = "https://www.openstreetmap.org/?mlat={lat}&mlon={lon}#map=17/{lat}/{lon}";

function pinLink(report: GeoReportJson): HTMLElement | null {
    if (!report.location) return null;
    const href = OSM_PIN.replaceAll("{lat}", String(report.location.lat)).replaceAll(
        "{lon}",
        String(report.location.lon),
    );
    return el(
        "a",
        {
            class: "map-pin",
            href,
            target: "_blank",
            rel: "noreferrer",
            "data-lat": String(report.location.lat),
            "data-lon": String(report.location.lon),
        },
        `(${report.location.lat.toFixed(5)}, ${report.location.lon.toFixed(5)})`,
    );
}

function categoryLine(report: GeoReportJson): HTMLElement {
    const predicted = report.predicted_category
        ? `${report.predicted_category.label} (${Math.round(report.predicted_category.confidence * 100)}%)`
        : "none";
    return el(
        "span",
        { class: "category-line" },
        el("span", { class: "predicted" }, `predicted: ${predicted}`),
        " · ",
        el("span", { class: "confirmed" }, `confirmed: ${report.confirmed_category ?? "none"}`),
    );
}

export class ModerationQueue {
    readonly root: HTMLElement;
    reports: GeoReportJson[] = [];

    private readonly list: HTMLElement;
    private readonly messageBar: HTMLElement;

    constructor(
        private readonly api: ApiClient,
        private readonly onDecided?: (report: GeoReportJson) => void,
    ) {
        this.messageBar = el("div", { class: "message-bar", hidden: true });
        this.list = el("ul", { class: "queue-list" });
        this.root = el(
            "div",
            { class: "moderation-queue" },
            el("header", {}, el("h2", {}, "Reports waiting for review"), el("button", {
                class: "refresh",
                onclick: () => void this.refresh(),
            }, "Refresh")),
            this.messageBar,
            this.list,
        );
    }

    async refresh(): Promise<void> {
        this.reports = await this.api.moderationQueue();
        this.clearMessage();
        this.render();
    }

    async approve(reportId: string): Promise<GeoReportJson | null> {
        try {
            const report = await this.api.approveReport(reportId);
            this.removeFromList(reportId);
            this.onDecided?.(report);
            return report;
        } catch (err) {
            this.handleDecisionError(reportId, err);
            return null;
        }
    }

    async reject(reportId: string, note: string): Promise<GeoReportJson | null> {
        if (!note.trim()) {
            // mirrors the server invariant without burning a round trip
            this.itemError(reportId, "A short note is required to reject a report.");
            return null;
        }
        try {
            const report = await this.api.rejectReport(reportId, note);
            this.removeFromList(reportId);
            this.onDecided?.(report);
            return report;
        } catch (err) {
            this.handleDecisionError(reportId, err);
            return null;
        }
    }

    // ------------------------------------------------------------------

    private handleDecisionError(reportId: string, err: unknown): void {
        if (isConflict(err)) {
            this.showMessage("This report changed in another session. Refresh the queue.");
            return;
        }
        if (err instanceof ApiError) {
            this.itemError(reportId, `${err.code}: ${err.message}`);
            return;
        }
        throw err;
    }

    private render(): void {
        clear(this.list);
        if (this.reports.length === 0) {
            this.list.append(el("li", { class: "empty-state" }, "The queue is empty. Nothing to review."));
            return;
        }
        for (const report of this.reports) this.list.append(this.renderItem(report));
    }

    private renderItem(report: GeoReportJson): HTMLElement {
        const noteInput = el("input", {
            class: "reject-note",
            placeholder: "why is this rejected?",
        }) as HTMLInputElement;
        return el(
            "li",
            { class: "queue-item", "data-report-id": report.id },
            el(
                "div",
                { class: "report-line" },
                el("strong", {}, report.id),
                el("span", { class: "description" }, report.description),
                pinLink(report),
            ),
            categoryLine(report),
            report.manual_flag ? el("span", { class: "manual-flag" }, "needs manual category check") : null,
            el(
                "div",
                { class: "decision-controls" },
                el("button", { class: "approve", onclick: () => void this.approve(report.id) }, "Approve"),
                noteInput,
                el("button", {
                    class: "reject",
                    onclick: () => void this.reject(report.id, noteInput.value),
                }, "Reject"),
            ),
            el("div", { class: "item-error", hidden: true }),
        );
    }

    private removeFromList(reportId: string): void {
        this.reports = this.reports.filter((r) => r.id !== reportId);
        this.render();
    }

    private itemError(reportId: string, text: string): void {
        const item = this.list.querySelector(`[data-report-id="${reportId}"] .item-error`);
        if (item instanceof HTMLElement) {
            item.textContent = text;
            item.hidden = false;
        } else {
            this.showMessage(text);
        }
    }

    private showMessage(text: string): void {
        this.messageBar.textContent = text;
        this.messageBar.hidden = false;
    }

    private clearMessage(): void {
        this.messageBar.textContent = "";
        this.messageBar.hidden = true;
    }
}

/**
 * Pin board of published reports. Pins are placed by linear lat/lon scaling
 * inside the viewport; clicking a pin opens the same location on an open
 * tile map, so the heavy cartography stays out of the bundle.
 */
export class ReportsMap {
    readonly root: HTMLElement;
    reports: GeoReportJson[] = [];

    private readonly board: HTMLElement;

    constructor(private readonly api: ApiClient) {
        this.board = el("div", { class: "pin-board" });
        this.root = el(
            "div",
            { class: "reports-map" },
            el("h2", {}, "Published reports"),
            this.board,
        );
    }

    async refresh(): Promise<void> {
        this.reports = await this.api.queryReports({ state: "published" });
        this.render();
    }

    private render(): void {
        clear(this.board);
        const located = this.reports.filter((r) => r.location !== null);
        if (located.length === 0) {
            this.board.append(el("p", { class: "empty-state" }, "No published reports yet."));
            return;
        }
        const lats = located.map((r) => r.location!.lat);
        const lons = located.map((r) => r.location!.lon);
        const latSpan = Math.max(...lats) - Math.min(...lats) || 1;
        const lonSpan = Math.max(...lons) - Math.min(...lons) || 1;
        for (const report of located) {
            const left = ((report.location!.lon - Math.min(...lons)) / lonSpan) * 90 + 5;
            const top = ((Math.max(...lats) - report.location!.lat) / latSpan) * 90 + 5;
            const pin = pinLink(report)!;
            pin.classList.add("board-pin");
            pin.setAttribute("data-report-id", report.id);
            pin.setAttribute("title", report.description);
            pin.style.left = `${left.toFixed(1)}%`;
            pin.style.top = `${top.toFixed(1)}%`;
            pin.textContent = report.confirmed_category ?? "?";
            this.board.append(pin);
        }
    }
}
