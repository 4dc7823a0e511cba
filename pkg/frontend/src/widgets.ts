// One renderer per widget kind. The render mode is fixed per kind (a time
// series is always a chart, a distribution always a table, and so on) and
// degraded widgets show the server's degradation notice verbatim instead
// of a half-drawn body.

import { el, svgEl } from "./dom.js";
import { renderArgumentNetwork } from "./argumentNetwork.js";
import type {
    AgreementRow,
    ArgNetworkJson,
    DistributionRow,
    HistogramJson,
    PoiEntry,
    PoiJson,
    ThemeNodeJson,
    TimeSeriesJson,
    WidgetEntry,
} from "./types.js";

export type RenderMode = "chart" | "table" | "tree" | "graph" | "text";

export const WIDGET_TITLES: Record<string, string> = {
    user_growth: "User growth",
    activity: "Activity",
    engagement_progression: "Engagement progression",
    agreement_tracking: "Agreement tracking",
    position_argument_distribution: "Position argument distribution",
    position_agreement_distribution: "Position agreement distribution",
    synopsis: "Synopsis",
    themes: "Discussion themes",
    points_of_interest: "Points of interest",
    argument_network: "Argument network",
};

export const RENDER_MODES: Record<string, RenderMode> = {
    user_growth: "chart",
    activity: "chart",
    engagement_progression: "chart",
    agreement_tracking: "table",
    position_argument_distribution: "table",
    position_agreement_distribution: "chart",
    synopsis: "text",
    themes: "tree",
    points_of_interest: "table",
    argument_network: "graph",
};

export function renderWidgetBody(kind: string, entry: WidgetEntry, body: HTMLElement): void {
    body.classList.add(`mode-${RENDER_MODES[kind] ?? "text"}`);
    if (entry.status === "degraded") {
        body.classList.add("degraded");
        body.append(el("p", { class: "degradation-notice" }, entry.reason ?? ""));
        return;
    }
    switch (kind) {
        case "user_growth":
        case "activity":
        case "engagement_progression":
            renderTimeSeries(entry.payload as unknown as TimeSeriesJson, body);
            break;
        case "agreement_tracking":
            renderAgreementTable(entry.payload.positions as AgreementRow[], body);
            break;
        case "position_argument_distribution":
            renderDistributionTable(entry.payload.positions as DistributionRow[], body);
            break;
        case "position_agreement_distribution":
            renderHistogram(entry.payload as unknown as HistogramJson, body);
            break;
        case "synopsis":
            body.append(
                el("p", { class: "synopsis-text" }, String(entry.payload.text ?? "")),
                el("p", { class: "synopsis-meta" }, `generated ${entry.payload.generated_at}`),
            );
            break;
        case "themes":
            body.append(renderThemeTree(entry.payload.tree as unknown as ThemeNodeJson));
            break;
        case "points_of_interest":
            renderPoi(entry.payload as unknown as PoiJson, body);
            break;
        case "argument_network":
            renderArgumentNetwork(entry.payload as unknown as ArgNetworkJson, body);
            break;
        default:
            body.append(el("pre", {}, JSON.stringify(entry.payload, null, 2)));
    }
}

// ------------------------------------------------------------------
// chart renderers

function renderTimeSeries(series: TimeSeriesJson, body: HTMLElement): void {
    const width = 300;
    const height = 120;
    const svg = svgEl("svg", { class: "series-chart", viewBox: `0 0 ${width} ${height}` });
    const points = series.points;
    if (points.length > 0) {
        const max = Math.max(...points.map((p) => p.value), 1);
        const step = points.length > 1 ? width / (points.length - 1) : 0;
        const path = points
            .map((p, i) => `${(i * step).toFixed(1)},${(height - (p.value / max) * (height - 10)).toFixed(1)}`)
            .join(" ");
        svg.append(svgEl("polyline", { class: "series-line", points: path, fill: "none" }));
    } else {
        svg.append(svgEl("text", { x: 8, y: 20, class: "series-empty" }, "no data points"));
    }
    svg.setAttribute("data-bucket-seconds", String(series.bucket_seconds));
    svg.setAttribute("data-point-count", String(points.length));
    body.append(svg);
}

function renderHistogram(histogram: HistogramJson, body: HTMLElement): void {
    const width = 300;
    const height = 120;
    const svg = svgEl("svg", { class: "histogram-chart", viewBox: `0 0 ${width} ${height}` });
    const max = Math.max(...histogram.bins.map((b) => b.count), 1);
    const barWidth = width / Math.max(histogram.bins.length, 1);
    histogram.bins.forEach((bin, i) => {
        const barHeight = (bin.count / max) * (height - 14);
        svg.append(
            svgEl("rect", {
                class: "histogram-bar",
                x: (i * barWidth + 1).toFixed(1),
                y: (height - barHeight).toFixed(1),
                width: (barWidth - 2).toFixed(1),
                height: barHeight.toFixed(1),
                "data-count": String(bin.count),
                "data-lo": String(bin.lo),
                "data-hi": String(bin.hi),
            }),
        );
    });
    body.append(svg, el("p", { class: "histogram-meta" }, `${histogram.undefined} positions without votes`));
}

// ------------------------------------------------------------------
// table renderers

function renderAgreementTable(rows: AgreementRow[], body: HTMLElement): void {
    const table = el("table", { class: "agreement-table" });
    table.append(headerRow(["Position", "Agree", "Neutral", "Disagree", "Support"]));
    for (const row of rows) {
        table.append(
            el(
                "tr",
                { "data-position-id": row.position_id },
                el("td", {}, row.text),
                el("td", {}, String(row.agree)),
                el("td", {}, String(row.neutral)),
                el("td", {}, String(row.disagree)),
                el("td", {}, row.support_ratio === null ? "n/a" : row.support_ratio.toFixed(2)),
            ),
        );
    }
    body.append(table);
}

function renderDistributionTable(rows: DistributionRow[], body: HTMLElement): void {
    const table = el("table", { class: "distribution-table" });
    table.append(headerRow(["Position", "Pro", "Con"]));
    for (const row of rows) {
        table.append(
            el(
                "tr",
                { "data-position-id": row.position_id },
                el("td", {}, row.text),
                el("td", { class: "pro" }, String(row.pro)),
                el("td", { class: "con" }, String(row.con)),
            ),
        );
    }
    body.append(table);
}

function renderPoi(poi: PoiJson, body: HTMLElement): void {
    const labels: [keyof PoiJson, string][] = [
        ["most_consensual", "Most consensual"],
        ["most_opposed", "Most opposed"],
        ["most_contested", "Most contested"],
    ];
    const table = el("table", { class: "poi-table" });
    for (const [key, label] of labels) {
        const entry: PoiEntry | null = poi[key];
        table.append(
            el(
                "tr",
                { "data-poi": key },
                el("td", { class: "poi-label" }, label),
                entry === null
                    ? el("td", { class: "poi-empty" }, "no voted positions")
                    : el(
                          "td",
                          { "data-position-id": entry.position_id },
                          `${entry.text} (${entry.agree} agree / ${entry.disagree} disagree)`,
                      ),
            ),
        );
    }
    body.append(table);
}

function headerRow(names: string[]): HTMLElement {
    return el("tr", {}, ...names.map((name) => el("th", {}, name)));
}

// ------------------------------------------------------------------
// tree renderer

function renderThemeTree(root: ThemeNodeJson): HTMLElement {
    return el("ul", { class: "theme-tree" }, renderThemeNode(root));
}

function renderThemeNode(node: ThemeNodeJson): HTMLElement {
    const item = el(
        "li",
        { class: "theme-node" },
        el("span", { class: "theme-label" }, node.label),
        node.keywords.length > 0
            ? el("span", { class: "theme-keywords" }, node.keywords.join(", "))
            : null,
    );
    if (node.children.length > 0) {
        const list = el("ul", { class: "theme-children" });
        for (const child of node.children) list.append(renderThemeNode(child));
        item.append(list);
    }
    return item;
}
