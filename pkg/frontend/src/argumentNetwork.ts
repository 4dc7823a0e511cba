// Renders a mined argument graph as an SVG node-link diagram. Support and
// attack edges must stay visually distinct at a glance: support is a solid
// green line, attack a dashed red one, each with its own arrowhead marker.

import { svgEl } from "./dom.js";
import type { ArgNetworkJson } from "./types.js";

const WIDTH = 640;
const HEIGHT = 400;
const NODE_RADIUS = 16;

export const EDGE_STYLE = {
    support: { class: "edge support", dash: null, marker: "url(#arrow-support)" },
    attack: { class: "edge attack", dash: "6 3", marker: "url(#arrow-attack)" },
} as const;

export function edgeClass(relation: "support" | "attack"): string {
    return EDGE_STYLE[relation].class;
}

/** Deterministic circle layout: node order in the payload fixes the angles. */
function placeNodes(graph: ArgNetworkJson): Map<string, { x: number; y: number }> {
    const spots = new Map<string, { x: number; y: number }>();
    const n = graph.nodes.length;
    const cx = WIDTH / 2;
    const cy = HEIGHT / 2;
    const radius = Math.min(WIDTH, HEIGHT) / 2 - 3 * NODE_RADIUS;
    graph.nodes.forEach((node, i) => {
        const angle = (2 * Math.PI * i) / Math.max(n, 1) - Math.PI / 2;
        spots.set(node.id, {
            x: cx + radius * Math.cos(angle),
            y: cy + radius * Math.sin(angle),
        });
    });
    return spots;
}

export function renderArgumentNetwork(graph: ArgNetworkJson, target: Element): SVGElement {
    const svg = svgEl("svg", {
        class: "argument-network",
        viewBox: `0 0 ${WIDTH} ${HEIGHT}`,
        role: "img",
    });
    svg.append(buildMarkerDefs());
    const spots = placeNodes(graph);

    for (const edge of graph.edges) {
        const from = spots.get(edge.from);
        const to = spots.get(edge.to);
        if (!from || !to) continue;
        const style = EDGE_STYLE[edge.relation];
        const line = svgEl("line", {
            class: style.class,
            x1: from.x,
            y1: from.y,
            x2: to.x,
            y2: to.y,
            "marker-end": style.marker,
            "data-from": edge.from,
            "data-to": edge.to,
            "data-relation": edge.relation,
            "data-confidence": String(edge.confidence),
        });
        if (style.dash) line.setAttribute("stroke-dasharray", style.dash);
        svg.append(line);
    }

    for (const node of graph.nodes) {
        const spot = spots.get(node.id);
        if (!spot) continue;
        const group = svgEl("g", {
            class: `node ${node.kind}`,
            "data-node-id": node.id,
            transform: `translate(${spot.x}, ${spot.y})`,
        });
        group.append(
            svgEl("circle", { r: NODE_RADIUS }),
            svgEl("title", {}, node.text),
            svgEl("text", { class: "node-label", dy: NODE_RADIUS + 14 }, shorten(node.text)),
        );
        svg.append(group);
    }

    svg.append(buildLegend());
    target.append(svg);
    return svg;
}

function buildMarkerDefs(): SVGElement {
    const defs = svgEl("defs");
    for (const relation of ["support", "attack"] as const) {
        const marker = svgEl("marker", {
            id: `arrow-${relation}`,
            class: `arrowhead ${relation}`,
            viewBox: "0 0 10 10",
            refX: 10 + NODE_RADIUS,
            refY: 5,
            markerWidth: 8,
            markerHeight: 8,
            orient: "auto-start-reverse",
        });
        marker.append(svgEl("path", { d: "M 0 0 L 10 5 L 0 10 z" }));
        defs.append(marker);
    }
    return defs;
}

function buildLegend(): SVGElement {
    const legend = svgEl("g", { class: "legend", transform: `translate(12, ${HEIGHT - 36})` });
    legend.append(
        svgEl("line", { class: "edge support", x1: 0, y1: 0, x2: 28, y2: 0 }),
        svgEl("text", { x: 34, y: 4 }, "support"),
    );
    const attack = svgEl("line", { class: "edge attack", x1: 0, y1: 18, x2: 28, y2: 18 });
    attack.setAttribute("stroke-dasharray", EDGE_STYLE.attack.dash);
    legend.append(attack, svgEl("text", { x: 34, y: 22 }, "attack"));
    return legend;
}

function shorten(text: string, limit = 28): string {
    return text.length <= limit ? text : text.slice(0, limit - 1) + "…";
}
