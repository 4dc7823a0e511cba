// Small hyperscript helper so components can build DOM without a framework.

export type Child = Node | string | null | undefined;

export interface Attrs {
    [key: string]: string | number | boolean | EventListener | undefined;
}

export function el<K extends keyof HTMLElementTagNameMap>(
    tag: K,
    attrs: Attrs = {},
    ...children: Child[]
): HTMLElementTagNameMap[K] {
    const node = document.createElement(tag);
    applyAttrs(node, attrs);
    append(node, children);
    return node;
}

const SVG_NS = "http://www.w3.org/2000/svg";

export function svgEl(tag: string, attrs: Attrs = {}, ...children: Child[]): SVGElement {
    const node = document.createElementNS(SVG_NS, tag) as SVGElement;
    applyAttrs(node, attrs);
    append(node, children);
    return node;
}

function applyAttrs(node: Element, attrs: Attrs): void {
    for (const [key, value] of Object.entries(attrs)) {
        if (value === undefined) continue;
        if (key.startsWith("on") && typeof value === "function") {
            node.addEventListener(key.slice(2), value as EventListener);
        } else if (typeof value === "boolean") {
            if (value) node.setAttribute(key, "");
        } else {
            node.setAttribute(key, String(value));
        }
    }
}

function append(node: Element, children: Child[]): void {
    for (const child of children) {
        if (child === null || child === undefined) continue;
        node.append(child);
    }
}

export function clear(node: Element): void {
    while (node.firstChild) node.removeChild(node.firstChild);
}
