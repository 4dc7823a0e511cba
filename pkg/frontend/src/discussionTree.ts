// Collapsible view of one discussion ordered by creation time. Native
// details/summary elements give the collapse behaviour; every level is
// sorted by created_at so the tree reads as a timeline of the debate.

import { el } from "./dom.js";
import type { DiscussionTree, TreeIssue, TreePosition } from "./types.js";

function byCreation<T extends { created_at: string }>(nodes: T[]): T[] {
    return [...nodes].sort((a, b) => a.created_at.localeCompare(b.created_at));
}

export function renderDiscussionTree(tree: DiscussionTree, target: Element): HTMLElement {
    const root = el(
        "div",
        { class: "discussion-tree", "data-discussion-id": tree.id },
        el(
            "header",
            {},
            el("h2", {}, tree.title),
            el("span", { class: `status-badge ${tree.status}` }, tree.status),
            el(
                "span",
                { class: "tree-counts" },
                `${tree.counts.issues} issues, ${tree.counts.positions} positions, ` +
                    `${tree.counts.arguments} arguments`,
            ),
        ),
    );
    for (const issue of byCreation(tree.issues)) root.append(renderIssue(issue));
    target.append(root);
    return root;
}

function renderIssue(issue: TreeIssue): HTMLElement {
    const details = el("details", { class: "tree-issue", "data-node-id": issue.id, open: true });
    details.append(
        el(
            "summary",
            {},
            el("span", { class: "node-text" }, issue.text),
            el("span", { class: "node-meta" }, `${issue.author}, ${issue.created_at}`),
        ),
    );
    for (const position of byCreation(issue.positions)) details.append(renderPosition(position));
    return details;
}

function renderPosition(position: TreePosition): HTMLElement {
    const votes = position.reflections;
    const details = el("details", { class: "tree-position", "data-node-id": position.id, open: true });
    details.append(
        el(
            "summary",
            {},
            el("span", { class: "node-text" }, position.text),
            el(
                "span",
                { class: "reflection-badge" },
                `+${votes.agree} / ${votes.neutral} / -${votes.disagree}`,
            ),
            el("span", { class: "node-meta" }, `${position.author}, ${position.created_at}`),
        ),
    );
    const list = el("ul", { class: "tree-arguments" });
    for (const argument of byCreation(position.arguments)) {
        list.append(
            el(
                "li",
                { class: `tree-argument ${argument.side}`, "data-node-id": argument.id },
                el("span", { class: `side-badge ${argument.side}` }, argument.side),
                el("span", { class: "node-text" }, argument.text),
                el("span", { class: "node-meta" }, `${argument.author}, ${argument.created_at}`),
            ),
        );
    }
    details.append(list);
    return details;
}

export function collapseAll(root: Element): void {
    root.querySelectorAll("details").forEach((d) => {
        d.open = false;
    });
}

export function expandAll(root: Element): void {
    root.querySelectorAll("details").forEach((d) => {
        d.open = true;
    });
}
