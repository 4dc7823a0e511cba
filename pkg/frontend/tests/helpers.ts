// Shared plumbing for the suite: API clients against the live backend,
// deterministic rng, seeding helpers, and the DOM-to-JSON reader used by
// the preview parity check.

import { inject } from "vitest";
import { ApiClient } from "../src/api.js";
import type { Decision, ProposalJson, SourceSpanJson } from "../src/types.js";

declare module "vitest" {
    export interface ProvidedContext {
        baseUrl: string;
    }
}

export function baseUrl(): string {
    return inject("baseUrl");
}

export async function moderatorClient(): Promise<ApiClient> {
    const client = new ApiClient(baseUrl());
    await client.login("mod");
    return client;
}

export async function participantClient(userId = "alice"): Promise<ApiClient> {
    const client = new ApiClient(baseUrl());
    await client.login(userId);
    return client;
}

/** Deterministic float rng in [0, 1); the layout mirror test depends on it. */
export function mulberry32(seed: number): () => number {
    let state = seed >>> 0;
    return () => {
        state = (state + 0x6d2b79f5) >>> 0;
        let t = state;
        t = Math.imul(t ^ (t >>> 15), t | 1);
        t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
        return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
    };
}

// ------------------------------------------------------------------
// transcript fixture (same meeting the backend test corpus uses)

export const FIXTURE_TRANSCRIPT = `Moderator: Welcome everyone to the mobility meeting.
Alice: I think the main street needs a protected bike lane.
Bob: Because cycling feels unsafe there, many people avoid it.
Carol: But the main street would lose thirty parking spots.
Dave: I think buses on the main street should run later at night.
Alice: Because night workers depend on the last bus home.
Bob: However the night routes cost more than they collect.
Carol: I think the park gates must stay open in summer evenings.
Dave: Since the park is the only green space nearby, families need it.
Carol: People gather there every evening in summer.
`;

// ------------------------------------------------------------------
// discussion seeding over the REST API

export interface SeededDiscussion {
    discussionId: string;
    issueIds: string[];
    positionIds: string[];
    argumentIds: string[];
}

/** Two issues, three positions, pro and con arguments, a few votes. */
export async function seedDiscussion(api: ApiClient, title: string): Promise<SeededDiscussion> {
    const discussion = await api.createDiscussion(title, "seeded by the UI test suite");
    const did = discussion.id;
    const node = (parent: string, kind: string, text: string, side?: "pro" | "con") =>
        api.addNode(did, { parent_id: parent, kind, text, side });

    const i1 = (await node(did, "issue", "How to make cycling safer?")).id;
    const p1 = (await node(i1, "position", "Build a protected bike lane")).id;
    const p2 = (await node(i1, "position", "Lower the speed limit instead")).id;
    const i2 = (await node(did, "issue", "What about bus service at night?")).id;
    const p3 = (await node(i2, "position", "Extend night bus hours")).id;
    const a1 = (await node(p1, "argument", "Collisions dropped elsewhere after lanes", "pro")).id;
    const a2 = (await node(p1, "argument", "It removes thirty parking spots", "con")).id;
    const a3 = (await node(p2, "argument", "Cheaper than construction", "pro")).id;
    const a4 = (await node(p3, "argument", "Night workers depend on the last bus", "pro")).id;

    await api.setReflection(p1, "agree");
    await api.setReflection(p2, "disagree");
    await api.setReflection(p3, "agree");
    return {
        discussionId: did,
        issueIds: [i1, i2],
        positionIds: [p1, p2, p3],
        argumentIds: [a1, a2, a3, a4],
    };
}

// ------------------------------------------------------------------
// geo report seeding through the bot webhook

let wireCounter = Math.floor(Math.random() * 1_000_000) * 1000;

export function nextUpdateId(): number {
    wireCounter += 1;
    return wireCounter;
}

export function nextChatId(): number {
    wireCounter += 1;
    return 40_000_000 + wireCounter;
}

export async function postWire(payload: Record<string, unknown>): Promise<{ text: string }> {
    const res = await fetch(`${baseUrl()}/webhook/bot`, {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify(payload),
    });
    if (!res.ok) throw new Error(`webhook returned ${res.status}`);
    return (await res.json()) as { text: string };
}

export interface SeedReportOptions {
    text: string;
    lat?: number;
    lon?: number;
    callback?: string;
}

/** Drive one report through the bot conversation; returns the report id. */
export async function seedReport(opts: SeedReportOptions): Promise<string> {
    const chat = nextChatId();
    await postWire({
        update_id: nextUpdateId(),
        message: { chat: { id: chat }, text: opts.text },
    });
    await postWire({
        update_id: nextUpdateId(),
        message: {
            chat: { id: chat },
            location: { latitude: opts.lat ?? 45.4668, longitude: opts.lon ?? 9.19 },
        },
    });
    const reply = await postWire({
        update_id: nextUpdateId(),
        callback_query: { chat: { id: chat }, data: opts.callback ?? "accept" },
    });
    const match = reply.text.match(/\bg\d+\b/);
    if (!match) throw new Error(`no report id in bot reply: ${reply.text}`);
    return match[0];
}

// ------------------------------------------------------------------
// DOM to proposal JSON (the preview parity reader)

function attr(node: Element, name: string): string {
    const value = node.getAttribute(name);
    if (value === null) throw new Error(`rendered preview is missing ${name}`);
    return value;
}

function readSpan(node: Element): SourceSpanJson {
    return {
        transcript_id: attr(node, "data-span-transcript"),
        start: Number(attr(node, "data-span-start")),
        end: Number(attr(node, "data-span-end")),
    };
}

function readItem(node: Element, kind: "issue" | "position" | "argument"): Record<string, unknown> {
    const text = node.querySelector(":scope > .item-line > .item-text");
    if (!text) throw new Error("rendered item has no visible text");
    const item: Record<string, unknown> = {
        id: attr(node, "data-id"),
        text: text.textContent ?? "",
        confidence: Number(attr(node, "data-confidence")),
        source_span: readSpan(node),
        decision: attr(node, "data-decision") as Decision,
        edited_text: JSON.parse(attr(node, "data-edited-text")),
    };
    if (kind === "argument") {
        item.side = attr(node, "data-side");
    } else if (kind === "issue") {
        item.positions = [...node.querySelectorAll(":scope > ol.positions > li")].map((child) =>
            readItem(child, "position"),
        );
    } else {
        item.arguments = [...node.querySelectorAll(":scope > ol.arguments > li")].map((child) =>
            readItem(child, "argument"),
        );
    }
    return item;
}

/** Rebuild the proposal JSON from nothing but the rendered preview DOM. */
export function readProposalFromDom(panel: Element): ProposalJson {
    return {
        schema: Number(attr(panel, "data-schema")),
        id: attr(panel, "data-proposal-id"),
        transcript_id: attr(panel, "data-transcript-id"),
        state: attr(panel, "data-state") as ProposalJson["state"],
        config: {
            positions_per_issue: Number(attr(panel, "data-positions-per-issue")),
            arguments_per_position: Number(attr(panel, "data-arguments-per-position")),
            balance_bias: Number(attr(panel, "data-balance-bias")),
        },
        metadata: JSON.parse(attr(panel, "data-metadata")),
        created_entities: JSON.parse(attr(panel, "data-created-entities")),
        issues: [...panel.querySelectorAll(":scope > ol.issues > li")].map((node) =>
            readItem(node, "issue"),
        ) as unknown as ProposalJson["issues"],
    };
}
