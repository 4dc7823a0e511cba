// Thin typed client for the backend REST API. Every mutating call needs a
// token; the client refuses to fire one without it so a logged-out tab
// fails fast instead of collecting 403s (the server enforces the same rule).

import type {
    CommitResponse,
    Decision,
    DescriptorJson,
    DiscussionSummary,
    DiscussionTree,
    GeoReportJson,
    HealthResponse,
    LayoutJson,
    LayoutOp,
    LoginResponse,
    ProposalJson,
    TranscriptInfo,
} from "./types.js";

export class ApiError extends Error {
    constructor(
        readonly status: number,
        readonly code: string,
        message: string,
    ) {
        super(message);
        this.name = "ApiError";
    }
}

/** True for errors worth a "someone else got there first" refresh prompt. */
export function isConflict(err: unknown): boolean {
    return err instanceof ApiError && err.status === 409;
}

interface RequestOptions {
    body?: unknown;
    query?: Record<string, string | number | undefined>;
    authed?: boolean;
}

export class ApiClient {
    token: string | null = null;

    constructor(readonly baseUrl: string) {}

    // ------------------------------------------------------------------

    private async request<T>(method: string, path: string, opts: RequestOptions = {}): Promise<T> {
        const res = await this.raw(method, path, opts);
        return (await res.json()) as T;
    }

    private async raw(method: string, path: string, opts: RequestOptions = {}): Promise<Response> {
        const headers: Record<string, string> = {};
        if (opts.authed !== false) {
            if (!this.token) {
                throw new ApiError(403, "auth_required", "log in before calling the API");
            }
            headers["X-Auth-Token"] = this.token;
        }
        let url = this.baseUrl + path;
        if (opts.query) {
            const qs = new URLSearchParams();
            for (const [key, value] of Object.entries(opts.query)) {
                if (value !== undefined) qs.set(key, String(value));
            }
            const encoded = qs.toString();
            if (encoded) url += "?" + encoded;
        }
        const init: RequestInit = { method, headers };
        if (opts.body !== undefined) {
            headers["Content-Type"] = "application/json";
            init.body = JSON.stringify(opts.body);
        }
        const res = await fetch(url, init);
        if (!res.ok) {
            let code = "unknown";
            let message = res.statusText;
            try {
                const envelope = (await res.json()) as { error?: { code?: string; message?: string } };
                if (envelope.error) {
                    code = envelope.error.code ?? code;
                    message = envelope.error.message ?? message;
                }
            } catch {
                // non-JSON body, keep the status text
            }
            throw new ApiError(res.status, code, message);
        }
        return res;
    }

    // ------------------------------------------------------------------
    // session

    async login(userId: string): Promise<LoginResponse> {
        const out = await this.request<LoginResponse>("POST", "/auth/login", {
            body: { user_id: userId },
            authed: false,
        });
        this.token = out.token;
        return out;
    }

    health(): Promise<HealthResponse> {
        return this.request("GET", "/health", { authed: false });
    }

    // ------------------------------------------------------------------
    // discussions

    async listDiscussions(): Promise<DiscussionSummary[]> {
        const out = await this.request<{ discussions: DiscussionSummary[] }>("GET", "/discussions", {
            authed: false,
        });
        return out.discussions;
    }

    createDiscussion(title: string, description = ""): Promise<DiscussionSummary> {
        return this.request("POST", "/discussions", { body: { title, description } });
    }

    getDiscussion(did: string): Promise<DiscussionTree> {
        return this.request("GET", `/discussions/${did}`, { authed: false });
    }

    closeDiscussion(did: string): Promise<DiscussionSummary> {
        return this.request("POST", `/discussions/${did}/close`, { body: {} });
    }

    addNode(
        did: string,
        node: { parent_id: string; kind: string; text: string; side?: "pro" | "con" },
    ): Promise<{ id: string; kind: string }> {
        return this.request("POST", `/discussions/${did}/nodes`, { body: node });
    }

    setReflection(pid: string, level: "agree" | "neutral" | "disagree") {
        return this.request<{ position_id: string; reflections: Record<string, number> }>(
            "PUT",
            `/positions/${pid}/reflection`,
            { body: { level } },
        );
    }

    // ------------------------------------------------------------------
    // transcripts and extraction proposals

    uploadTranscript(content: string, name = "", format = "speaker_lines"): Promise<TranscriptInfo> {
        return this.request("POST", "/transcripts", { body: { content, name, format } });
    }

    runExtraction(params: {
        transcript_id: string;
        positions_per_issue: number;
        arguments_per_position: number;
        balance_bias: number;
    }): Promise<ProposalJson> {
        return this.request("POST", "/extractions", { body: params });
    }

    getExtraction(xid: string): Promise<ProposalJson> {
        return this.request("GET", `/extractions/${xid}`, { authed: false });
    }

    submitExtraction(xid: string): Promise<ProposalJson> {
        return this.request("POST", `/extractions/${xid}/submit`, { body: {} });
    }

    decideItem(xid: string, itemId: string, decision: Decision, editedText?: string) {
        return this.request<Record<string, unknown>>("POST", `/extractions/${xid}/items/${itemId}`, {
            body: { decision, edited_text: editedText },
        });
    }

    decideAll(xid: string, decision: Decision): Promise<ProposalJson> {
        return this.request("POST", `/extractions/${xid}/decide-all`, { body: { decision } });
    }

    commitExtraction(xid: string, discussionId: string): Promise<CommitResponse> {
        return this.request("POST", `/extractions/${xid}/commit`, {
            body: { discussion_id: discussionId },
        });
    }

    discardExtraction(xid: string): Promise<ProposalJson> {
        return this.request("POST", `/extractions/${xid}/discard`, { body: {} });
    }

    // ------------------------------------------------------------------
    // geo reports

    async queryReports(filter: {
        state?: string;
        category?: string;
        bbox?: [number, number, number, number];
    } = {}): Promise<GeoReportJson[]> {
        const query: Record<string, string | number | undefined> = {
            state: filter.state,
            category: filter.category,
        };
        if (filter.bbox) {
            const [minLat, minLon, maxLat, maxLon] = filter.bbox;
            query.min_lat = minLat;
            query.min_lon = minLon;
            query.max_lat = maxLat;
            query.max_lon = maxLon;
        }
        const out = await this.request<{ reports: GeoReportJson[] }>("GET", "/reports-geo", {
            query,
            authed: false,
        });
        return out.reports;
    }

    async moderationQueue(): Promise<GeoReportJson[]> {
        const out = await this.request<{ reports: GeoReportJson[] }>("GET", "/reports-geo/queue");
        return out.reports;
    }

    approveReport(rid: string, note?: string): Promise<GeoReportJson> {
        return this.request("POST", `/reports-geo/${rid}/approve`, { body: note ? { note } : {} });
    }

    rejectReport(rid: string, note: string): Promise<GeoReportJson> {
        return this.request("POST", `/reports-geo/${rid}/reject`, { body: { note } });
    }

    // ------------------------------------------------------------------
    // snapshots

    createSnapshot(discussionId: string, kinds?: string[]): Promise<DescriptorJson> {
        return this.request("POST", "/snapshots", {
            body: kinds ? { discussion_id: discussionId, kinds } : { discussion_id: discussionId },
        });
    }

    getSnapshot(sid: string): Promise<DescriptorJson> {
        return this.request("GET", `/snapshots/${sid}`, { authed: false });
    }

    patchLayout(sid: string, op: LayoutOp): Promise<LayoutJson> {
        return this.request("PATCH", `/snapshots/${sid}/layout`, { body: op });
    }

    async exportSnapshot(sid: string, format: "json" | "markdown" | "html"): Promise<string> {
        const res = await this.raw("GET", `/snapshots/${sid}/export`, {
            query: { format },
            authed: false,
        });
        return res.text();
    }
}

/**
 * Per-tab session state: who is logged in, which discussion the moderator
 * is working on. Unsaved layout state lives in the dashboard grid, which
 * patches the server per operation and reconciles from its responses.
 */
export class Session {
    user: LoginResponse["user"] | null = null;
    activeDiscussionId: string | null = null;

    constructor(readonly api: ApiClient) {}

    async login(userId: string): Promise<void> {
        const out = await this.api.login(userId);
        this.user = out.user;
    }

    get isModerator(): boolean {
        return this.user !== null && (this.user.role === "moderator" || this.user.role === "admin");
    }
}
