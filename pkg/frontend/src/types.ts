// Wire types for the backend REST API. Shapes mirror docs/api.md in the
// repository root; the UI never invents fields the server does not send.

export interface LoginUser {
    id: string;
    display_name: string;
    role: "participant" | "moderator" | "admin";
}

export interface LoginResponse {
    token: string;
    user: LoginUser;
}

export interface HealthResponse {
    status: string;
    store_seq: number;
    backend_mode: string;
}

// --- discussions ---

export interface DiscussionSummary {
    id: string;
    title: string;
    description: string;
    status: "open" | "closed";
    created_by: string;
    created_at: string;
    participants: string[];
    counts: { issues: number; positions: number; arguments: number };
}

export interface TreeArgument {
    id: string;
    text: string;
    side: "pro" | "con";
    author: string;
    created_at: string;
    origin: string;
    source_span: SourceSpanJson | null;
}

export interface TreePosition {
    id: string;
    text: string;
    author: string;
    created_at: string;
    origin: string;
    reflections: { agree: number; neutral: number; disagree: number };
    arguments: TreeArgument[];
}

export interface TreeIssue {
    id: string;
    text: string;
    author: string;
    created_at: string;
    origin: string;
    positions: TreePosition[];
}

export interface DiscussionTree extends DiscussionSummary {
    issues: TreeIssue[];
}

// --- transcripts and extraction proposals ---

export interface SourceSpanJson {
    transcript_id: string;
    start: number;
    end: number;
}

export interface TranscriptInfo {
    id: string;
    source_name: string;
    format: string;
    segments: number;
}

export interface ExtractionConfigJson {
    positions_per_issue: number;
    arguments_per_position: number;
    balance_bias: number;
}

export type Decision = "pending" | "accepted" | "rejected" | "edited";

interface ProposalItemBase {
    id: string;
    text: string;
    confidence: number;
    source_span: SourceSpanJson;
    decision: Decision;
    edited_text: string | null;
}

export interface ProposalArgument extends ProposalItemBase {
    side: "pro" | "con";
}

export interface ProposalPosition extends ProposalItemBase {
    arguments: ProposalArgument[];
}

export interface ProposalIssue extends ProposalItemBase {
    positions: ProposalPosition[];
}

export interface ProposalJson {
    schema: number;
    id: string;
    transcript_id: string;
    state: "draft" | "under_review" | "committed" | "discarded";
    config: ExtractionConfigJson;
    metadata: Record<string, unknown>;
    created_entities: string[];
    issues: ProposalIssue[];
}

export interface CommitResponse {
    proposal_id: string;
    state: string;
    created: string[];
}

// --- geo reports ---

export interface GeoReportJson {
    id: string;
    chat_id: number;
    created_at: string;
    description: string;
    location: { lat: number; lon: number } | null;
    media: string[];
    predicted_category: { label: string; confidence: number } | null;
    confirmed_category: string | null;
    state: string;
    moderation_note: string | null;
    manual_flag: boolean;
}

// --- snapshots ---

export interface CellJson {
    widget: string;
    x: number;
    y: number;
    w: number;
    h: number;
}

export interface LayoutJson {
    grid_columns: number;
    cells: CellJson[];
}

export interface WidgetEntry {
    status: "ok" | "degraded";
    reason: string | null;
    payload: Record<string, unknown>;
}

export interface DescriptorJson {
    schema: number;
    id: string;
    discussion_id: string;
    created_at: string;
    store_seq: number;
    layout: LayoutJson;
    widgets: Record<string, WidgetEntry>;
}

export type LayoutOp =
    | { op: "move"; widget: string; x: number; y: number }
    | { op: "resize"; widget: string; w: number; h: number };

// widget payloads the renderers care about

export interface TimeSeriesJson {
    bucket_seconds: number;
    points: { t: string; value: number }[];
}

export interface AgreementRow {
    position_id: string;
    text: string;
    agree: number;
    neutral: number;
    disagree: number;
    support_ratio: number | null;
    contestedness: number;
}

export interface DistributionRow {
    position_id: string;
    text: string;
    pro: number;
    con: number;
}

export interface HistogramJson {
    bins: { lo: number; hi: number; count: number }[];
    undefined: number;
}

export interface ThemeNodeJson {
    label: string;
    keywords: string[];
    post_ids: string[];
    children: ThemeNodeJson[];
}

export interface PoiEntry {
    position_id: string;
    text: string;
    agree: number;
    disagree: number;
    support_ratio: number | null;
}

export interface PoiJson {
    most_consensual: PoiEntry | null;
    most_opposed: PoiEntry | null;
    most_contested: PoiEntry | null;
}

export interface ArgNetworkJson {
    nodes: { id: string; text: string; kind: string; source: Record<string, unknown> }[];
    edges: { from: string; to: string; relation: "support" | "attack"; confidence: number }[];
}
