// Two-step transcript import: calibrate extraction parameters against a
// live preview, then review every proposed item before committing. The
// preview is re-fetched on each parameter change (debounced) and the DOM
// carries the full proposal payload, so what the moderator sees is exactly
// what the backend staged.

import { ApiClient, ApiError } from "./api.js";
import { clear, el } from "./dom.js";
import type { Decision, ProposalJson } from "./types.js";

export interface WizardParams {
    positionsPerIssue: number;
    argumentsPerPosition: number;
    balanceBias: number;
}

export const PARAM_BOUNDS = {
    positionsPerIssue: { min: 3, max: 10, step: 1 },
    argumentsPerPosition: { min: 1, max: 4, step: 1 },
    balanceBias: { min: 0, max: 1, step: 0.1 },
} as const;

const DEFAULT_PARAMS: WizardParams = {
    positionsPerIssue: 5,
    argumentsPerPosition: 2,
    balanceBias: 0.5,
};

type ProposalItemJson = {
    id: string;
    text: string;
    confidence: number;
    source_span: { transcript_id: string; start: number; end: number };
    decision: Decision;
    edited_text: string | null;
    side?: "pro" | "con";
    positions?: ProposalItemJson[];
    arguments?: ProposalItemJson[];
};

export class ImportWizard {
    readonly root: HTMLElement;
    params: WizardParams = { ...DEFAULT_PARAMS };
    transcriptId: string | null = null;
    proposal: ProposalJson | null = null;

    private readonly debounceMs: number;
    private timer: ReturnType<typeof setTimeout> | null = null;
    private requestSeq = 0;
    private inFlight: Promise<void> | null = null;

    private readonly errorBar: HTMLElement;
    private readonly uploadInfo: HTMLElement;
    private readonly panel: HTMLElement;
    private readonly commitBar: HTMLElement;
    private readonly sliders = new Map<keyof WizardParams, HTMLInputElement>();

    constructor(
        private readonly api: ApiClient,
        opts: { debounceMs?: number } = {},
    ) {
        this.debounceMs = opts.debounceMs ?? 300;
        this.errorBar = el("div", { class: "error-bar", hidden: true });
        this.uploadInfo = el("p", { class: "upload-info" });
        this.panel = el("section", { class: "preview" });
        this.commitBar = el("div", { class: "commit-bar", hidden: true });
        this.root = el(
            "div",
            { class: "import-wizard" },
            this.errorBar,
            this.buildUploadStep(),
            this.buildParamStep(),
            this.panel,
            this.commitBar,
        );
    }

    // ------------------------------------------------------------------
    // step 1: upload and calibrate

    private buildUploadStep(): HTMLElement {
        const nameInput = el("input", {
            class: "transcript-name",
            placeholder: "meeting name",
        }) as HTMLInputElement;
        const textArea = el("textarea", {
            class: "transcript-text",
            rows: 8,
            placeholder: "Paste the meeting transcript, one 'Speaker: words' line per turn.",
        }) as HTMLTextAreaElement;
        const button = el("button", {
            class: "parse-transcript",
            onclick: () => {
                void this.loadTranscript(textArea.value, nameInput.value);
            },
        }, "Parse transcript");
        return el("div", { class: "step step-upload" }, nameInput, textArea, button, this.uploadInfo);
    }

    private buildParamStep(): HTMLElement {
        const rows: HTMLElement[] = [];
        const labels: Record<keyof WizardParams, string> = {
            positionsPerIssue: "Positions per issue",
            argumentsPerPosition: "Arguments per position",
            balanceBias: "Pro/con balance",
        };
        for (const key of Object.keys(PARAM_BOUNDS) as (keyof WizardParams)[]) {
            const bounds = PARAM_BOUNDS[key];
            const readout = el("span", { class: "param-value" }, String(this.params[key]));
            const slider = el("input", {
                type: "range",
                min: bounds.min,
                max: bounds.max,
                step: bounds.step,
                value: this.params[key],
                oninput: () => {
                    this.setParams({ [key]: Number(slider.value) } as Partial<WizardParams>);
                },
            }) as HTMLInputElement;
            this.sliders.set(key, slider);
            rows.push(el("label", { class: `param param-${key}` }, labels[key], slider, readout));
        }
        return el("div", { class: "step step-params" }, ...rows);
    }

    async loadTranscript(content: string, name = ""): Promise<void> {
        try {
            const info = await this.api.uploadTranscript(content, name);
            this.transcriptId = info.id;
            this.uploadInfo.textContent = `${info.segments} segments parsed (${info.id})`;
            await this.refreshPreview();
        } catch (err) {
            this.showError(err);
            throw err;
        }
    }

    /** Update sliders and schedule a debounced re-preview. */
    setParams(partial: Partial<WizardParams>): void {
        Object.assign(this.params, partial);
        for (const [key, slider] of this.sliders) {
            slider.value = String(this.params[key]);
            const readout = slider.parentElement?.querySelector(".param-value");
            if (readout) readout.textContent = String(this.params[key]);
        }
        if (this.transcriptId === null) return;
        if (this.timer !== null) clearTimeout(this.timer);
        this.timer = setTimeout(() => {
            this.timer = null;
            void this.refreshPreview();
        }, this.debounceMs);
    }

    /** Cancel any pending debounce and wait for the preview to settle. */
    async flushPreview(): Promise<void> {
        if (this.timer !== null) {
            clearTimeout(this.timer);
            this.timer = null;
            await this.refreshPreview();
        } else if (this.inFlight) {
            await this.inFlight;
        }
    }

    async refreshPreview(): Promise<void> {
        if (this.transcriptId === null) return;
        const seq = ++this.requestSeq;
        const work = (async () => {
            const proposal = await this.api.runExtraction({
                transcript_id: this.transcriptId as string,
                positions_per_issue: this.params.positionsPerIssue,
                arguments_per_position: this.params.argumentsPerPosition,
                balance_bias: this.params.balanceBias,
            });
            if (seq !== this.requestSeq) return; // a newer preview superseded this one
            this.proposal = proposal;
            this.clearError();
            this.render();
        })();
        this.inFlight = work;
        try {
            await work;
        } catch (err) {
            if (seq === this.requestSeq) this.showError(err);
            throw err;
        } finally {
            if (this.inFlight === work) this.inFlight = null;
        }
    }

    // ------------------------------------------------------------------
    // step 2: review and commit

    async beginReview(): Promise<void> {
        const proposal = this.requireProposal();
        this.proposal = await this.api.submitExtraction(proposal.id);
        this.render();
    }

    async decide(itemId: string, decision: Decision, editedText?: string): Promise<void> {
        const proposal = this.requireProposal();
        try {
            await this.api.decideItem(proposal.id, itemId, decision, editedText);
            this.proposal = await this.api.getExtraction(proposal.id);
            this.clearError();
        } catch (err) {
            this.showError(err);
            throw err;
        }
        this.render();
    }

    async decideAll(decision: Decision): Promise<void> {
        const proposal = this.requireProposal();
        this.proposal = await this.api.decideAll(proposal.id, decision);
        this.render();
    }

    get pendingCount(): number {
        if (!this.proposal) return 0;
        let count = 0;
        for (const item of walkItems(this.proposal)) {
            if (item.decision === "pending") count += 1;
        }
        return count;
    }

    async commit(discussionId: string): Promise<string[]> {
        const proposal = this.requireProposal();
        if (this.pendingCount > 0) {
            // mirrors the server gate; the commit button is disabled in this state
            throw new ApiError(409, "pending_items_remain", "decide every item before committing");
        }
        try {
            const out = await this.api.commitExtraction(proposal.id, discussionId);
            this.proposal = await this.api.getExtraction(proposal.id);
            this.clearError();
            this.render();
            return out.created;
        } catch (err) {
            this.showError(err);
            throw err;
        }
    }

    async discard(): Promise<void> {
        const proposal = this.requireProposal();
        this.proposal = await this.api.discardExtraction(proposal.id);
        this.render();
    }

    // ------------------------------------------------------------------
    // rendering

    private requireProposal(): ProposalJson {
        if (!this.proposal) throw new Error("no proposal loaded");
        return this.proposal;
    }

    private showError(err: unknown): void {
        const text =
            err instanceof ApiError ? `${err.code}: ${err.message}` : String((err as Error).message ?? err);
        this.errorBar.textContent = text;
        this.errorBar.hidden = false;
    }

    private clearError(): void {
        this.errorBar.textContent = "";
        this.errorBar.hidden = true;
    }

    private render(): void {
        const proposal = this.requireProposal();
        const reviewing = proposal.state !== "draft";
        this.panel.className = reviewing ? "review" : "preview";
        clear(this.panel);
        this.panel.setAttribute("data-proposal-id", proposal.id);
        this.panel.setAttribute("data-transcript-id", proposal.transcript_id);
        this.panel.setAttribute("data-schema", String(proposal.schema));
        this.panel.setAttribute("data-state", proposal.state);
        this.panel.setAttribute("data-metadata", JSON.stringify(proposal.metadata));
        this.panel.setAttribute("data-created-entities", JSON.stringify(proposal.created_entities));
        this.panel.setAttribute("data-positions-per-issue", String(proposal.config.positions_per_issue));
        this.panel.setAttribute("data-arguments-per-position", String(proposal.config.arguments_per_position));
        this.panel.setAttribute("data-balance-bias", String(proposal.config.balance_bias));

        this.panel.append(
            el(
                "header",
                {},
                el("h2", {}, `Proposal ${proposal.id}`),
                el("span", { class: "state-badge" }, proposal.state),
                el(
                    "span",
                    { class: "config-summary" },
                    `${proposal.config.positions_per_issue} positions, ` +
                        `${proposal.config.arguments_per_position} arguments, ` +
                        `bias ${proposal.config.balance_bias}`,
                ),
            ),
        );
        const issues = el("ol", { class: "issues" });
        for (const issue of proposal.issues as unknown as ProposalItemJson[]) {
            issues.append(this.renderItem(issue, "issue", reviewing));
        }
        this.panel.append(issues);
        this.renderCommitBar(proposal, reviewing);
    }

    private renderItem(item: ProposalItemJson, kind: string, reviewing: boolean): HTMLElement {
        const li = el("li", { class: `item ${kind}` });
        li.setAttribute("data-id", item.id);
        li.setAttribute("data-confidence", String(item.confidence));
        li.setAttribute("data-decision", item.decision);
        li.setAttribute("data-edited-text", JSON.stringify(item.edited_text));
        li.setAttribute("data-span-transcript", item.source_span.transcript_id);
        li.setAttribute("data-span-start", String(item.source_span.start));
        li.setAttribute("data-span-end", String(item.source_span.end));
        if (item.side !== undefined) li.setAttribute("data-side", item.side);

        const line = el(
            "div",
            { class: "item-line" },
            item.side !== undefined ? el("span", { class: `side-badge ${item.side}` }, item.side) : null,
            el("span", { class: "item-text" }, item.text),
            el("span", { class: "item-confidence" }, item.confidence.toFixed(2)),
            el("span", { class: `decision-badge ${item.decision}` }, item.decision),
        );
        li.append(line);
        if (reviewing) line.append(this.buildControls(item));

        const children = item.positions ?? item.arguments;
        if (children && children.length > 0) {
            const childKind = item.positions ? "position" : "argument";
            const list = el("ol", { class: `${childKind}s` });
            for (const child of children) list.append(this.renderItem(child, childKind, reviewing));
            li.append(list);
        }
        return li;
    }

    private buildControls(item: ProposalItemJson): HTMLElement {
        const editBox = el("textarea", { class: "edit-box", hidden: true }) as HTMLTextAreaElement;
        editBox.value = item.edited_text ?? item.text;
        return el(
            "span",
            { class: "item-controls" },
            el("button", { class: "accept", onclick: () => void this.decide(item.id, "accepted") }, "Accept"),
            el("button", { class: "reject", onclick: () => void this.decide(item.id, "rejected") }, "Reject"),
            el("button", {
                class: "edit",
                onclick: () => {
                    if (editBox.hidden) {
                        editBox.hidden = false;
                    } else {
                        void this.decide(item.id, "edited", editBox.value);
                    }
                },
            }, "Edit"),
            editBox,
        );
    }

    private renderCommitBar(proposal: ProposalJson, reviewing: boolean): void {
        clear(this.commitBar);
        this.commitBar.hidden = !reviewing;
        if (!reviewing) return;
        const pending = this.pendingCount;
        const target = el("input", {
            class: "commit-target",
            placeholder: "target discussion id",
        }) as HTMLInputElement;
        const commitButton = el("button", {
            class: "commit",
            onclick: () => void this.commit(target.value),
        }, "Commit") as HTMLButtonElement;
        commitButton.disabled = pending > 0 || proposal.state !== "under_review";
        this.commitBar.append(
            el("span", { class: "pending-count" }, pending > 0 ? `${pending} pending` : "all decided"),
            target,
            commitButton,
            el("button", { class: "discard", onclick: () => void this.discard() }, "Discard"),
        );
        if (proposal.state === "committed") {
            this.commitBar.append(
                el("span", { class: "commit-result" }, `${proposal.created_entities.length} entities created`),
            );
        }
    }
}

function* walkItems(proposal: ProposalJson): Iterable<ProposalItemJson> {
    for (const issue of proposal.issues as unknown as ProposalItemJson[]) {
        yield issue;
        for (const position of issue.positions ?? []) {
            yield position;
            yield* position.arguments ?? [];
        }
    }
}
