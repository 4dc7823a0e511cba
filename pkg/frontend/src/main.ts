// App shell: login, tab navigation, and one panel per moderator task.
// Everything below talks to the backend exclusively through ApiClient.

import { ApiClient, ApiError, Session } from "./api.js";
import { DashboardGrid } from "./dashboardGrid.js";
import { renderDiscussionTree, collapseAll, expandAll } from "./discussionTree.js";
import { clear, el } from "./dom.js";
import { printDashboardPdf } from "./exportTools.js";
import { ImportWizard } from "./importWizard.js";
import { ModerationQueue, ReportsMap } from "./moderationQueue.js";

const TABS = ["import", "queue", "dashboard", "tree"] as const;
type Tab = (typeof TABS)[number];

export function defaultBaseUrl(): string {
    const override = new URLSearchParams(window.location.search).get("api");
    if (override) return override.replace(/\/$/, "");
    return window.location.origin.startsWith("http") ? window.location.origin : "http://127.0.0.1:8400";
}

export class App {
    readonly root: HTMLElement;
    readonly session: Session;

    private readonly wizard: ImportWizard;
    private readonly queue: ModerationQueue;
    private readonly map: ReportsMap;
    private readonly dashboard: DashboardGrid;
    private readonly panels = new Map<Tab, HTMLElement>();
    private readonly loginBar: HTMLElement;
    private readonly treePanel: HTMLElement;

    constructor(readonly api: ApiClient) {
        this.session = new Session(api);
        this.wizard = new ImportWizard(api);
        this.map = new ReportsMap(api);
        this.queue = new ModerationQueue(api, () => void this.map.refresh());
        this.dashboard = new DashboardGrid(api);
        this.loginBar = this.buildLoginBar();
        this.treePanel = el("div", { class: "tree-panel" });

        this.panels.set("import", this.wizard.root);
        this.panels.set("queue", el("div", { class: "queue-panel" }, this.queue.root, this.map.root));
        this.panels.set("dashboard", this.buildDashboardPanel());
        this.panels.set("tree", this.treePanel);

        const tabs = el(
            "nav",
            { class: "tab-bar" },
            ...TABS.map((tab) =>
                el("button", { class: `tab tab-${tab}`, onclick: () => this.show(tab) }, tab),
            ),
        );
        const panelHost = el("main", { class: "panel-host" });
        for (const [, panel] of this.panels) {
            panel.classList.add("panel");
            panel.hidden = true;
            panelHost.append(panel);
        }
        this.root = el("div", { class: "app" }, this.loginBar, tabs, panelHost);
        this.show("import");
    }

    show(tab: Tab): void {
        for (const [name, panel] of this.panels) panel.hidden = name !== tab;
        if (tab === "queue" && this.session.user) {
            void this.queue.refresh();
            void this.map.refresh();
        }
    }

    private buildLoginBar(): HTMLElement {
        const userInput = el("input", { class: "login-user", placeholder: "user id" }) as HTMLInputElement;
        const status = el("span", { class: "login-status" }, "not logged in");
        return el(
            "header",
            { class: "login-bar" },
            el("h1", {}, "delib moderator console"),
            userInput,
            el("button", {
                class: "login",
                onclick: () => {
                    void this.session
                        .login(userInput.value)
                        .then(() => {
                            const user = this.session.user!;
                            status.textContent = `${user.display_name} (${user.role})`;
                        })
                        .catch((err: unknown) => {
                            status.textContent =
                                err instanceof ApiError ? `${err.code}: ${err.message}` : String(err);
                        });
                },
            }, "Log in"),
            status,
        );
    }

    private buildDashboardPanel(): HTMLElement {
        const discussionInput = el("input", {
            class: "snapshot-discussion",
            placeholder: "discussion id",
        }) as HTMLInputElement;
        const snapshotInput = el("input", {
            class: "snapshot-id",
            placeholder: "snapshot id",
        }) as HTMLInputElement;
        return el(
            "div",
            { class: "dashboard-panel" },
            el(
                "div",
                { class: "dashboard-controls" },
                discussionInput,
                el("button", {
                    class: "create-snapshot",
                    onclick: () => {
                        void this.api.createSnapshot(discussionInput.value).then((descriptor) => {
                            snapshotInput.value = descriptor.id;
                            void this.dashboard.load(descriptor.id);
                        });
                    },
                }, "Snapshot now"),
                snapshotInput,
                el("button", {
                    class: "load-snapshot",
                    onclick: () => void this.dashboard.load(snapshotInput.value),
                }, "Load"),
                el("button", {
                    class: "print-pdf",
                    onclick: () => {
                        if (this.dashboard.layout) {
                            printDashboardPdf(this.dashboard.root, this.dashboard.layout);
                        }
                    },
                }, "Print PDF"),
            ),
            this.dashboard.root,
        );
    }

    async showTree(discussionId: string): Promise<void> {
        const tree = await this.api.getDiscussion(discussionId);
        clear(this.treePanel);
        this.treePanel.append(
            el(
                "div",
                { class: "tree-controls" },
                el("button", { class: "collapse-all", onclick: () => collapseAll(this.treePanel) }, "Collapse all"),
                el("button", { class: "expand-all", onclick: () => expandAll(this.treePanel) }, "Expand all"),
            ),
        );
        renderDiscussionTree(tree, this.treePanel);
        this.session.activeDiscussionId = discussionId;
    }
}

export function mount(target: Element, baseUrl = defaultBaseUrl()): App {
    const app = new App(new ApiClient(baseUrl));
    target.append(app.root);
    return app;
}

if (typeof document !== "undefined" && document.getElementById("app")) {
    mount(document.getElementById("app") as Element);
}
