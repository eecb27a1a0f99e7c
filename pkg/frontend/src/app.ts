/** Single-page dashboard wiring: publish form, drawing surface, stats view. */

import { ApiError, DashboardClient, offendingRegionIndex } from "./api.js";
import { addVertex, closeRing, densityRects, geoToPixel, polygonPoints } from "./draw.js";
import type { Viewport } from "./draw.js";
import { STATS_GRID_DEG, coarseCell } from "./geometry.js";
import { centroidDensity, parseOpenDataCsv, summarizeByDay } from "./stats.js";
import { draftProblems, validateCta } from "./validate.js";
import { draftToDocument, emptyDraft } from "./types.js";
import type { CtaDraft } from "./types.js";

const SVG_NS = "http://www.w3.org/2000/svg";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  text = "",
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) node.setAttribute(key, value);
  if (text) node.textContent = text;
  return node;
}

function byId<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

class Dashboard {
  private client: DashboardClient;
  private draft: CtaDraft;
  private readonly viewport: Viewport;
  private highlightedRegion: number | null = null;

  constructor() {
    const server = (byId<HTMLInputElement>("server").value ||= "http://127.0.0.1:8471");
    this.client = new DashboardClient(server, "");
    this.viewport = {
      center: { lat: 43.726, lon: 12.636 },
      metersPerPixel: 4,
      widthPx: 640,
      heightPx: 480,
    };
    this.draft = emptyDraft("", this.nowS());
    this.bind();
    this.render();
  }

  private nowS(): number {
    return Math.floor(Date.now() / 1000);
  }

  private bind(): void {
    byId<HTMLButtonElement>("connect").addEventListener("click", () => void this.connect());
    byId<HTMLElement>("map").addEventListener("click", (event) => this.mapClick(event));
    byId<HTMLButtonElement>("close-ring").addEventListener("click", () => this.finishRegion());
    byId<HTMLButtonElement>("discard-ring").addEventListener("click", () => {
      this.draft.activeRegion = [];
      this.render();
    });
    byId<HTMLButtonElement>("publish").addEventListener("click", () => void this.publish());
    byId<HTMLButtonElement>("refresh-stats").addEventListener("click", () => void this.loadStats());
    for (const id of ["cta-id", "message", "max-distance", "min-exposure", "tcns", "start", "end"]) {
      byId<HTMLElement>(id).addEventListener("input", () => this.syncDraft());
    }
  }

  private async connect(): Promise<void> {
    const server = byId<HTMLInputElement>("server").value;
    const token = byId<HTMLInputElement>("token").value;
    const authority = byId<HTMLInputElement>("authority").value;
    this.client = new DashboardClient(server, token);
    this.draft.authorityId = authority;
    const up = await this.client.health();
    byId<HTMLElement>("status").textContent = up ? "connected" : "server unreachable";
    if (up) {
      await this.refreshActive();
      await this.loadStats();
    }
  }

  // -- drawing ------------------------------------------------------------

  private mapClick(event: MouseEvent): void {
    const map = byId<HTMLElement>("map");
    const bounds = map.getBoundingClientRect();
    this.draft.activeRegion = addVertex(
      this.draft.activeRegion,
      this.viewport,
      event.clientX - bounds.left,
      event.clientY - bounds.top,
    );
    this.render();
  }

  private finishRegion(): void {
    const ring = closeRing(this.draft.activeRegion);
    if (!ring) return;
    const start = Date.parse(byId<HTMLInputElement>("start").value) / 1000;
    const end = Date.parse(byId<HTMLInputElement>("end").value) / 1000;
    this.draft.regions.push({ vertices: ring, startS: start, endS: end });
    this.draft.activeRegion = [];
    this.render();
  }

  private syncDraft(): void {
    this.draft.id = byId<HTMLInputElement>("cta-id").value;
    this.draft.message = byId<HTMLInputElement>("message").value;
    this.draft.maxDistanceM = Number(byId<HTMLInputElement>("max-distance").value);
    this.draft.minExposureS = Number(byId<HTMLInputElement>("min-exposure").value);
    this.draft.tcnsHex = byId<HTMLTextAreaElement>("tcns")
      .value.split(/\s+/)
      .filter((t) => t !== "");
    this.render();
  }

  // -- publishing ---------------------------------------------------------

  private async publish(): Promise<void> {
    this.draft.createdAt = this.nowS();
    const problems = draftProblems(this.draft, this.nowS());
    if (problems.length > 0) {
      this.showProblems(problems);
      return;
    }
    const checked = validateCta(draftToDocument(this.draft));
    if (!checked.ok) {
      this.showProblems([checked.error]);
      return;
    }
    try {
      const receipt = await this.client.publishCta(checked.document);
      this.showProblems([]);
      byId<HTMLElement>("status").textContent =
        `published ${receipt.id} covering ${receipt.coverage_cells.join(", ")}`;
      this.draft = emptyDraft(this.draft.authorityId, this.nowS());
      this.highlightedRegion = null;
      await this.refreshActive();
    } catch (exc) {
      if (exc instanceof ApiError) {
        this.highlightedRegion = offendingRegionIndex(exc);
        this.showProblems([exc.detail]);
      } else {
        this.showProblems([String(exc)]);
      }
    }
    this.render();
  }

  private showProblems(problems: string[]): void {
    const list = byId<HTMLUListElement>("problems");
    list.replaceChildren(...problems.map((p) => el("li", {}, p)));
  }

  private async refreshActive(): Promise<void> {
    const cells = coarseCell(this.viewport.center);
    const feed = await this.client.fetchFeed([cells]);
    const list = byId<HTMLUListElement>("active");
    list.replaceChildren(
      ...feed.ctas.map((cta) => {
        const item = el("li", {}, `${cta.id} — ${cta.message} `);
        const revoke = el("button", {}, "revoke");
        revoke.addEventListener("click", () => {
          void this.client.revokeCta(cta.id).then(() => this.refreshActive());
        });
        item.append(revoke);
        return item;
      }),
    );
  }

  // -- stats view ----------------------------------------------------------

  private async loadStats(): Promise<void> {
    const csv = await this.client.fetchOpenDataCsv();
    const rows = parseOpenDataCsv(csv);
    const table = byId<HTMLTableElement>("stats-table");
    table.replaceChildren();
    if (rows.length === 0) {
      byId<HTMLElement>("stats-empty").textContent = "no statistics uploaded yet";
      return;
    }
    byId<HTMLElement>("stats-empty").textContent = "";
    const head = el("tr");
    for (const label of ["day", "installations", "mean minutes tracked", "mean minutes at home"]) {
      head.append(el("th", {}, label));
    }
    table.append(head);
    for (const summary of summarizeByDay(rows)) {
      const tr = el("tr");
      tr.append(el("td", {}, summary.day));
      tr.append(el("td", {}, String(summary.installations)));
      tr.append(el("td", {}, summary.meanMinutesTracked.toFixed(1)));
      tr.append(el("td", {}, summary.meanMinutesAtHome.toFixed(1)));
      table.append(tr);
    }
    this.renderDensity(centroidDensity(rows));
  }

  private renderDensity(cells: ReturnType<typeof centroidDensity>): void {
    const svg = byId<HTMLElement>("density");
    svg.replaceChildren();
    const peak = Math.max(1, ...cells.map((c) => c.count));
    for (const rect of densityRects(this.viewport, cells, STATS_GRID_DEG)) {
      const node = document.createElementNS(SVG_NS, "rect");
      node.setAttribute("x", rect.x.toFixed(1));
      node.setAttribute("y", rect.y.toFixed(1));
      node.setAttribute("width", rect.width.toFixed(1));
      node.setAttribute("height", rect.height.toFixed(1));
      node.setAttribute("fill", "crimson");
      node.setAttribute("fill-opacity", (0.2 + (0.7 * rect.count) / peak).toFixed(2));
      svg.append(node);
    }
  }

  // -- map rendering --------------------------------------------------------

  private render(): void {
    const svg = byId<HTMLElement>("map");
    svg.replaceChildren();
    this.draft.regions.forEach((region, index) => {
      const node = document.createElementNS(SVG_NS, "polygon");
      node.setAttribute("points", polygonPoints(this.viewport, region.vertices));
      node.setAttribute("fill", index === this.highlightedRegion ? "orange" : "steelblue");
      node.setAttribute("fill-opacity", "0.4");
      node.setAttribute("stroke", index === this.highlightedRegion ? "red" : "navy");
      svg.append(node);
    });
    for (const vertex of this.draft.activeRegion) {
      const { x, y } = geoToPixel(this.viewport, vertex);
      const dot = document.createElementNS(SVG_NS, "circle");
      dot.setAttribute("cx", x.toFixed(1));
      dot.setAttribute("cy", y.toFixed(1));
      dot.setAttribute("r", "3");
      dot.setAttribute("fill", "navy");
      svg.append(dot);
    }
    this.showProblems(draftProblems(this.draft, this.nowS()));
  }
}

if (typeof document !== "undefined" && document.getElementById("map")) {
  new Dashboard();
}
