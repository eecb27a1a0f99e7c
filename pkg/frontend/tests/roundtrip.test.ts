/** Live round trip against the real backend.
 *
 * Starts the Python server, draws a query through the dashboard's own
 * click-to-polygon flow, publishes it with the dashboard client, and
 * then proves the containment loop closes: a device whose trace
 * overlaps the drawn region alerts locally, and the stats view counts
 * exactly the rows that were ingested.
 */

import { execFile, spawn } from "node:child_process";
import type { ChildProcess } from "node:child_process";
import { mkdtempSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { fileURLToPath } from "node:url";
import { promisify } from "node:util";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ApiError, DashboardClient, offendingRegionIndex } from "../src/api.js";
import { addVertex, closeRing } from "../src/draw.js";
import type { Viewport } from "../src/draw.js";
import { parseOpenDataCsv, summarizeByDay } from "../src/stats.js";
import { draftProblems, validateCta } from "../src/validate.js";
import { draftToDocument, emptyDraft } from "../src/types.js";

const execFileAsync = promisify(execFile);

const AUTHORITY = "umbria-health";
const TOKEN = "roundtrip-9f3e1c7b5a2d4860";
const MARKET = { lat: 43.7262, lon: 12.6365 };
const DRIVE_DEVICE = fileURLToPath(new URL("../scripts/drive_device.py", import.meta.url));

let server: ChildProcess;
let baseUrl: string;
let client: DashboardClient;

function startServer(): Promise<string> {
  const dir = mkdtempSync(join(tmpdir(), "dashboard-rt-"));
  const authFile = join(dir, "authorities.json");
  writeFileSync(
    authFile,
    JSON.stringify([
      {
        authority_id: AUTHORITY,
        bearer_token: TOKEN,
        competence_cells: ["218:63", "218:64", "219:63", "219:64"],
      },
    ]),
  );
  server = spawn(
    "python3",
    ["-m", "anontrace.cli", "serve", "--bind", "127.0.0.1:0", "--authorities", authFile],
    { stdio: ["ignore", "pipe", "pipe"] },
  );
  return new Promise((resolve, reject) => {
    let banner = "";
    const timer = setTimeout(() => reject(new Error(`server never came up: ${banner}`)), 20_000);
    server.stdout!.on("data", (chunk: Buffer) => {
      banner += chunk.toString();
      const match = /serving on (http:\/\/[\d.]+:\d+)/.exec(banner);
      if (match) {
        clearTimeout(timer);
        resolve(match[1]!);
      }
    });
    server.stderr!.on("data", (chunk: Buffer) => {
      banner += chunk.toString();
    });
    server.on("exit", (code) => reject(new Error(`server exited ${code}: ${banner}`)));
  });
}

beforeAll(async () => {
  baseUrl = await startServer();
  client = new DashboardClient(baseUrl, TOKEN);
}, 30_000);

afterAll(() => {
  server.kill("SIGINT");
});

describe("dashboard against the live backend", () => {
  const nowS = Math.floor(Date.now() / 1000);
  const sampleT0 = nowS - 7200;
  const ctaId = `cta-rt-${nowS}`;

  it("reaches the server", async () => {
    expect(await client.health()).toBe(true);
  });

  it("publishes a drawn query and a device in the region alerts", async () => {
    // Draw a ring around the market through the click flow.
    const vp: Viewport = { center: MARKET, metersPerPixel: 4, widthPx: 640, heightPx: 480 };
    let ring = addVertex([], vp, 290, 210);
    ring = addVertex(ring, vp, 350, 210);
    ring = addVertex(ring, vp, 350, 270);
    ring = addVertex(ring, vp, 290, 270);
    const closed = closeRing(ring);
    expect(closed).not.toBeNull();

    const draft = emptyDraft(AUTHORITY, nowS);
    draft.id = ctaId;
    draft.message = "visited the market hall";
    draft.minExposureS = 900;
    draft.maxDistanceM = 20;
    draft.regions.push({ vertices: closed!, startS: sampleT0 - 900, endS: sampleT0 + 3600 });
    expect(draftProblems(draft, nowS)).toEqual([]);

    const checked = validateCta(draftToDocument(draft));
    expect(checked.ok).toBe(true);
    if (!checked.ok) return;
    expect(checked.coverageCells).toEqual(["218:63"]);

    const receipt = await client.publishCta(checked.document);
    expect(receipt.id).toBe(ctaId);
    expect(receipt.coverage_cells).toContain("218:63");

    // The published query shows up in the distribution feed.
    const feed = await client.fetchFeed(["218:63"]);
    expect(feed.ctas.map((c) => c.id)).toContain(ctaId);

    // A device that dwelled in the drawn region alerts on its own.
    const { stdout } = await execFileAsync("python3", [
      DRIVE_DEVICE,
      "--server", baseUrl,
      "--lat", String(MARKET.lat),
      "--lon", String(MARKET.lon),
      "--t0", String(sampleT0),
      "--minutes", "40",
      "--now", String(nowS),
    ]);
    const device = JSON.parse(stdout) as {
      alerted: boolean;
      alerts: { cta_id: string; channel: string; exposure_s: number }[];
    };
    expect(device.alerted).toBe(true);
    expect(device.alerts.map((a) => a.cta_id)).toContain(ctaId);
    const alert = device.alerts.find((a) => a.cta_id === ctaId)!;
    expect(alert.channel).toBe("geo");
    expect(alert.exposure_s).toBeGreaterThanOrEqual(900);
  }, 30_000);

  it("a device outside the region stays silent", async () => {
    const { stdout } = await execFileAsync("python3", [
      DRIVE_DEVICE,
      "--server", baseUrl,
      "--lat", "43.7662",
      "--lon", "12.6365",
      "--t0", String(sampleT0),
      "--minutes", "40",
      "--now", String(nowS),
    ]);
    expect((JSON.parse(stdout) as { alerted: boolean }).alerted).toBe(false);
  }, 30_000);

  it("surfaces a competence violation with the offending region", async () => {
    const outside = emptyDraft(AUTHORITY, nowS);
    outside.id = `cta-out-${nowS}`;
    outside.regions.push({
      vertices: [
        { lat: 44.9, lon: 11.9 },
        { lat: 44.91, lon: 11.9 },
        { lat: 44.905, lon: 11.915 },
      ],
      startS: sampleT0,
      endS: sampleT0 + 3600,
    });
    const checked = validateCta(draftToDocument(outside));
    expect(checked.ok).toBe(true);
    if (!checked.ok) return;
    const failure = await client.publishCta(checked.document).then(
      () => null,
      (exc: unknown) => exc,
    );
    expect(failure).toBeInstanceOf(ApiError);
    expect((failure as ApiError).status).toBe(403);
    expect(offendingRegionIndex(failure as ApiError)).toBe(0);
  });

  it("stats view counts exactly the ingested rows", async () => {
    const payload = (installationId: string, day: string) => ({
      installation_id: installationId,
      day,
      samples_recorded: 288,
      samples_discarded: 3,
      minutes_tracked: 700,
      centroid_lat: 43.72,
      centroid_lon: 12.64,
      bbox_diagonal_m: 1200,
      known_locations_visited: 2,
      notes_count: 1,
      minutes_at_home: 520,
    });
    for (const [id, day] of [
      ["rt-install-a", "2023-11-15"],
      ["rt-install-b", "2023-11-15"],
      ["rt-install-c", "2023-11-16"],
    ] as const) {
      const response = await fetch(`${baseUrl}/v1/stats`, {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify(payload(id, day)),
      });
      expect(response.status).toBe(202);
    }

    const rows = parseOpenDataCsv(await client.fetchOpenDataCsv());
    expect(rows).toHaveLength(3);
    const summaries = summarizeByDay(rows);
    expect(summaries.map((s) => [s.day, s.installations])).toEqual([
      ["2023-11-15", 2],
      ["2023-11-16", 1],
    ]);
    // Row keys are opaque: no installation id survives into the export.
    expect(rows.every((r) => !r.rowKey.includes("rt-install"))).toBe(true);
  });

  it("revoking removes the query from the feed", async () => {
    await client.revokeCta(ctaId);
    const feed = await client.fetchFeed(["218:63"]);
    expect(feed.ctas.map((c) => c.id)).not.toContain(ctaId);
  });
});
