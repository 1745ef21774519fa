import { describe, expect, it, vi } from "vitest";

import { ApiError, HarmonizeClient } from "../src/api.js";

type Handler = (url: string, init?: RequestInit) => Response | Promise<Response>;

function clientWith(handler: Handler): { client: HarmonizeClient; calls: string[] } {
  const calls: string[] = [];
  const fetchImpl = vi.fn(async (input: RequestInfo | URL, init?: RequestInit) => {
    const url = String(input);
    calls.push(`${init?.method ?? "GET"} ${url}`);
    return handler(url, init);
  });
  return { client: new HarmonizeClient("", fetchImpl as unknown as typeof fetch), calls };
}

const json = (body: unknown, status = 200) =>
  new Response(JSON.stringify(body), {
    status,
    headers: { "content-type": "application/json" },
  });

describe("HarmonizeClient", () => {
  it("opens a session", async () => {
    const { client, calls } = clientWith(() =>
      json({ sessionId: "s1", columns: ["ID", "MMSE"], rowCountHint: 2250,
             datasetName: "paquid" }, 201));
    const info = await client.openSession({ format: "csv", location: "/x.csv" });
    expect(info.sessionId).toBe("s1");
    expect(info.columns).toEqual(["ID", "MMSE"]);
    expect(calls).toEqual(["POST /sessions"]);
  });

  it("encodes the summary column in the path", async () => {
    const { client, calls } = clientWith(() =>
      json({ name: "a b", sniffedType: "textLike", nRows: 1, nMissing: 0,
             distinctCount: 1, topCategories: [], numeric: null }));
    await client.summary("s1", "a b");
    expect(calls[0]).toBe("GET /sessions/s1/summary/a%20b");
  });

  it("raises ApiError with the server's code and message", async () => {
    const { client } = clientWith(() =>
      json({ code: "UnknownColumn", message: "no column ghost" }, 404));
    await expect(client.summary("s1", "ghost")).rejects.toMatchObject({
      status: 404,
      code: "UnknownColumn",
      message: "no column ghost",
    });
    await expect(client.summary("s1", "ghost")).rejects.toBeInstanceOf(ApiError);
  });

  it("PUTs sheets as text/csv and unwraps the report", async () => {
    const { client, calls } = clientWith((_url, init) => {
      expect(init?.body).toBe("variable\n");
      return json({ report: { ok: true, findings: [] } });
    });
    const report = await client.putSheet("s1", "details", "variable\n");
    expect(report.ok).toBe(true);
    expect(calls[0]).toBe("PUT /sessions/s1/sheets/details");
  });

  it("polls a job until it settles", async () => {
    const states = ["queued", "running", "done"];
    let hit = 0;
    const { client } = clientWith(() =>
      json({ state: states[Math.min(hit++, 2)], progressRows: hit * 100,
             stats: null, error: null }));
    const seen: string[] = [];
    const final = await client.waitForJob("j1", (s) => seen.push(s.state), 1);
    expect(final.state).toBe("done");
    expect(seen).toEqual(["queued", "running", "done"]);
  });

  it("returns the final status for a failed job instead of throwing", async () => {
    const { client } = clientWith(() =>
      json({ state: "error", progressRows: 0, stats: null, error: "boom" }));
    const final = await client.waitForJob("j1", undefined, 1);
    expect(final.state).toBe("error");
    expect(final.error).toBe("boom");
  });

  it("starts a recode and returns the job id", async () => {
    const { client } = clientWith((_url, init) => {
      const body = JSON.parse(String(init?.body));
      expect(body.selected).toEqual(["sex"]);
      return json({ jobId: "j9" }, 202);
    });
    expect(await client.startRecode("s1", { database: "paquid", selected: ["sex"] }))
      .toBe("j9");
  });

  it("deletes details rows by 1-based index", async () => {
    const { client, calls } = clientWith(() =>
      json({ rows: 4, report: { ok: true, findings: [] } }));
    await client.deleteDetailsRow("s1", 0);
    await client.deleteDetailsRow("s1", 3);
    expect(calls).toEqual([
      "DELETE /sessions/s1/details-rows/0",
      "DELETE /sessions/s1/details-rows/3",
    ]);
  });

  it("checks expressions with component types", async () => {
    const { client } = clientWith((_url, init) => {
      const body = JSON.parse(String(init?.body));
      expect(body.componentTypes).toEqual({ a: "categorical" });
      return json({ ok: true, outputType: "categorical" });
    });
    const result = await client.checkExpression("a ++ a", { a: "categorical" });
    expect(result.outputType).toBe("categorical");
  });
});
