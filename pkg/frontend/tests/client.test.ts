import { describe, expect, it, vi } from "vitest";

import { ApiError, SessionClient } from "../src/client.js";

function jsonResponse(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

describe("SessionClient", () => {
  it("posts answers with the question step attached", async () => {
    const calls: Array<{ url: string; init?: RequestInit }> = [];
    const fetchImpl = vi.fn(async (url: RequestInfo | URL, init?: RequestInit) => {
      calls.push({ url: String(url), init });
      return jsonResponse({ status: "awaiting_answer", question: null, metrics: {} });
    });
    const client = new SessionClient("http://svc", fetchImpl as unknown as typeof fetch);
    await client.answer("abc", 1, 7);
    expect(calls[0].url).toBe("http://svc/sessions/abc/answer");
    expect(JSON.parse(String(calls[0].init?.body))).toEqual({ answer: 1, step: 7 });
  });

  it("turns 4xx responses into ApiError with the status code", async () => {
    const fetchImpl = vi.fn(async () => jsonResponse({ detail: "stale" }, 409));
    const client = new SessionClient("", fetchImpl as unknown as typeof fetch);
    await expect(client.answer("abc", 1, 7)).rejects.toMatchObject({ status: 409 });
  });

  it("refuses concurrent submits so a double-click cannot double-charge", async () => {
    let resolveFirst: (r: Response) => void = () => {};
    const fetchImpl = vi.fn(
      () => new Promise<Response>((resolve) => (resolveFirst = resolve)),
    );
    const client = new SessionClient("", fetchImpl as unknown as typeof fetch);
    const first = client.answer("abc", 1, 7);
    await expect(client.answer("abc", 1, 7)).rejects.toMatchObject({ status: 0 });
    expect(fetchImpl).toHaveBeenCalledTimes(1);
    resolveFirst(jsonResponse({ status: "awaiting_answer", question: null, metrics: {} }));
    await first;
    // a later submit is allowed again
    const again = client.answer("abc", 0, 8);
    resolveFirst(jsonResponse({}));
    await expect(again).resolves.toBeDefined();
    expect(fetchImpl).toHaveBeenCalledTimes(2);
  });

  it("network failures propagate without mutating anything", async () => {
    const fetchImpl = vi.fn(async () => {
      throw new TypeError("socket closed");
    });
    const client = new SessionClient("", fetchImpl as unknown as typeof fetch);
    await expect(client.next("abc")).rejects.toThrow("socket closed");
    // the in-flight latch must have been released by the failure
    await expect(client.answer("abc", 1, 1)).rejects.toThrow("socket closed");
  });
});
