import { ApiError, SessionClient } from "./client.js";
import { applyMetrics, applyView, toast } from "./dom.js";
import { renderQuestion } from "./render.js";
import type { SessionState } from "./types.js";

/** Session bootstrap and the answer/poll loop.
 *
 * The service base URL is injected at build time (window.ALQUEST_BASE_URL,
 * falling back to same-origin), so the console stays a pure client.
 */

declare global {
  interface Window {
    ALQUEST_BASE_URL?: string;
  }
}

const baseUrl = window.ALQUEST_BASE_URL ?? "";
const client = new SessionClient(baseUrl);

let sessionId: string | null = null;

function show(state: SessionState): void {
  applyMetrics(state);
  applyView(renderQuestion(state), submit);
}

async function refresh(): Promise<void> {
  if (!sessionId) return;
  try {
    show(await client.next(sessionId));
  } catch (err) {
    if (err instanceof ApiError && err.status === 409) {
      setTimeout(refresh, 400); // training; long-poll again shortly
      return;
    }
    toast(`could not fetch the session state: ${String(err)}`);
  }
}

async function submit(value: number, step: number): Promise<void> {
  if (!sessionId) return;
  try {
    show(await client.answer(sessionId, value, step));
  } catch (err) {
    if (err instanceof ApiError && (err.status === 409 || err.status === 422)) {
      toast(`answer rejected (${err.status}); refreshing`);
      await refresh();
      return;
    }
    toast(`network failure; your answer was not recorded - retry`);
    await refresh();
  }
}

async function start(): Promise<void> {
  const form = document.getElementById("setup-form") as HTMLFormElement;
  form.addEventListener("submit", async (event) => {
    event.preventDefault();
    const data = new FormData(form);
    const body = {
      dataset: {
        path: String(data.get("dataset") ?? ""),
        holdout_fraction: Number(data.get("holdout") ?? 0.4),
      },
      engine: {
        budget: Number(data.get("budget") ?? 20),
        seed: Number(data.get("seed") ?? 0),
        kinds: [
          { family: "class", m: 1, cost: 1.0 },
          { family: "all", m: 1, cost: 0.18 },
          { family: "all", m: 2, cost: 0.18 },
          { family: "any", m: 2, cost: 0.2 },
        ],
      },
    };
    try {
      const created = await client.createSession(body);
      sessionId = created.id;
      document.getElementById("setup")!.classList.add("hidden");
      await refresh();
    } catch (err) {
      toast(`could not create the session: ${String(err)}`);
    }
  });
}

start();
