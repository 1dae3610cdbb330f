/** Stage-transition subscription: server-sent events with a polling fallback.
 *
 * SSE is parsed from a streamed fetch so the same code runs in browsers and
 * in node; when the stream is unavailable the watcher degrades to polling
 * the run status and replaying its persisted transition log.
 */

import type { Transition } from "./api.js";

export const TERMINAL_STAGES = ["done", "failed"];

export interface WatchHandle {
  /** Resolves with all transitions once a terminal stage is reached. */
  done: Promise<Transition[]>;
  cancel: () => void;
}

/** Parse `data: {...}` lines out of an SSE byte stream. */
export async function* sseEvents(
  body: ReadableStream<Uint8Array>,
): AsyncGenerator<Transition> {
  const reader = body.getReader();
  const decoder = new TextDecoder();
  let buffer = "";
  for (;;) {
    const { done, value } = await reader.read();
    if (done) break;
    buffer += decoder.decode(value, { stream: true });
    let index;
    while ((index = buffer.indexOf("\n\n")) >= 0) {
      const chunk = buffer.slice(0, index);
      buffer = buffer.slice(index + 2);
      for (const line of chunk.split("\n")) {
        if (line.startsWith("data: ")) {
          yield JSON.parse(line.slice("data: ".length)) as Transition;
        }
      }
    }
  }
}

async function watchViaStream(
  baseUrl: string,
  runId: string,
  onEvent: (t: Transition) => void,
  fetchImpl: typeof fetch,
): Promise<Transition[]> {
  const response = await fetchImpl(`${baseUrl}/v1/runs/${runId}/events`);
  if (!response.ok || response.body === null) {
    throw new Error(`event stream unavailable: ${response.status}`);
  }
  const seen: Transition[] = [];
  for await (const transition of sseEvents(response.body)) {
    seen.push(transition);
    onEvent(transition);
    if (TERMINAL_STAGES.includes(transition.to)) return seen;
  }
  return seen;
}

async function watchViaPolling(
  baseUrl: string,
  runId: string,
  onEvent: (t: Transition) => void,
  fetchImpl: typeof fetch,
  intervalMs: number,
  cancelled: () => boolean,
): Promise<Transition[]> {
  let reported = 0;
  const seen: Transition[] = [];
  for (;;) {
    if (cancelled()) return seen;
    const response = await fetchImpl(`${baseUrl}/v1/runs/${runId}`);
    if (!response.ok) throw new Error(`status poll failed: ${response.status}`);
    const status = (await response.json()) as { transitions: Transition[] };
    for (const transition of status.transitions.slice(reported)) {
      seen.push(transition);
      onEvent(transition);
      if (TERMINAL_STAGES.includes(transition.to)) return seen;
    }
    reported = status.transitions.length;
    await new Promise((resolve) => setTimeout(resolve, intervalMs));
  }
}

export function watchRun(
  baseUrl: string,
  runId: string,
  onEvent: (t: Transition) => void,
  fetchImpl: typeof fetch = fetch,
  pollIntervalMs = 250,
): WatchHandle {
  let cancelled = false;
  const done = watchViaStream(baseUrl, runId, onEvent, fetchImpl).catch(() =>
    watchViaPolling(baseUrl, runId, onEvent, fetchImpl, pollIntervalMs, () => cancelled),
  );
  return { done, cancel: () => (cancelled = true) };
}
