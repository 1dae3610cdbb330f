/** Stage timeline view model built from the persisted transition log. */

import type { RunStatus, Transition } from "./api.js";

export const STAGE_ORDER = [
  "interpreting",
  "acting",
  "debating",
  "executing",
  "analyzing",
] as const;

export type StageState = "pending" | "active" | "done" | "failed";

export interface TimelineEntry {
  stage: string;
  state: StageState;
  durationSeconds: number | null;
}

export interface Timeline {
  entries: TimelineEntry[];
  terminal: "done" | "failed" | null;
  failureReason: string | null;
}

export function buildTimeline(
  transitions: Transition[],
  timings: Record<string, number> = {},
  failureReason: string | null = null,
): Timeline {
  const entered = new Set(transitions.map((t) => t.to));
  const current = transitions.length
    ? transitions[transitions.length - 1]!.to
    : null;
  const terminal = current === "done" || current === "failed" ? current : null;

  const entries: TimelineEntry[] = STAGE_ORDER.map((stage) => {
    let state: StageState = "pending";
    if (stage in timings) state = "done";
    else if (stage === current) state = terminal === null ? "active" : "failed";
    else if (entered.has(stage)) state = "failed";
    return {
      stage,
      state,
      durationSeconds: stage in timings ? timings[stage]! : null,
    };
  });
  // A failed run marks the stage it died in, not the ones it never reached.
  if (terminal === "failed") {
    const lastEntered = transitions[transitions.length - 1]!.from;
    for (const entry of entries) {
      if (entry.state === "active") entry.state = "failed";
      if (entry.stage === lastEntered && entry.state !== "done") entry.state = "failed";
    }
  }
  return { entries, terminal, failureReason };
}

export function timelineFromStatus(status: RunStatus): Timeline {
  return buildTimeline(status.transitions, status.timings, status.failure_reason);
}
