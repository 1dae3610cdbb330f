/** Debate viewer model: one card per round, script diffs between revisions. */

import type { TranscriptView } from "./api.js";
import { DiffLine, diffLines } from "./diff.js";

export interface DebateCard {
  roundIndex: number;
  critic: string;
  decision: "approve" | "reject";
  rationale: string;
  executionError: string | null;
  /** Diff from the reviewed script to the critic's rewrite, when one exists. */
  diff: DiffLine[] | null;
}

export interface DebateView {
  cards: DebateCard[];
  roundCount: number;
  exhausted: boolean;
  diffCount: number;
}

export function buildDebateView(
  transcript: TranscriptView,
  initialSource: string | null = null,
): DebateView {
  // Each round reviews either the initial actor script or the latest rewrite.
  let previousSource = initialSource;
  const cards: DebateCard[] = transcript.rounds.map((round) => {
    const rewrite = round.verdict.rewrite;
    let diff: DiffLine[] | null = null;
    if (rewrite !== null && previousSource !== null) {
      diff = diffLines(previousSource, rewrite.source);
    }
    if (rewrite !== null) previousSource = rewrite.source;
    return {
      roundIndex: round.round_index,
      critic: round.critic_instance_id,
      decision: round.verdict.decision,
      rationale: round.verdict.rationale,
      executionError: round.execution_error,
      diff,
    };
  });
  return {
    cards,
    roundCount: cards.length,
    exhausted: transcript.outcome === "exhausted",
    diffCount: cards.filter((c) => c.diff !== null).length,
  };
}
