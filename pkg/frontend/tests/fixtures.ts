import type {
  ArtifactInfo,
  ReportView,
  RunStatus,
  TranscriptView,
} from "../src/api.js";

export const INITIAL_SOURCE = 'print("v0")\nopen("manifest.json", "w")\n';
export const REWRITE_SOURCE = 'print("v1")\nopen("manifest.json", "w")\n';

export function transcriptFixture(): TranscriptView {
  return {
    outcome: "agreed",
    final_script: { source: REWRITE_SOURCE, revision: 1 },
    rounds: [
      {
        round_index: 1,
        critic_instance_id: "critic-1",
        input_script_digest: "d0",
        verdict: {
          decision: "reject",
          rationale: "print statement is wrong",
          script_digest: "d0",
          rewrite: { source: REWRITE_SOURCE, revision: 1 },
        },
        execution_error: null,
      },
      {
        round_index: 2,
        critic_instance_id: "critic-2",
        input_script_digest: "d1",
        verdict: {
          decision: "approve",
          rationale: "looks right",
          script_digest: "d1",
          rewrite: null,
        },
        execution_error: null,
      },
      {
        round_index: 3,
        critic_instance_id: "critic-3",
        input_script_digest: "d1",
        verdict: {
          decision: "approve",
          rationale: "still right",
          script_digest: "d1",
          rewrite: null,
        },
        execution_error: null,
      },
    ],
  };
}

export function doneStatusFixture(): RunStatus {
  const at = 1_700_000_000;
  const stages = ["interpreting", "acting", "debating", "executing", "analyzing", "done"];
  const transitions = stages.map((to, i) => ({
    from: i === 0 ? "created" : stages[i - 1]!,
    to,
    at,
  }));
  return {
    run_id: "r1",
    query: "How did budgets change?",
    query_id: "q1",
    stage: "done",
    timings: {
      interpreting: 0.1,
      acting: 0.2,
      debating: 1.5,
      executing: 0.4,
      analyzing: 0.3,
    },
    failure_reason: null,
    transitions,
    warnings: [],
  };
}

export function artifactsFixture(): ArtifactInfo[] {
  return [
    { name: "chart", kind: "image", byte_size: 68, digest: "aa", file: "chart.png" },
    { name: "result", kind: "table", byte_size: 40, digest: "bb", file: "result.csv" },
    { name: "manifest", kind: "manifest", byte_size: 90, digest: "cc", file: "manifest.json" },
  ];
}

export function reportFixture(): ReportView {
  return {
    narrative: "Budgets rise over time.",
    findings: [{ statement: "Budget doubles by 2001.", evidence_ref: "result" }],
    recommendations: ["Check later years."],
    generated_at: 1_700_000_000,
  };
}
