"""Pipeline orchestration: the five-stage state machine and the run store.

A run is a directory: a digested JSON record, an append-only transition log,
numbered script revisions, the execution working directory with its
artifacts, and the final report.  Every stage persists its outputs before the
state machine moves on, so an interrupted engine always leaves a loadable run
at the last completed stage.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import statistics
import time
import uuid
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

from . import analysis as analysis_mod
from . import interpreter as interp_mod
from .actor import (
    DatasetRef,
    GeneratedScript,
    assemble_actor_prompt,
    generate_script,
    load_template,
)
from .backends import Backend, BackendRequest, Stage, default_params
from .critic_debate import (
    DebatePolicy,
    DebateTranscript,
    ExecutionOutcome,
    UnfixableInput,
    run_debate,
)
from .interpreter import ClassifierHead, Clue, ClueSet, Encoder
from .sandbox import Artifact, ExecLimits, ExecutionResult, ResultTable, collect_tables, execute

STAGE_ORDER = ("interpreting", "acting", "debating", "executing", "analyzing")
TERMINAL_STAGES = ("done", "failed")

_LEGAL_NEXT = {
    "created": {"interpreting", "failed"},
    "interpreting": {"acting", "failed"},
    "acting": {"debating", "failed"},
    "debating": {"executing", "failed"},
    "executing": {"analyzing", "failed"},
    "analyzing": {"done", "failed"},
}


class RunNotFound(KeyError):
    pass


class CorruptRecord(ValueError):
    pass


class IllegalTransition(ValueError):
    pass


class EmptyInput(ValueError):
    pass


@dataclass(frozen=True)
class TimingStats:
    module: str
    mean: float
    std: float
    n: int


@dataclass
class PipelineRun:
    run_id: str
    query: str
    query_id: str
    dataset: DatasetRef
    stage: str = "created"
    clue_set: Optional[ClueSet] = None
    scripts: list[GeneratedScript] = field(default_factory=list)
    transcript: Optional[DebateTranscript] = None
    execution: Optional[ExecutionResult] = None
    tables: list[ResultTable] = field(default_factory=list)
    report: Optional[analysis_mod.AnalysisReport] = None
    timings: dict[str, float] = field(default_factory=dict)
    failure_reason: Optional[str] = None
    warnings: list[str] = field(default_factory=list)


# --- serialization ---------------------------------------------------------


def run_to_dict(run: PipelineRun) -> dict:
    return {
        "run_id": run.run_id,
        "query": run.query,
        "query_id": run.query_id,
        "dataset": run.dataset.to_dict(),
        "stage": run.stage,
        "clue_set": (
            [dataclasses.asdict(c) for c in run.clue_set.clues]
            if run.clue_set is not None
            else None
        ),
        "scripts": [dataclasses.asdict(s) for s in run.scripts],
        "transcript": (
            dataclasses.asdict(run.transcript) if run.transcript is not None else None
        ),
        "execution": (
            dataclasses.asdict(run.execution) if run.execution is not None else None
        ),
        "tables": [dataclasses.asdict(t) for t in run.tables],
        "report": dataclasses.asdict(run.report) if run.report is not None else None,
        "timings": run.timings,
        "failure_reason": run.failure_reason,
        "warnings": run.warnings,
    }


def _script_from(d: dict) -> GeneratedScript:
    return GeneratedScript(
        source=d["source"],
        revision=d["revision"],
        produced_by=d["produced_by"],
        declared_outputs=tuple(d["declared_outputs"]),
    )


def run_from_dict(d: dict) -> PipelineRun:
    from .critic_debate import DebateRound, Verdict

    clue_set = None
    if d["clue_set"] is not None:
        clue_set = ClueSet(
            tuple(
                Clue(c["label"], c["source"], c["probability"]) for c in d["clue_set"]
            )
        )
    transcript = None
    if d["transcript"] is not None:
        t = d["transcript"]
        rounds = tuple(
            DebateRound(
                round_index=r["round_index"],
                critic_instance_id=r["critic_instance_id"],
                input_script_digest=r["input_script_digest"],
                verdict=Verdict(
                    decision=r["verdict"]["decision"],
                    rationale=r["verdict"]["rationale"],
                    script_digest=r["verdict"]["script_digest"],
                    rewrite=(
                        _script_from(r["verdict"]["rewrite"])
                        if r["verdict"]["rewrite"] is not None
                        else None
                    ),
                ),
                execution_error=r["execution_error"],
            )
            for r in t["rounds"]
        )
        transcript = DebateTranscript(rounds, t["outcome"], _script_from(t["final_script"]))
    execution = None
    if d["execution"] is not None:
        e = d["execution"]
        execution = ExecutionResult(
            exit_status=e["exit_status"],
            exit_code=e["exit_code"],
            stdout=e["stdout"],
            stderr=e["stderr"],
            duration=e["duration"],
            artifacts=tuple(Artifact(**a) for a in e["artifacts"]),
            stdout_truncated=e["stdout_truncated"],
            stderr_truncated=e["stderr_truncated"],
        )
    report = None
    if d["report"] is not None:
        r = d["report"]
        report = analysis_mod.AnalysisReport(
            narrative=r["narrative"],
            findings=tuple(
                analysis_mod.Finding(f["statement"], f["evidence_ref"])
                for f in r["findings"]
            ),
            recommendations=tuple(r["recommendations"]),
            generated_at=r["generated_at"],
            warnings=tuple(r["warnings"]),
        )
    return PipelineRun(
        run_id=d["run_id"],
        query=d["query"],
        query_id=d["query_id"],
        dataset=DatasetRef.from_dict(d["dataset"]),
        stage=d["stage"],
        clue_set=clue_set,
        scripts=[_script_from(s) for s in d["scripts"]],
        transcript=transcript,
        execution=execution,
        tables=[
            ResultTable(t["name"], tuple(t["columns"]), tuple(map(tuple, t["rows"])))
            for t in d["tables"]
        ],
        report=report,
        timings=dict(d["timings"]),
        failure_reason=d["failure_reason"],
        warnings=list(d["warnings"]),
    )


# --- run store -------------------------------------------------------------


def _canonical(payload: dict) -> str:
    return json.dumps(payload, sort_keys=True, separators=(",", ":"))


class RunStore:
    """Directory-per-run persistence with content digests.

    Layout: <root>/<run_id>/record.json, transitions.log, scripts/rev_N.py,
    transcript.json, report.json, execution/ (the sandbox working directory).
    """

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    def run_dir(self, run_id: str) -> Path:
        return self.root / run_id

    def execution_dir(self, run_id: str) -> Path:
        return self.run_dir(run_id) / "execution"

    def list_runs(self) -> list[str]:
        return sorted(p.name for p in self.root.iterdir() if p.is_dir())

    def save(self, run: PipelineRun) -> None:
        run_dir = self.run_dir(run.run_id)
        run_dir.mkdir(parents=True, exist_ok=True)
        payload = run_to_dict(run)
        record = {"payload": payload, "digest": hashlib.sha256(
            _canonical(payload).encode()
        ).hexdigest()}
        tmp = run_dir / "record.json.tmp"
        tmp.write_text(json.dumps(record, indent=2, sort_keys=True))
        tmp.replace(run_dir / "record.json")

        scripts_dir = run_dir / "scripts"
        scripts_dir.mkdir(exist_ok=True)
        for script in run.scripts:
            (scripts_dir / f"rev_{script.revision}.py").write_text(script.source)
        if run.transcript is not None:
            (run_dir / "transcript.json").write_text(
                json.dumps(payload["transcript"], indent=2, sort_keys=True)
            )
        if run.report is not None:
            (run_dir / "report.json").write_text(
                json.dumps(payload["report"], indent=2, sort_keys=True)
            )

    def load(self, run_id: str) -> PipelineRun:
        record_path = self.run_dir(run_id) / "record.json"
        if not record_path.is_file():
            raise RunNotFound(run_id)
        try:
            record = json.loads(record_path.read_text())
            payload, digest = record["payload"], record["digest"]
        except (json.JSONDecodeError, KeyError) as exc:
            raise CorruptRecord(f"run {run_id}: unreadable record") from exc
        actual = hashlib.sha256(_canonical(payload).encode()).hexdigest()
        if actual != digest:
            raise CorruptRecord(f"run {run_id}: digest mismatch")
        return run_from_dict(payload)

    def log_transition(self, run_id: str, src: str, dst: str, ts: float) -> None:
        if dst not in _LEGAL_NEXT.get(src, set()):
            raise IllegalTransition(f"{src} -> {dst}")
        line = json.dumps({"from": src, "to": dst, "ts": ts})
        with (self.run_dir(run_id) / "transitions.log").open("a") as fh:
            fh.write(line + "\n")

    def transitions(self, run_id: str) -> list[dict]:
        path = self.run_dir(run_id) / "transitions.log"
        if not path.is_file():
            return []
        return [json.loads(line) for line in path.read_text().splitlines() if line]


def replay_transitions(entries: list[dict]) -> None:
    """Validate a transition log; raises IllegalTransition on any bad pair."""
    state = "created"
    for entry in entries:
        if entry["from"] != state:
            raise IllegalTransition(
                f"log claims {entry['from']} -> {entry['to']} but state was {state}"
            )
        if entry["to"] not in _LEGAL_NEXT.get(state, set()):
            raise IllegalTransition(f"{state} -> {entry['to']}")
        state = entry["to"]


# --- pipeline --------------------------------------------------------------


class StageFailure(RuntimeError):
    def __init__(self, stage: str, cause: str):
        super().__init__(f"{stage}: {cause}")
        self.stage = stage
        self.cause = cause


def _interpret_stage(
    run: PipelineRun, backend: Backend, encoder: Encoder, head: ClassifierHead
) -> ClueSet:
    dataset_path = run.dataset.url_or_path
    if "://" not in dataset_path and not Path(dataset_path).exists():
        raise StageFailure("interpreting", f"dataset path not readable: {dataset_path}")

    def structured() -> list[tuple[str, float]]:
        probs = interp_mod.predict_probs(encoder.encode(run.query), head)
        return interp_mod.threshold_labels(probs, head)

    def creative() -> list[str]:
        columns = ", ".join(sorted(run.dataset.column_names()))
        prompt = load_template("interpreter_prompt.txt").format(
            query_id=run.query_id, query=run.query, column_list=columns
        )
        text = backend.complete(
            BackendRequest(
                Stage.INTERPRETER_CREATIVE,
                prompt,
                default_params(Stage.INTERPRETER_CREATIVE),
            )
        )
        return interp_mod.extract_creative_clues(text)

    # The two interpreter sub-calls are independent; run them concurrently.
    with ThreadPoolExecutor(max_workers=2) as pool:
        structured_f = pool.submit(structured)
        creative_f = pool.submit(creative)
        return interp_mod.merge_clue_sets(structured_f.result(), creative_f.result())


def run_pipeline(
    query: str,
    dataset: DatasetRef,
    *,
    backend: Backend,
    encoder: Encoder,
    head: ClassifierHead,
    store: RunStore,
    policy: DebatePolicy = DebatePolicy(),
    limits: ExecLimits = ExecLimits(),
    runner: Optional[list[str]] = None,
    run_id: Optional[str] = None,
    query_id: Optional[str] = None,
    clock: Callable[[], float] = time.time,
    stage_hook: Optional[Callable[[str], None]] = None,
) -> PipelineRun:
    """Drive one query through interpret -> act -> debate -> execute -> analyze.

    `stage_hook`, when given, is invoked after each stage is persisted; it is
    a test seam for simulated crashes and its exceptions propagate raw.
    """
    run = PipelineRun(
        run_id=run_id or uuid.uuid4().hex[:12],
        query=query,
        query_id=query_id or (run_id or query[:24]),
        dataset=dataset,
    )
    store.save(run)

    def enter(stage: str) -> float:
        store.log_transition(run.run_id, run.stage, stage, clock())
        run.stage = stage
        return time.monotonic()

    def finish(stage: str, started: float) -> None:
        run.timings[stage] = time.monotonic() - started
        store.save(run)
        if stage_hook is not None:
            stage_hook(stage)

    def fail(stage: str, reason: str) -> PipelineRun:
        store.log_transition(run.run_id, run.stage, "failed", clock())
        run.stage = "failed"
        run.failure_reason = f"{stage}: {reason}"
        store.save(run)
        return run

    # interpreting
    started = enter("interpreting")
    try:
        run.clue_set = _interpret_stage(run, backend, encoder, head)
    except StageFailure as exc:
        return fail("interpreting", exc.cause)
    except Exception as exc:
        return fail("interpreting", str(exc))
    finish("interpreting", started)

    # acting
    started = enter("acting")
    try:
        prompt = assemble_actor_prompt(query, dataset, run.clue_set, run.query_id)
        script = generate_script(prompt, backend)
        run.scripts.append(script)
    except Exception as exc:
        return fail("acting", str(exc))
    finish("acting", started)

    # debating
    started = enter("debating")
    exec_counter = [0]

    def debate_executor(candidate: GeneratedScript) -> ExecutionOutcome:
        exec_counter[0] += 1
        workdir = store.run_dir(run.run_id) / "debate" / f"exec_{exec_counter[0]}"
        result = execute(candidate, dataset, workdir, limits, runner=runner)
        return ExecutionOutcome(result.success, None if result.success else result.error_summary())

    try:
        transcript = run_debate(
            run.scripts[0], query, dataset, policy, backend, debate_executor,
            query_id=run.query_id,
        )
    except UnfixableInput as exc:
        run.transcript = exc.transcript
        return fail("debating", f"unfixable input: {exc.rationale}")
    except Exception as exc:
        return fail("debating", str(exc))
    run.transcript = transcript
    for rnd in transcript.rounds:
        if rnd.verdict.rewrite is not None and rnd.verdict.rewrite not in run.scripts:
            run.scripts.append(rnd.verdict.rewrite)
    if transcript.outcome != "agreed":
        run.timings["debating"] = time.monotonic() - started
        return fail("debating", f"DebateExhausted after {len(transcript.rounds)} rounds")
    finish("debating", started)

    # executing
    started = enter("executing")
    try:
        result = execute(
            transcript.final_script, dataset, store.execution_dir(run.run_id),
            limits, runner=runner,
        )
        run.execution = result
        if not result.success:
            return fail("executing", result.error_summary())
        run.tables = collect_tables(result, store.execution_dir(run.run_id))
    except Exception as exc:
        return fail("executing", str(exc))
    finish("executing", started)

    # analyzing
    started = enter("analyzing")
    try:
        artifact_names = [a.name for a in run.execution.artifacts if a.kind == "image"]
        prompt = analysis_mod.assemble_analysis_prompt(
            query, run.tables, artifact_names, run.query_id
        )
        run.report = analysis_mod.analyze(
            prompt, backend, run.tables, artifact_names, generated_at=clock()
        )
        run.warnings.extend(run.report.warnings)
    except Exception as exc:
        return fail("analyzing", str(exc))
    finish("analyzing", started)

    store.log_transition(run.run_id, run.stage, "done", clock())
    run.stage = "done"
    store.save(run)
    return run


def aggregate_timings(runs: list[PipelineRun], module: str) -> TimingStats:
    """Mean and sample standard deviation of one stage's durations."""
    durations = [r.timings[module] for r in runs if module in r.timings]
    if not durations:
        raise EmptyInput(f"no run entered stage {module!r}")
    mean = statistics.fmean(durations)
    std = statistics.stdev(durations) if len(durations) > 1 else 0.0
    return TimingStats(module=module, mean=mean, std=std, n=len(durations))
