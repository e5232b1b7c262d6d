"""Command-line interface over the shared service layer.

Mirrors the HTTP API's effects command for command: both surfaces call the
same ``Workbench`` methods, so scripting against the CLI and automating
against the API can never diverge. Failures print ``error[<code>]: message``
on stderr and exit nonzero with the same stable code the API would return.

Environment:
    CARE_ROOT        workbench root directory (default ./care-root)
    CARE_BIND        serve bind address host:port (default 127.0.0.1:8756)
    CARE_TOKEN_FILE  token file for serve (created with defaults if absent)
    CARE_TRANSPORT   helper transport: stub | replay:<path> | record:<path>
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from ..domain import PhaseId, Role
from ..errors import CareError
from .http import create_app, load_token_file, write_default_token_file
from .service import Workbench, resolve_transport

DEFAULT_BIND = "127.0.0.1:8756"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="care",
        description="Stage-gated agent engineering workbench",
    )
    parser.add_argument(
        "--root",
        default=None,
        help="workbench root directory (default: $CARE_ROOT or ./care-root)",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_init = sub.add_parser("init", help="create a project")
    p_init.add_argument("--project", required=True, help="project id")
    p_init.add_argument("--name", default="", help="display name")
    p_init.add_argument("--merge-subphases", action="store_true")

    p_elicit = sub.add_parser("elicit", help="ask or answer elicitation questions")
    p_elicit.add_argument("--project", required=True)
    p_elicit.add_argument("--phase", required=True, choices=[p.value for p in PhaseId])
    p_elicit.add_argument("--session", default=None, help="existing session id")
    p_elicit.add_argument(
        "--answer", nargs=2, metavar=("ENTRY_ID", "TEXT"), default=None,
        help="answer one pending question",
    )
    p_elicit.add_argument("--role", default="sme", choices=["sme", "developer"])

    p_draft = sub.add_parser("draft", help="draft the phase artifact from a session")
    p_draft.add_argument("--project", required=True)
    p_draft.add_argument("--phase", required=True, choices=[p.value for p in PhaseId])
    p_draft.add_argument("--session", required=True)

    p_gate = sub.add_parser("gate", help="gate status and approvals")
    gate_sub = p_gate.add_subparsers(dest="gate_command", required=True)
    p_status = gate_sub.add_parser("status", help="show a phase gate")
    p_status.add_argument("--project", required=True)
    p_status.add_argument("--phase", default=None, choices=[p.value for p in PhaseId])
    p_approve = gate_sub.add_parser("approve", help="record an approval verdict")
    p_approve.add_argument("--project", required=True)
    p_approve.add_argument("--artifact", required=True)
    p_approve.add_argument("--version", type=int, required=True)
    p_approve.add_argument("--role", required=True, choices=[r.value for r in Role])
    p_approve.add_argument("--actor", default=None, help="defaults to the role name")
    p_approve.add_argument("--verdict", default="approve", choices=["approve", "reject"])
    p_approve.add_argument("--note", default="")

    p_advance = sub.add_parser("advance", help="advance past the current gate")
    p_advance.add_argument("--project", required=True)
    p_advance.add_argument("--idempotency-key", default=None)

    p_revisit = sub.add_parser("revisit", help="return to an earlier phase")
    p_revisit.add_argument("--project", required=True)
    p_revisit.add_argument("--to", required=True, choices=[p.value for p in PhaseId])
    p_revisit.add_argument("--idempotency-key", default=None)

    p_revision = sub.add_parser("revision", help="list or decide revision proposals")
    rev_sub = p_revision.add_subparsers(dest="revision_command", required=True)
    p_rev_list = rev_sub.add_parser("list")
    p_rev_list.add_argument("--project", required=True)
    p_rev_list.add_argument("--artifact", default=None)
    p_rev_decide = rev_sub.add_parser("decide")
    p_rev_decide.add_argument("--project", required=True)
    p_rev_decide.add_argument("--proposal", required=True)
    p_rev_decide.add_argument("--decision", required=True, choices=["accept", "reject"])

    p_bench = sub.add_parser("bench", help="benchmark generation, runs, and reports")
    bench_sub = p_bench.add_subparsers(dest="bench_command", required=True)

    p_gen = bench_sub.add_parser("generate", help="generate a synthetic benchmark")
    p_gen.add_argument("--corpus", required=True)
    p_gen.add_argument("--fixture", required=True, help="catalog fixture JSONL")
    p_gen.add_argument("--out", required=True)
    p_gen.add_argument("--name", default="synthetic")
    p_gen.add_argument("--max-attempts", type=int, default=5)
    p_gen.add_argument("--discard-log", default=None)

    p_run = bench_sub.add_parser("run", help="evaluate one agent over a benchmark")
    p_run.add_argument("--agent", required=True)
    p_run.add_argument("--benchmark", required=True)
    p_run.add_argument("--fixture", default=None, help="catalog fixture JSONL")
    p_run.add_argument("--cmr-cassette", default=None, help="recorded collection searches")
    p_run.add_argument("--cassette", default=None, help="model cassette to replay")
    p_run.add_argument("--record", default=None, help="record model exchanges to this cassette")
    p_run.add_argument("--run-id", default=None)
    p_run.add_argument("--project", default=None)
    p_run.add_argument("--out", default=None, help="also write the report JSON here")

    p_report = bench_sub.add_parser("report", help="print a run's report and table")
    p_report.add_argument("--run", required=True)

    p_two = bench_sub.add_parser("two-gate", help="apply the two-gate decision rule")
    p_two.add_argument("--care", required=True, help="synthetic-gate run id for the designed agent")
    p_two.add_argument("--base", required=True, help="synthetic-gate run id for the baseline")
    p_two.add_argument("--care-gold", default=None)
    p_two.add_argument("--base-gold", default=None)
    p_two.add_argument("--gold-k", type=int, default=5)

    p_serve = sub.add_parser("serve", help="run the HTTP API")
    p_serve.add_argument("--bind", default=None, help="host:port (default $CARE_BIND)")
    p_serve.add_argument("--token-file", default=None)
    p_serve.add_argument("--no-auth", action="store_true", help="disable auth (local dev)")

    return parser


def _workbench(args: argparse.Namespace) -> Workbench:
    root = args.root or os.environ.get("CARE_ROOT") or "./care-root"
    transport = resolve_transport(os.environ.get("CARE_TRANSPORT"), "helper")
    return Workbench(Path(root), helper_transport=transport)


def _emit(payload) -> None:
    print(json.dumps(payload, indent=2, ensure_ascii=False, sort_keys=True))


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _dispatch(args)
    except CareError as err:
        print(f"error[{err.code}]: {err.message}", file=sys.stderr)
        return 1
    except ValueError as err:
        print(f"error[invalid_request]: {err}", file=sys.stderr)
        return 1


def _dispatch(args: argparse.Namespace) -> int:
    workbench = _workbench(args)
    command = args.command

    if command == "init":
        _emit(workbench.create_project(
            project_id=args.project, name=args.name, merge_subphases=args.merge_subphases
        ))
        return 0

    if command == "elicit":
        if args.session is None:
            session = workbench.create_session(args.project, args.phase)
            session_id = session["session_id"]
        else:
            session_id = args.session
        if args.answer is not None:
            entry_id, text = args.answer
            workbench.answer_question(args.project, session_id, entry_id, text, args.role)
        _emit(workbench.next_questions(args.project, session_id))
        return 0

    if command == "draft":
        session = workbench.session(args.project, args.session)
        if session["phase"] != args.phase:
            raise ValueError(
                f"session {args.session} belongs to phase {session['phase']}, not {args.phase}"
            )
        result = workbench.draft(args.project, args.session)
        _emit(result)
        return 0

    if command == "gate":
        if args.gate_command == "status":
            _emit(workbench.gate_status(args.project, args.phase))
            return 0
        result = workbench.record_approval(
            args.project,
            args.artifact,
            args.version,
            args.role,
            args.actor or args.role,
            args.verdict,
            args.note,
        )
        _emit(result)
        return 0

    if command == "advance":
        _emit(workbench.advance(args.project, idempotency_key=args.idempotency_key))
        return 0

    if command == "revisit":
        _emit(workbench.revisit(args.project, args.to, idempotency_key=args.idempotency_key))
        return 0

    if command == "revision":
        if args.revision_command == "list":
            _emit(workbench.list_proposals(args.project, args.artifact))
            return 0
        _emit(workbench.decide_revision(args.project, args.proposal, args.decision))
        return 0

    if command == "bench":
        return _dispatch_bench(workbench, args)

    if command == "serve":
        return _serve(workbench, args)

    raise ValueError(f"unknown command {command!r}")


def _dispatch_bench(workbench: Workbench, args: argparse.Namespace) -> int:
    bench_command = args.bench_command
    if bench_command == "generate":
        _emit(workbench.bench_generate(
            corpus_path=args.corpus,
            catalog_path=args.fixture,
            out_path=args.out,
            name=args.name,
            max_attempts=args.max_attempts,
            discard_log_path=args.discard_log,
        ))
        return 0
    if bench_command == "run":
        transport_spec = None
        if args.cassette:
            transport_spec = f"replay:{args.cassette}"
        elif args.record:
            transport_spec = f"record:{args.record}"
        result = workbench.bench_run(
            agent=args.agent,
            benchmark_path=args.benchmark,
            catalog_path=args.fixture,
            cmr_cassette=args.cmr_cassette,
            transport_spec=transport_spec,
            run_id=args.run_id,
            project_id=args.project,
        )
        if args.out:
            Path(args.out).write_text(
                json.dumps(result["report"], indent=2, sort_keys=True) + "\n", encoding="utf-8"
            )
        _emit(result)
        return 0
    if bench_command == "report":
        result = workbench.run_report(args.run)
        _emit(result)
        return 0
    if bench_command == "two-gate":
        result = workbench.bench_two_gate(
            args.care, args.base, args.care_gold, args.base_gold, gold_primary_k=args.gold_k
        )
        print(result["table"])
        print(f"synthetic gate: {result['decision']['synthetic_outcome']}")
        gold = result["decision"]["gold_outcome"]
        if gold:
            verdict = "designed agent ahead" if gold["care_better"] else "baseline ahead"
            print(
                f"gold gate (Recall@{gold['primary_metric']}): "
                f"{gold['care_value']['value']:.3f} vs {gold['baseline_value']['value']:.3f} "
                f"({verdict})"
            )
        return 0
    raise ValueError(f"unknown bench command {bench_command!r}")


def _serve(workbench: Workbench, args: argparse.Namespace) -> int:
    import uvicorn

    bind = args.bind or os.environ.get("CARE_BIND") or DEFAULT_BIND
    host, _, port = bind.partition(":")
    tokens = None
    if not args.no_auth:
        token_path = Path(
            args.token_file
            or os.environ.get("CARE_TOKEN_FILE")
            or (workbench.root / "tokens.json" if workbench.root else "tokens.json")
        )
        if not token_path.exists():
            token_path.parent.mkdir(parents=True, exist_ok=True)
            write_default_token_file(token_path)
            print(f"wrote default token file to {token_path}", file=sys.stderr)
        tokens = load_token_file(token_path)
    app = create_app(workbench, tokens)
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port or 8756), log_level="warning")
    return 0


def entrypoint() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    entrypoint()
