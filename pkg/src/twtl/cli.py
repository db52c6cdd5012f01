"""Command-line interface.

Subcommands: translate, monitor (alias: tr), synthesize, verify, learn,
casestudy.  Exit codes: 0 success/satisfied, 1 unsatisfied/violated/
no-policy, 2 usage or input errors.  ``--json`` switches the output to a
machine-readable record; all output orderings are deterministic.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

from . import __version__
from .automaton import DUMP_FORMAT_VERSION, Alphabet, dumps, to_dot
from .casestudies import RUNNERS
from .errors import NoPolicyError, TwtlError
from .formula import format_formula, normalize, parse, propositions
from .relaxation import Monitor, MonitorStatus
from .solve import learn_deadlines, misclassification, synthesize, verify
from .system import expand_graph, parse_graph
from .translate import translate

GRAMMAR_VERSION = 1


def _alphabet(args, formula):
    names = args.ap if args.ap else sorted(propositions(formula))
    return Alphabet(names)


def read_word(path: str, alphabet: Alphabet):
    """One symbol per line: comma-separated propositions, '-' for the empty
    symbol, '#' starts a comment."""
    word = []
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        word.append(alphabet.names(alphabet.parse_symbol(line)))
    return word


def load_system(args, formula):
    """Expand the environment file; the alphabet covers both the formula's
    and the environment's propositions unless --ap overrides it."""
    graph = parse_graph(Path(args.ts).read_text())
    if args.ap:
        alphabet = Alphabet(args.ap)
    else:
        names = set(propositions(formula))
        names.update(p for _, props in graph.nodes for p in props)
        alphabet = Alphabet(sorted(names))
    return expand_graph(graph, alphabet, stay=args.stay), alphabet


def _emit(args, record, human_lines):
    if args.json:
        print(json.dumps(record, indent=2, default=str))
    else:
        for line in human_lines:
            print(line)


def cmd_translate(args) -> int:
    formula = normalize(parse(args.formula, args.ap or None))
    alphabet = _alphabet(args, formula)
    started = time.perf_counter()
    dfa = translate(formula, alphabet, inf=args.inf)
    elapsed = time.perf_counter() - started
    if args.dot:
        Path(args.dot).write_text(to_dot(dfa))
    if args.dump:
        Path(args.dump).write_text(dumps(dfa))
    record = {
        "formula": format_formula(formula),
        "annotated": args.inf,
        "states": dfa.num_states(),
        "transitions": dfa.num_transitions(),
        "edges": dfa.num_edges(),
        "seconds": round(elapsed, 6),
    }
    _emit(
        args,
        record,
        [
            f"formula: {record['formula']}",
            f"states: {record['states']}",
            f"transitions: {record['transitions']} ({record['edges']} edges)",
            f"built in {elapsed * 1000:.2f} ms",
        ],
    )
    return 0


def cmd_monitor(args) -> int:
    formula = parse(args.formula, args.ap or None)
    alphabet = _alphabet(args, formula)
    monitor = Monitor(formula, alphabet)
    if not monitor.windows:
        _emit(
            args,
            {"primitive": True, "tau_star": "-inf"},
            ["primitive formula, tau* = -inf"],
        )
        return 0
    word = read_word(args.word, alphabet)
    status = monitor.feed(word)
    if status is MonitorStatus.VIOLATED:
        _emit(args, {"status": "violated"}, ["violated: no relaxation accepts"])
        return 1
    result = monitor.result()
    record = {
        "status": status.value,
        "satisfied": result.satisfied,
        "tau_star": result.tau_star,
        "tau": list(result.tau),
        "tight": list(result.tight),
    }
    _emit(
        args,
        record,
        [
            f"status: {status.value}",
            f"tau* = {result.tau_star}",
            "tau (post-order) = (" + ", ".join(str(t) for t in result.tau) + ")",
        ],
    )
    return 0 if result.satisfied else 1


def cmd_synthesize(args) -> int:
    formula = parse(args.formula, args.ap or None)
    ts, _ = load_system(args, formula)
    started = time.perf_counter()
    try:
        result = synthesize(ts, formula, exact=args.exact)
    except NoPolicyError as exc:
        _emit(args, {"status": "no-policy", "reason": str(exc)}, [f"no policy: {exc}"])
        return 1
    elapsed = time.perf_counter() - started
    record = {
        "trajectory": list(result.names),
        "word": [",".join(sorted(s)) if s else "-" for s in result.word],
        "tau_star": result.tau_star,
        "tau": list(result.relaxation.tau),
        "statistics": {
            "product_states": result.product_states,
            "product_transitions": result.product_transitions,
            "seconds": round(elapsed, 6),
        },
    }
    _emit(
        args,
        record,
        [
            "trajectory: " + " ".join(result.names),
            "word: " + " ".join(record["word"]),
            f"tau* = {result.tau_star}, tau = {tuple(result.relaxation.tau)}",
            f"product: {result.product_states} states / "
            f"{result.product_transitions} transitions, {elapsed:.3f}s",
        ],
    )
    return 0


def cmd_verify(args) -> int:
    formula = parse(args.formula, args.ap or None)
    ts, _ = load_system(args, formula)
    ok = verify(ts, formula)
    _emit(args, {"verified": ok}, [f"verified: {ok}"])
    return 0 if ok else 1


def _read_traces(directory: str, alphabet: Alphabet):
    paths = sorted(Path(directory).glob("*"))
    return [read_word(str(p), alphabet) for p in paths if p.is_file()]


def cmd_learn(args) -> int:
    template = parse(args.template, args.ap or None)
    alphabet = _alphabet(args, template)
    pos = _read_traces(args.pos, alphabet)
    neg = _read_traces(args.neg, alphabet)
    learned = learn_deadlines(pos, neg, template, alphabet)
    record = {"deadlines": list(learned)}
    _emit(args, record, ["deadlines: " + " ".join(str(d) for d in learned)])
    return 0


def cmd_casestudy(args) -> int:
    record = RUNNERS[args.name]()
    if args.json:
        print(json.dumps(record, indent=2, default=str))
        return 0
    print(f"case study: {args.name}")
    for key, value in record.items():
        if key == "trace":
            print("  trace:")
            for i, row in enumerate(value):
                label = "init" if i == 0 else str(i - 1)
                print(f"    {label:>4} state={row['state']} windows={row['windows']}")
        else:
            print(f"  {key}: {value}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="twtl",
        description="Bounded temporal logic with explicit time windows: "
        "automata, monitoring, synthesis, verification, learning.",
    )
    parser.add_argument(
        "--version",
        action="version",
        version=f"twtl {__version__} (grammar v{GRAMMAR_VERSION}, "
        f"dump format v{DUMP_FORMAT_VERSION})",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--ap", nargs="*", help="proposition alphabet (default: inferred)")
        p.add_argument("--json", action="store_true", help="machine-readable output")

    p = sub.add_parser("translate", help="compile a formula to an automaton")
    p.add_argument("formula")
    p.add_argument("--inf", action="store_true", help="annotated, deadline-free form")
    p.add_argument("--dot", help="write Graphviz output here")
    p.add_argument("--dump", help="write the plain-text automaton dump here")
    common(p)
    p.set_defaults(func=cmd_translate)

    for name in ("monitor", "tr"):
        p = sub.add_parser(name, help="tightest relaxation of a word")
        p.add_argument("--formula", required=True)
        p.add_argument("--word", required=True, help="word file, one symbol per line")
        common(p)
        p.set_defaults(func=cmd_monitor)

    p = sub.add_parser("synthesize", help="minimum-relaxation trajectory")
    p.add_argument("--ts", required=True, help="environment file")
    p.add_argument("--formula", required=True)
    p.add_argument("--exact", action="store_true", help="disable frontier pruning")
    p.add_argument("--stay", choices=("all", "none"), default="none",
                   help="add wait-in-place loops to every expanded state")
    common(p)
    p.set_defaults(func=cmd_synthesize)

    p = sub.add_parser("verify", help="do all runs satisfy some relaxation?")
    p.add_argument("--ts", required=True)
    p.add_argument("--formula", required=True)
    p.add_argument("--stay", choices=("all", "none"), default="none",
                   help="add wait-in-place loops to every expanded state")
    common(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("learn", help="fit window deadlines to labeled traces")
    p.add_argument("--pos", required=True, help="directory of positive trace files")
    p.add_argument("--neg", required=True, help="directory of negative trace files")
    p.add_argument("--template", required=True)
    p.add_argument("--jobs", type=int, default=1, help="accepted for compatibility")
    common(p)
    p.set_defaults(func=cmd_learn)

    p = sub.add_parser("casestudy", help="run a built-in scenario")
    p.add_argument("name", choices=sorted(RUNNERS))
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_casestudy)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except TwtlError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
