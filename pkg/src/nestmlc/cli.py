"""Command-line frontend: parse, check, generate and simulate model files."""

from __future__ import annotations

import argparse
import os
import shutil
import sys
import tempfile
from pathlib import Path

from .diagnostics import ParseError, error, sort_diagnostics
from .pipeline import compile_files, neurons, write_artifacts
from .semantics import check
from .syntax import parse_file, pretty_print
from .transform import transform_files

EXIT_OK = 0
EXIT_SYNTAX = 1
EXIT_SEMANTIC = 2
EXIT_INEXACT = 3
EXIT_RUNTIME = 4
EXIT_USAGE = 64

MODES = {"parse": "parse", "check": "check", "contextConditions": "check",
         "generate": "generate", "simulate": "simulate"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser():
    p = _Parser(prog="nestmlc", description=__doc__)
    p.add_argument("mode", help="parse | check (alias contextConditions) | generate | simulate")
    p.add_argument("files", nargs="*", type=Path, help="model files, one compilation unit")
    p.add_argument("--out", type=Path, help="output directory")
    p.add_argument("--module", default="nestml_module", help="module name for generated code")
    p.add_argument("--neuron", help="neuron to simulate")
    p.add_argument("--duration", type=float, default=100.0, metavar="MS")
    p.add_argument("--resolution", type=float, default=0.1, metavar="MS")
    p.add_argument("--stimulus", type=Path, metavar="FILE", help="stimulus JSON document")
    p.add_argument("--probe", action="append", metavar="NAME", help="recorded variable")
    p.add_argument("--set", action="append", default=[], metavar="PARAM=VALUE",
                   dest="overrides", help="override a parameter (declared units)")
    p.add_argument("--trace", type=Path, metavar="FILE",
                   help="trace CSV path (default <out>/<neuron>.csv)")
    p.add_argument("--check-guards", action="store_true", help="check state guards every step")
    p.add_argument("--require-exact", action="store_true",
                   help="fail instead of falling back to numeric integration")
    p.add_argument("--plot", action="store_true", help="also write a PNG next to the trace")
    return p


def _overrides(items):
    out = {}
    for item in items:
        name, sep, value = item.partition("=")
        try:
            if not sep or not name.strip():
                raise ValueError
            out[name.strip()] = float(value)
        except ValueError:
            raise UsageError(f"--set expects PARAM=NUMBER, got {item!r}") from None
    return out


def _report(diags, stream):
    for d in sort_diagnostics(diags):
        print(d.render(), file=stream)


def _parse_all(paths, stream):
    """Parse every file; (files, exit code) where the code is nonzero on syntax errors."""
    files, diags = [], []
    for path in paths:
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise UsageError(f"cannot read {path}: {exc.strerror}") from None
        try:
            files.append(parse_file(text, str(path)))
        except ParseError as exc:
            diags += exc.diagnostics()
    _report(diags, stream)
    return files, (EXIT_SYNTAX if diags else EXIT_OK)


def _check_all(files, stream):
    _, diags = check(files)
    _report(diags, stream)
    return EXIT_SEMANTIC if any(d.is_error for d in diags) else EXIT_OK


def _inexact(reports, require_exact):
    """Diagnostics forcing exit 3: unsupported ODE blocks, and fallbacks under --require-exact."""
    out = [e for r in reports for e in r.errors if e.code == "E0502"]
    if require_exact:
        out += [error("E0503", f"{r.model}: exact integration required but the solver fell "
                               "back to numeric integration", *r.replaced_spans[:1])
                for r in reports if r.mode == "numeric" and not r.errors]
    return out


def _replace_dir(staged: Path, final: Path):
    """Move ``staged`` to ``final``, replacing an existing directory as one rename."""
    backup = None
    if final.exists():
        backup = final.with_name(f".{final.name}.old-{os.getpid()}")
        final.rename(backup)
    try:
        staged.rename(final)
    except OSError:
        if backup is not None:
            backup.rename(final)
        raise
    if backup is not None:
        shutil.rmtree(backup, ignore_errors=True)


def _generate(files, args, stream):
    if args.out is None:
        raise UsageError("generate requires --out")
    result = compile_files(files, args.module)
    inexact = _inexact(result.reports, args.require_exact)
    _report(result.diagnostics + [d for d in inexact if d.code != "E0502"], stream)
    if inexact:
        return EXIT_INEXACT
    if not result.ok:
        return EXIT_SEMANTIC
    args.out.mkdir(parents=True, exist_ok=True)
    with tempfile.TemporaryDirectory(dir=args.out, prefix=".nestmlc-") as tmp:
        write_artifacts(tmp, args.module, result.artifacts)
        _replace_dir(Path(tmp) / args.module, args.out / args.module)
    return EXIT_OK


def _select(models, name):
    if name is not None:
        for m in models:
            if m.name == name:
                return m
        raise UsageError(f"no neuron named '{name}'")
    if len(models) != 1:
        raise UsageError("simulate needs exactly one neuron; choose one with --neuron")
    return models[0]


def _simulate(files, args, stream):
    from .runtime import (SimulationConfig, SimulationError, StimulusError, StimulusProgram,
                          run)
    from .runtime.engine import Program

    overrides = _overrides(args.overrides)
    original = _select(neurons(files), args.neuron)
    if args.duration <= 0 or args.resolution <= 0:
        raise UsageError("--duration and --resolution must be positive")
    code = _check_all(files, stream)
    if code:
        return code
    out_files, reports, errors = transform_files(files)
    reports = [r for r in reports if r.model == original.name]
    inexact = _inexact(reports, args.require_exact)
    warnings = [w for r in reports for w in r.warnings]
    _report(warnings + list(errors) + [d for d in inexact if d.code != "E0502"], stream)
    if inexact:
        return EXIT_INEXACT
    if errors:
        return EXIT_SEMANTIC
    model = _select(neurons(out_files), original.name)

    out_dir = args.out or Path(".")
    trace_path = args.trace or out_dir / f"{model.name}.csv"
    try:
        stimulus = StimulusProgram.load(args.stimulus) if args.stimulus else StimulusProgram()
        config = SimulationConfig(resolution_ms=args.resolution, duration_ms=args.duration,
                                  guard_checks=args.check_guards, overrides=overrides)
        trace = run(model, config, stimulus, args.probe,
                    program=Program(model, out_files))
    except (SimulationError, StimulusError) as exc:
        span = getattr(exc, "span", None)
        where = f"{span}: " if span is not None else ""
        print(f"{where}error: {getattr(exc, 'message', exc)}", file=stream)
        return EXIT_RUNTIME
    except OSError as exc:
        print(f"error: cannot read stimulus {args.stimulus}: {exc.strerror}", file=stream)
        return EXIT_RUNTIME
    for note in trace.notes:
        print(f"note: {note}", file=stream)

    trace_path.parent.mkdir(parents=True, exist_ok=True)
    trace.write_csv(trace_path)
    solved = trace_path.with_name(f"{model.name}.solved.nestml")
    solved.write_bytes(pretty_print(model).encode("utf-8"))
    if args.plot:
        from .report import plot_trace
        plot_trace(trace, trace_path.with_suffix(".png"), title=model.name)
    return EXIT_OK


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    stream = sys.stderr
    try:
        args = build_parser().parse_args(argv)
        mode = MODES.get(args.mode)
        if mode is None:
            raise UsageError(f"unknown mode '{args.mode}'")
        if not args.files:
            raise UsageError("no input files")
        files, code = _parse_all(args.files, stream)
        if code or mode == "parse":
            return code
        if mode == "check":
            return _check_all(files, stream)
        if mode == "generate":
            return _generate(files, args, stream)
        return _simulate(files, args, stream)
    except SystemExit as exc:          # --help
        return exc.code or EXIT_OK
    except UsageError as exc:
        print(f"nestmlc: {exc}", file=stream)
        print("usage: nestmlc <mode> [files...] [options]; see nestmlc --help", file=stream)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
