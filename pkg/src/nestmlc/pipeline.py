"""check -> transform -> generate, shared by the CLI and the golden tests."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from .codegen import GeneratedArtifact, generate
from .diagnostics import sort_diagnostics
from .semantics import check
from .syntax import pretty_print
from .transform import transform_files


@dataclass
class CompileResult:
    artifacts: list = field(default_factory=list)
    diagnostics: list = field(default_factory=list)
    reports: list = field(default_factory=list)
    files: list = field(default_factory=list)       # transformed model files

    @property
    def ok(self):
        return not any(d.is_error for d in self.diagnostics)


def neurons(files):
    return [d for f in files for d in f.declarations if not d.is_component]


def compile_files(files, module_name) -> CompileResult:
    """Check, transform and generate every neuron in ``files``.

    Artifacts are the generator's output followed by one
    ``<model>.solved.nestml`` per neuron.  Nothing is generated when any
    error diagnostic is raised; warnings are always returned.
    """
    _, diags = check(files)
    result = CompileResult(diagnostics=list(diags))
    if not result.ok:
        return result
    out, reports, errors = transform_files(files)
    result.reports = reports
    result.diagnostics = sort_diagnostics(
        result.diagnostics + [w for r in reports for w in r.warnings] + list(errors))
    if not result.ok:
        return result
    result.files = out
    models = neurons(out)
    result.artifacts = generate(models, module_name, out) + [
        GeneratedArtifact(f"{m.name}.solved.nestml", pretty_print(m), "inspectableModel")
        for m in models]
    return result


def write_artifacts(out_dir, module_name, artifacts):
    """Write under ``<out_dir>/<module_name>/`` with LF endings; returns the paths."""
    root = Path(out_dir) / module_name
    root.mkdir(parents=True, exist_ok=True)
    paths = []
    for a in artifacts:
        path = root / a.relative_path
        path.write_bytes(a.contents.encode("utf-8"))
        paths.append(path)
    return paths


__all__ = ["CompileResult", "compile_files", "write_artifacts", "neurons"]
