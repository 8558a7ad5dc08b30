"""C++ source generation for transformed models."""

from __future__ import annotations

from dataclasses import dataclass
from string import Template

from .. import __version__
from ..semantics import build_symbol_table
from ..semantics.symbols import LOCAL, Symbol
from ..syntax import ast, print_expression
from ..transform import imports_for
from .emitter import INDENT, SHIM, CodegenError, ExpressionLowering, StatementLowering, cpp_type


@dataclass(frozen=True)
class GeneratedArtifact:
    relative_path: str
    contents: str
    kind: str       # header | implementation | moduleBootstrap | buildScript | inspectableModel


HEADER = Template("""\
// ${name}.h: generated by nestmlc ${version} from model ${name}. Do not edit.
//
// Besides the members declared below, generated code only uses these
// runtime shim identifiers, defined in ${module}module.cpp:
//   ${shim}
#ifndef ${guard}
#define ${guard}

#include <cmath>
#include <map>
#include <string>

#ifndef NESTML_SHIM_API
#define NESTML_SHIM_API
struct nestml_RingBuffer {
  void add_value(long lag, double value);
  double get_value(long lag);
  void clear();
  std::map<long, double> pending;
};
struct nestml_BadParameter {
  explicit nestml_BadParameter(const char* name);
};
extern const double nestml_E;
double nestml_resolution();
long nestml_steps(double duration_ms);
double nestml_time(long origin, long lag);
void nestml_send_spike(void* model, long lag);
void nestml_log_info(const std::string& message);
#endif
${components}
class ${name} {
 public:
  ${name}();
  void calibrate();
  void update(long origin, long from, long to);
  void handle(const std::string& port, long lag, double value);
  void init_buffers();

  // status dictionary access by variable name
  void get_status(std::map<std::string, double>& d) const;
  void set_status(const std::map<std::string, double>& d);
  static const char* const recordables[];
  static const long n_recordables;

  // parameters, state and internals
${accessors}
${functions}
 private:
  struct Parameters_ {
${parameters}
  } P_;

  struct State_ {
${state}
  } S_;

  struct Variables_ {
${internals}
  } V_;

  struct Buffers_ {
${buffers}
  } B_;
${uses}};

#endif  // ${guard}
""")

IMPLEMENTATION = Template("""\
// ${name}.cpp: generated by nestmlc ${version} from model ${name}. Do not edit.
#include "${name}.h"

${name}::${name}() {
${defaults}
  calibrate();
}

void ${name}::calibrate() {
${calibrate}
}

void ${name}::init_buffers() {
${init_buffers}
}

const char* const ${name}::recordables[] = {
${recordables}
};

const long ${name}::n_recordables = ${n_recordables};

void ${name}::get_status(std::map<std::string, double>& d) const {
${get_status}
}

void ${name}::set_status(const std::map<std::string, double>& d) {
${set_status}
}

void ${name}::handle(const std::string& port, long lag, double value) {
${handle}
}

void ${name}::update(long origin, long from, long to) {
${update}
}
${functions}""")

MODULE = Template("""\
// ${module}module.cpp: generated by nestmlc ${version}. Do not edit.
//
// Registers the module's models and defines the runtime shim they use.
${includes}
#include <iostream>

namespace {
double nestml_h = 0.1;
}

const double nestml_E = 2.718281828459045;

void nestml_RingBuffer::add_value(long lag, double value) { pending[lag] += value; }

double nestml_RingBuffer::get_value(long lag) {
  const double value = pending[lag];
  pending.erase(lag);
  return value;
}

void nestml_RingBuffer::clear() { pending.clear(); }

nestml_BadParameter::nestml_BadParameter(const char* name) {
  std::cerr << "invalid value for " << name << std::endl;
}

double nestml_resolution() { return nestml_h; }

long nestml_steps(double duration_ms) { return static_cast<long>(duration_ms / nestml_h + 0.5); }

double nestml_time(long origin, long lag) { return (origin + lag) * nestml_h; }

void nestml_send_spike(void* model, long lag) {
  std::cout << "spike from " << model << " at lag " << lag << std::endl;
}

void nestml_log_info(const std::string& message) { std::clog << message << std::endl; }

template <typename Model>
void nestml_register_model(const char* name) {
  std::clog << "registering " << name << std::endl;
}

void ${module}_init() {
${registrations}
}
""")

BUILD = Template("""\
#!/bin/sh
# bootstrap.sh.in: generated by nestmlc ${version} for module ${module}.
# Configure-time stub; @CXX@ and @NEST_INCLUDE@ are substituted by the host build.
set -e
CXX="@CXX@"
SOURCES="${sources}"
$${CXX} -std=c++17 -shared -fPIC -I@NEST_INCLUDE@ -o lib${module}.so $${SOURCES}
echo "built ${module} with models: ${models}"
""")


def _lines(items, depth=2):
    return "\n".join(INDENT * depth + item for item in items)


class _ModelEmitter:
    def __init__(self, model, table, module):
        self.model = model
        self.table = table
        self.module = module
        self.scope = table.scope_of(model.name)
        prefixes = {u.local_name: f"{u.local_name}_" for u in model.uses}
        self.exprs = ExpressionLowering(prefixes)
        self.stmts = StatementLowering(self.exprs)

    # -- declarations ---------------------------------------------------------

    def fields(self, decls):
        out = []
        for d in decls:
            if d.is_alias:
                continue
            for n in d.names:
                out.append(f"{cpp_type(d.type)} {n};")
        return _lines(out) or INDENT * 2 + "// none"

    def initial(self, decls, record, lines, annotate=False):
        for d in decls:
            if d.is_alias:
                continue
            if annotate and d.initializer is not None:
                lines.append(f"{INDENT}// {', '.join(d.names)} {d.type} = "
                             f"{print_expression(d.initializer)}")
            for n in d.names:
                value = "0" if d.initializer is None else \
                    self.exprs.typed(d.initializer, self.scope, d.type)
                if d.initializer is None and cpp_type(d.type) == "bool":
                    value = "false"
                lines.append(f"{INDENT}{record}.{n} = {value};")

    def accessors(self):
        out = []
        for block, record in (("parameter", "P_"), ("state", "S_"), ("internal", "V_")):
            for d in getattr(self.model, block):
                for n in d.names:
                    ctype = cpp_type(d.type)
                    if d.is_alias:
                        value = self.exprs.typed(d.initializer, self.scope, d.type)
                        out.append(f"{ctype} get_{n}() const {{ return {value}; }}")
                        continue
                    out.append(f"{ctype} get_{n}() const {{ return {record}.{n}; }}")
                    if block == "internal":
                        continue
                    out.append(f"void set_{n}({ctype} value) {{")
                    if d.guard is not None:
                        out.append(f"{INDENT}const {ctype} previous = {record}.{n};")
                    out.append(f"{INDENT}{record}.{n} = value;")
                    if d.guard is not None:
                        guard = self.exprs.typed(d.guard, self.scope)
                        out.append(f"{INDENT}if (!{guard}) {{")
                        out.append(f"{INDENT * 2}{record}.{n} = previous;")
                        out.append(f'{INDENT * 2}throw nestml_BadParameter("{n}");')
                        out.append(f"{INDENT}}}")
                    if block == "parameter":
                        out.append(f"{INDENT}calibrate();")
                    out.append("}")
        return _lines(out, 1)

    def _numeric(self, decls):
        for d in decls:
            if cpp_type(d.type) in ("double", "long", "bool"):
                yield from ((n, d) for n in d.names)

    def recordable_names(self):
        return [n for n, _ in self._numeric(self.model.state)]

    def get_status(self):
        out = [f'd["{n}"] = get_{n}();'
               for n, _ in self._numeric(self.model.parameter + self.model.state)]
        return _lines(out, 1) or INDENT + "// nothing to report"

    def set_status(self):
        out = []
        for n, d in self._numeric(self.model.parameter + self.model.state):
            if d.is_alias and not self._writable(n):
                continue
            ctype = cpp_type(d.type)
            value = f'd.at("{n}")' if ctype == "double" else \
                f'static_cast<{ctype}>(d.at("{n}"))'
            out.append(f'if (d.count("{n}")) {{')
            out.append(f"{INDENT}set_{n}({value});")
            out.append("}")
        return _lines(out, 1) or INDENT + "// nothing to set"

    def _writable(self, name):
        sym = self.scope.lookup(name)
        return sym is not None and sym.writable

    # -- functions ----------------------------------------------------------------

    def function_scope(self, fn, parent):
        scope = parent.child(fn, "function")
        for p in fn.params:
            scope.define(Symbol(p.name, LOCAL, p.type, p.span, True, p))
        return scope

    def signature(self, fn, owner=None):
        params = ", ".join(f"{cpp_type(p.type)} {p.name}" for p in fn.params)
        name = f"{owner}::{fn.name}" if owner else fn.name
        return f"{cpp_type(fn.return_type)} {name}({params})"

    def function_body(self, fn, parent, exprs=None, depth=1):
        lines = []
        stmts = StatementLowering(exprs) if exprs else self.stmts
        stmts.body(fn.body, self.function_scope(fn, parent), depth, lines)
        return lines

    def component_struct(self, use):
        comp = self.table.global_scope.lookup(use.component).node
        cscope = self.table.scope_of(comp.name)
        exprs = ExpressionLowering(member="bare")
        guard = f"NESTML_COMPONENT_{comp.name.upper()}"
        lines = [f"#ifndef {guard}", f"#define {guard}", f"struct {comp.name} {{"]
        decls = comp.parameter + comp.state + comp.internal
        for d in decls:
            if not d.is_alias:
                for n in d.names:
                    lines.append(f"{INDENT}{cpp_type(d.type)} {n};")
        lines.append(f"{INDENT}{comp.name}() {{")
        for d in decls:
            if d.is_alias:
                continue
            for n in d.names:
                value = "0" if d.initializer is None else \
                    exprs.typed(d.initializer, cscope, d.type)
                lines.append(f"{INDENT * 2}{n} = {value};")
        lines.append(f"{INDENT}}}")
        for fn in comp.functions:
            lines.append(f"{INDENT}inline {self.signature(fn)} {{")
            lines += self.function_body(fn, cscope, exprs, 2)
            lines.append(f"{INDENT}}}")
        lines += ["};", f"#endif  // {guard}", ""]
        return "\n".join(lines)

    # -- dynamics -------------------------------------------------------------------

    def update_body(self):
        lines = []
        for dyn in self.model.dynamics:
            scope = self.scope.child(dyn, "dynamics")
            if dyn.kind == "minDelay":
                lines.append(f"{INDENT}// cadence guard: minDelay dynamics run once per "
                             "min-delay interval")
                lines.append(f"{INDENT}if (from == 0) {{")
                depth = 2
            else:
                lines.append(f"{INDENT}for (long lag = from; lag < to; ++lag) {{")
                depth = 2
            for p in dyn.params:
                scope.define(Symbol(p.name, LOCAL, p.type, p.span, True, p))
                lines.append(f"{INDENT * depth}[[maybe_unused]] const double {p.name} = nestml_time(origin, "
                             f"{'lag' if dyn.kind != 'minDelay' else 'from'});")
            if dyn.kind == "minDelay":
                lines.append(f"{INDENT * depth}const long lag = from;")
            self.stmts.body(dyn.body, scope, depth, lines)
            lines.append(f"{INDENT}}}")
        return "\n".join(lines) or INDENT + "// no dynamics"

    def handle_body(self):
        lines = []
        for line in self.model.input:
            lines.append(f'{INDENT}if (port == "{line.name}") {{')
            lines.append(f"{INDENT * 2}B_.{line.name}.add_value(lag, value);")
            lines.append(f"{INDENT * 2}return;")
            lines.append(f"{INDENT}}}")
        lines.append(f'{INDENT}throw nestml_BadParameter(port.c_str());')
        return "\n".join(lines)

    # -- files -------------------------------------------------------------------------

    def header(self):
        m = self.model
        functions = [f"{INDENT}{self.signature(fn)};" for fn in m.functions]
        buffers = [f"nestml_RingBuffer {line.name};" for line in m.input]
        uses = "".join(f"\n  {u.component} {u.local_name}_;\n" for u in m.uses)
        return HEADER.substitute(
            name=m.name, version=__version__, module=self.module,
            shim=", ".join(SHIM), guard=f"NESTML_{m.name.upper()}_H",
            components="".join("\n" + self.component_struct(u) for u in m.uses),
            accessors=self.accessors(),
            functions="\n".join(["  // model functions"] + functions) + "\n" if functions else "",
            parameters=self.fields(m.parameter), state=self.fields(m.state),
            internals=self.fields(m.internal),
            buffers=_lines(buffers) or INDENT * 2 + "// none", uses=uses)

    def implementation(self):
        m = self.model
        defaults = []
        self.initial(m.parameter, "P_", defaults)
        self.initial(m.state, "S_", defaults)
        calibrate = []
        self.initial(m.internal, "V_", calibrate, annotate=True)
        functions = []
        for fn in m.functions:
            functions.append("")
            functions.append(self.signature(fn, m.name) + " {")
            functions += self.function_body(fn, self.scope)
            functions.append("}")
        return IMPLEMENTATION.substitute(
            name=m.name, version=__version__,
            defaults="\n".join(defaults) or INDENT + "// no parameters or state",
            calibrate="\n".join(calibrate) or INDENT + "// no internals",
            handle=self.handle_body(), update=self.update_body(),
            init_buffers=_lines([f"B_.{line.name}.clear();" for line in m.input], 1)
            or INDENT + "// no input buffers",
            recordables=_lines([f'"{n}",' for n in self.recordable_names()], 1)
            or INDENT + '"",',
            n_recordables=len(self.recordable_names()),
            get_status=self.get_status(), set_status=self.set_status(),
            functions="\n".join(functions) + ("\n" if functions else ""))


def generate(models, module_name, files=None):
    """Artifacts for ``models`` (transformed neuron declarations).

    ``files`` supplies components the models use.  Output order: per model
    header then implementation, then the module file and the build script.
    """
    for m in models:
        for dyn in m.dynamics:
            if any(isinstance(s, ast.OdeBlock) for s in dyn.body):
                raise CodegenError(f"model '{m.name}' still contains an ODE block")
    imports = tuple(dict.fromkeys(i for m in models for i in imports_for(m, files)))
    own = ast.ModelFile(imports, tuple(models))
    others = [f for f in (files or []) if not set(f.declarations) & set(models)]
    table = build_symbol_table([own] + others)
    artifacts = []
    for m in models:
        emitter = _ModelEmitter(m, table, module_name)
        artifacts.append(GeneratedArtifact(f"{m.name}.h", emitter.header(), "header"))
        artifacts.append(GeneratedArtifact(f"{m.name}.cpp", emitter.implementation(),
                                           "implementation"))
    names = [m.name for m in models]
    artifacts.append(GeneratedArtifact(
        f"{module_name}module.cpp",
        MODULE.substitute(module=module_name, version=__version__,
                          includes="\n".join(f'#include "{n}.h"' for n in names),
                          registrations="\n".join(f'{INDENT}nestml_register_model<{n}>("{n}");'
                                                  for n in names) or INDENT + "// no models"),
        "moduleBootstrap"))
    artifacts.append(GeneratedArtifact(
        "bootstrap.sh.in",
        BUILD.substitute(module=module_name, version=__version__,
                         sources=" ".join([f"{n}.cpp" for n in names]
                                          + [f"{module_name}module.cpp"]),
                         models=" ".join(names) or "(none)"),
        "buildScript"))
    return artifacts


def _code_lines(text, kind):
    count = 0
    in_block = False
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        if kind in ("model", "inspectableModel", "buildScript"):
            if line.startswith("#") and not line.startswith("#!"):
                continue
            if line.startswith("#!"):
                continue
        else:
            if in_block:
                in_block = "*/" not in line
                continue
            if line.startswith("//"):
                continue
            if line.startswith("/*"):
                in_block = "*/" not in line
                continue
        count += 1
    return count


def loc_report(model_source, artifacts):
    """``(model_loc, generated_loc, ratio)`` over non-blank, non-comment lines."""
    model_loc = _code_lines(model_source, "model")
    generated = sum(_code_lines(a.contents, a.kind) for a in artifacts)
    ratio = generated / model_loc if model_loc else float("inf")
    return model_loc, generated, ratio


__all__ = ["GeneratedArtifact", "generate", "loc_report", "CodegenError"]
