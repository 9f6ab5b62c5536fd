"""SystemVerilog checker and coverage text generation.

One generator class per recognized structure: ndff_sync_check,
pulse_sync_check, mux_sync_check, async_fifo_check, clock_gate_check,
signal_config_check, and the coverage model.  Output is deterministic:
fixed iteration order, no timestamps, a version-only header.

Generated assertions stay inside a small fixed template vocabulary —
property/endproperty, assert property, $stable/$rose/$past, disable iff,
and plain boolean/bit expressions — which the in-repo interpreter
(`sva_interp`) can execute against simulation traces.  Every property
carries a `// checker:` comment naming the runtime checker it mirrors, and
each assertion's trigger condition matches that checker's sampled
semantics exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import __version__
from .errors import NameCollision, UnresolvedSignal
from .netlist import Netlist
from .rules import Analysis

HEADER = f"// generated-by: cdckit {__version__}"


@dataclass(frozen=True)
class GeneratedFile:
    path: str
    text: str
    generator: str
    sources: tuple[str, ...]


def _sanitize(name: str) -> str:
    return name.replace(".", "__")


def _resolve(netlist: Netlist, name: str) -> str:
    if name not in netlist.net_index:
        raise UnresolvedSignal(f"generated code references unknown signal {name!r}")
    return name


def _width_decl(width: int) -> str:
    return f" [{width - 1}:0]" if width > 1 else ""


class _Module:
    def __init__(self, name: str, generator: str, sources: tuple[str, ...]):
        self.name = name
        self.generator = generator
        self.sources = sources
        self.ports: list[tuple[str, int]] = []
        self.bind_map: list[tuple[str, str]] = []   # (port, netlist signal)
        self.body: list[str] = []

    def port(self, name: str, net: str, width: int = 1) -> str:
        self.ports.append((name, width))
        self.bind_map.append((name, net))
        return name

    def prop(self, name: str, clock: str, disable: str | None,
             expr: str, mirrors: str):
        self.body.append(f"  // checker: {mirrors}")
        self.body.append(f"  property {name};")
        head = f"    @(posedge {clock})"
        if disable:
            head += f" disable iff ({disable})"
        self.body.append(head)
        self.body.append(f"      {expr};")
        self.body.append("  endproperty")
        self.body.append(f"  assert property ({name});")
        self.body.append("")

    def render(self) -> str:
        lines = [HEADER, f"// class: {self.generator}",
                 f"// sources: {', '.join(self.sources) or '-'}",
                 f"module {self.name} ("]
        for i, (name, width) in enumerate(self.ports):
            comma = "," if i < len(self.ports) - 1 else ""
            lines.append(f"  input wire{_width_decl(width)} {name}{comma}")
        lines.append(");")
        lines.append("")
        lines.extend(self.body)
        lines.append("endmodule")
        return "\n".join(lines) + "\n"


def _domain_reset(analysis: Analysis, domain: str):
    for r in analysis.constraints.resets:
        if r.domain == domain:
            return r
    return None


def _root_clock_of_flop(analysis: Analysis, flop_idx: int) -> str:
    port = analysis.domains.clock_root[flop_idx]
    return analysis.netlist.nets[analysis.netlist.ports[port].net].name


def _add_reset_port(mod: _Module, analysis: Analysis, domain: str,
                    tag: str) -> str | None:
    r = _domain_reset(analysis, domain)
    if r is None:
        return None
    pname = f"rst_{tag}{'_n' if r.active_low else ''}"
    mod.port(pname, r.net)
    return f"!{pname}" if r.active_low else pname


def _stability_expr(sig: str, k: int) -> str:
    terms = " && ".join(f"($past({sig}, 1) == $past({sig}, {i}))"
                        for i in range(2, k + 1))
    return f"({sig} != $past({sig})) |-> ({terms})"


def _gray_expr(sig: str, width: int) -> str:
    terms = [f"(({sig} ^ $past({sig})) == {width}'h0)"]
    terms += [f"(({sig} ^ $past({sig})) == {width}'h{1 << b:x})"
              for b in range(width)]
    return " || ".join(terms)


def generate_checks(analysis: Analysis) -> list[GeneratedFile]:
    """Checker modules for every recognized synchronizer plus the signal
    configuration checks, and a companion bind file."""
    a = analysis
    nl = a.netlist
    cs = a.constraints
    k_stab = cs.options["stability_cycles"]
    files: list[GeneratedFile] = []
    modules: list[_Module] = []
    by_id = {p.id: p for p in a.pairs}

    for inst in a.syncs:
        if inst.role != "cdc":
            continue
        if inst.kind == "ndff":
            pids = [pid for pid in inst.protected
                    if by_id[pid].suppressed is None
                    and a.status[pid].state == "synchronized"]
            if not pids:
                continue
            mod = _Module(f"{inst.id}_ndff_check", "ndff_sync_check",
                          (inst.id, *pids))
            clk_dst = mod.port("clk_dst",
                               _resolve(nl, _root_clock_of_flop(a, inst.head)))
            disable = _add_reset_port(mod, a, inst.dst_domain, "dst")
            for pid in pids:
                p = by_id[pid]
                sig = mod.port(f"src_{pid}", _resolve(nl, p.src_name), p.width)
                if p.width == 1:
                    mod.prop(f"p_stable_{pid}", clk_dst, disable,
                             _stability_expr(sig, k_stab), f"stability:{pid}")
                else:
                    src_clk = mod.port("clk_src",
                                       _resolve(nl, _root_clock_of_flop(a, p.src[1])))
                    mod.prop(f"p_gray_{pid}", src_clk, disable,
                             _gray_expr(sig, p.width), f"gray_code:{pid}")
            modules.append(mod)
        elif inst.kind == "pulse":
            mod = _Module(f"{inst.id}_pulse_check", "pulse_sync_check", (inst.id,))
            toggle_idx = next(m for m in inst.members
                              if nl.cells[m].name == inst.extra["toggle"])
            clk_src = mod.port("clk_src",
                               _resolve(nl, _root_clock_of_flop(a, toggle_idx)))
            src_domain = a.domains.flop_domain[toggle_idx]
            disable = _add_reset_port(mod, a, src_domain, "src")
            pulse = mod.port("pulse_in",
                             _resolve(nl, nl.nets[inst.extra["pulse_in"]].name))
            mod.prop(f"p_width_{inst.id}", clk_src, disable,
                     f"!({pulse} && $past({pulse}))", f"pulse_width:{inst.id}")
            modules.append(mod)
        elif inst.kind == "mux":
            mod = _Module(f"{inst.id}_mux_check", "mux_sync_check", (inst.id,))
            cap_idx = next(m for m in inst.members
                           if nl.cells[m].name == inst.extra["capture"])
            clk_dst = mod.port("clk_dst",
                               _resolve(nl, _root_clock_of_flop(a, cap_idx)))
            disable = _add_reset_port(mod, a, inst.dst_domain, "dst")
            en_net = nl.nets[inst.extra["enable_net"]]
            data_net = nl.nets[inst.extra["data_net"]]
            en = mod.port("sel_en", _resolve(nl, en_net.name))
            data = mod.port("data_bus", _resolve(nl, data_net.name), data_net.width)
            mod.prop(f"p_hold_{inst.id}", clk_dst, disable,
                     f"{en} |-> $stable({data})", f"mux_enable:{inst.id}")
            modules.append(mod)
        elif inst.kind == "fifo":
            mod = _Module(f"{inst.id}_fifo_check", "async_fifo_check", (inst.id,))
            wptr = nl.cells[inst.extra["wptr"]]
            rptr = nl.cells[inst.extra["rptr"]]
            width = inst.extra["ptr_width"]
            clk_w = mod.port("clk_w", _resolve(nl, _root_clock_of_flop(a, wptr.index)))
            clk_r = mod.port("clk_r", _resolve(nl, _root_clock_of_flop(a, rptr.index)))
            dis_w = _add_reset_port(mod, a, a.domains.flop_domain[wptr.index], "w")
            dis_r = _add_reset_port(mod, a, a.domains.flop_domain[rptr.index], "r")
            wg = mod.port("wgray", _resolve(nl, nl.nets[wptr.out].name), width)
            rg = mod.port("rgray", _resolve(nl, nl.nets[rptr.out].name), width)
            rs = mod.port("rsync",
                          _resolve(nl, nl.nets[nl.cells[inst.extra["rsync_tail_w"]].out].name),
                          width)
            ws = mod.port("wsync",
                          _resolve(nl, nl.nets[nl.cells[inst.extra["wsync_tail_r"]].out].name),
                          width)
            twist = (f"{{~$past({rs}[{width - 1}:{width - 2}]), "
                     f"$past({rs}[{width - 3}:0])}}" if width > 2
                     else f"~$past({rs})")
            mod.prop(f"p_gray_w_{inst.id}", clk_w, dis_w,
                     _gray_expr(wg, width), f"fifo:{inst.id}")
            mod.prop(f"p_full_{inst.id}", clk_w, dis_w,
                     f"({wg} != $past({wg})) |-> !($past({wg}) == {twist})",
                     f"fifo:{inst.id}")
            mod.prop(f"p_gray_r_{inst.id}", clk_r, dis_r,
                     _gray_expr(rg, width), f"fifo:{inst.id}")
            mod.prop(f"p_empty_{inst.id}", clk_r, dis_r,
                     f"({rg} != $past({rg})) |-> !($past({rg}) == $past({ws}))",
                     f"fifo:{inst.id}")
            modules.append(mod)

    # clock gating checks, for idiomatic AND(clock, registered-enable) gates
    from .netlist import Const, Dff, Gate
    seen_gates = set()
    static_decls = set(cs.static_signals)
    for note in a.domains.gate_notes:
        gcell = next((c for c in nl.cells if c.name == note.gate), None)
        if gcell is None or gcell.index in seen_gates:
            continue
        seen_gates.add(gcell.index)
        if not (isinstance(gcell, Gate) and gcell.op == "AND"
                and len(gcell.inputs) == 2):
            continue
        root_net = nl.net_index.get(note.root)
        others = [n for n in gcell.inputs if n != root_net]
        if len(others) != 1:
            continue
        drv = nl.nets[others[0]].driver
        registered = drv is not None and drv[0] == "cell" and \
            isinstance(nl.cells[drv[1]], (Dff, Const))
        declared_static = nl.nets[others[0]].name in static_decls
        if not (registered or declared_static):
            continue
        tag = _sanitize(note.flop)
        mod = _Module(f"cg_{tag}_check", "clock_gate_check", (note.flop,))
        clk = mod.port("clk_root", _resolve(nl, note.root))
        en = mod.port("gate_en", _resolve(nl, nl.nets[others[0]].name))
        mod.prop(f"p_gate_{tag}", clk, None,
                 f"!(({en} != $past({en})) && ($past({en}, 1) != $past({en}, 2)))",
                 f"clock_gate:{note.flop}")
        modules.append(mod)

    # signal configuration checks: declared statics plus false-path record
    if cs.static_signals or cs.false_paths:
        mod = _Module("signal_config_check", "signal_config_check",
                      tuple(cs.static_signals) +
                      tuple(f"{fp.src}->{fp.dst}" for fp in cs.false_paths))
        clk = mod.port("clk_ref", _resolve(nl, cs.clocks[0].name))
        disable = _add_reset_port(mod, a, cs.clocks[0].domain, "ref")
        for name in cs.static_signals:
            sig = mod.port(f"sig_{_sanitize(name)}", _resolve(nl, name),
                           nl.net(name).width)
            mod.prop(f"p_static_{_sanitize(name)}", clk, disable,
                     f"$stable({sig})", f"static:{name}")
        for fp in cs.false_paths:
            mod.body.append(f"  // false_path -from {fp.src} -to {fp.dst} "
                            f"(excluded from analysis by constraint)")
        modules.append(mod)

    names = set()
    for mod in modules:
        if mod.name in names:
            raise NameCollision(f"two generated modules named {mod.name!r}")
        names.add(mod.name)
        files.append(GeneratedFile(f"gen/checks/{mod.generator}/{mod.name}.sv",
                                   mod.render(), mod.generator, mod.sources))

    bind_lines = [HEADER, "// class: bind", ""]
    for mod in modules:
        conns = ", ".join(f".{port}({net})" for port, net in mod.bind_map)
        bind_lines.append(f"bind {nl.name} {mod.name} u_{mod.name} ({conns});")
    files.append(GeneratedFile("gen/bind_all.sv", "\n".join(bind_lines) + "\n",
                               "bind", tuple(m.name for m in modules)))
    files.sort(key=lambda f: f.path)
    return files


def generate_coverage_model(analysis: Analysis) -> GeneratedFile:
    """Covergroups with the four resolution bins per unsuppressed pair,
    sampled on the destination clock via injection hook signals."""
    a = analysis
    lines = [HEADER, "// class: coverage", "",
             "module cdc_cov ("]
    ports = []
    clocks_used = []
    for p in a.pairs:
        if p.suppressed is not None:
            continue
        clk = _root_clock_of_flop(a, p.dst)
        if clk not in clocks_used:
            clocks_used.append(clk)
        ports.append((f"msi_fire_{p.id}", 1))
        ports.append((f"msi_kind_{p.id}", 1))
        ports.append((f"msi_value_{p.id}", 1))
    port_decls = [f"  input wire clk_{_sanitize(c)}" for c in clocks_used]
    port_decls += [f"  input wire {name}" for name, _w in ports]
    for i, decl in enumerate(port_decls):
        lines.append(decl + ("," if i < len(port_decls) - 1 else ""))
    lines.append(");")
    lines.append("")
    count = 0
    for p in a.pairs:
        if p.suppressed is not None:
            continue
        clk = _sanitize(_root_clock_of_flop(a, p.dst))
        lines.append(f"  covergroup cg_{p.id} @(posedge clk_{clk});")
        lines.append(f"    coverpoint {{msi_kind_{p.id}, msi_value_{p.id}}} "
                     f"iff (msi_fire_{p.id}) {{")
        lines.append(f"      bins setup_to_0 = {{2'b00}};")
        lines.append(f"      bins setup_to_1 = {{2'b01}};")
        lines.append(f"      bins hold_to_0 = {{2'b10}};")
        lines.append(f"      bins hold_to_1 = {{2'b11}};")
        lines.append("    }")
        lines.append("  endgroup")
        lines.append("")
        count += 1
    lines.append("endmodule")
    return GeneratedFile("gen/coverage/cdc_cov.sv", "\n".join(lines) + "\n",
                         "coverage",
                         tuple(p.id for p in a.pairs if p.suppressed is None))


def generate_all(analysis: Analysis) -> list[GeneratedFile]:
    files = generate_checks(analysis)
    files.append(generate_coverage_model(analysis))
    files.sort(key=lambda f: f.path)
    return files


# --- structural lint over generated text -----------------------------------

_BALANCED = (("module", "endmodule"), ("property", "endproperty"),
             ("covergroup", "endgroup"), ("begin", "end"))

_SVA_KEYWORDS = {
    "module", "endmodule", "input", "output", "wire", "property", "endproperty",
    "assert", "disable", "iff", "posedge", "negedge", "covergroup", "endgroup",
    "coverpoint", "bins", "bind", "begin", "end",
}
_SVA_FUNCS = {"$past", "$stable", "$rose"}


def lint_generated(files: list[GeneratedFile], netlist: Netlist) -> list[str]:
    """Balanced structure and identifier resolution; empty list means clean."""
    import re
    problems: list[str] = []
    module_names = set()
    for f in files:
        for opener, closer in _BALANCED:
            if opener == "property":
                # `assert property (...)` is a use, not an opener
                n_open = len(re.findall(r"(?<!assert )\bproperty\b", f.text))
            else:
                n_open = len(re.findall(rf"\b{opener}\b", f.text))
            n_close = len(re.findall(rf"\b{closer}\b", f.text))
            if n_open != n_close:
                problems.append(f"{f.path}: unbalanced {opener}/{closer}")
        for m in re.finditer(r"^module\s+(\w+)", f.text, re.M):
            module_names.add(m.group(1))
    alias_ok = set(netlist.net_index)
    for f in files:
        if f.generator == "bind":
            for m in re.finditer(r"\.\w+\(([^)]*)\)", f.text):
                net = m.group(1).strip()
                if net and net not in alias_ok:
                    problems.append(f"{f.path}: unknown signal {net!r}")
            for m in re.finditer(r"^bind\s+\w+\s+(\w+)", f.text, re.M):
                if m.group(1) not in module_names:
                    problems.append(f"{f.path}: bind of unknown module {m.group(1)!r}")
            continue
        # identifiers inside a module must be locally declared ports
        local = set(re.findall(r"input\s+wire\s*(?:\[[^\]]*\])?\s*(\w+)", f.text))
        local |= {m.group(1) for m in re.finditer(r"property\s+(\w+)", f.text)}
        local |= {m.group(1) for m in re.finditer(r"covergroup\s+(\w+)", f.text)}
        local |= {m.group(1) for m in re.finditer(r"bins\s+(\w+)", f.text)}
        local |= {m.group(1) for m in re.finditer(r"^module\s+(\w+)", f.text, re.M)}
        for tok in re.findall(r"(?<![\w$.'])([A-Za-z_][A-Za-z0-9_]*)", _strip_comments(f.text)):
            if tok in _SVA_KEYWORDS or tok in local:
                continue
            problems.append(f"{f.path}: unresolved identifier {tok!r}")
    return problems


def _strip_comments(text: str) -> str:
    return "\n".join(line.split("//", 1)[0] for line in text.splitlines())
