"""Independent oracle implementations used to compute expected values.

Everything here deliberately avoids the library's traversal/memoization
machinery: counts are recursive multiplications over the parsed module
tree, cones come from naive path enumeration, domains from exhaustive
backward search, and crossing pairs from brute-force path walks.
"""

from __future__ import annotations

import random

from cdckit.netlist import BlackBox, Const, Dff, Gate, Netlist, NetlistBuilder
from cdckit.verilog import ParsedModule


def count_dffs_recursive(modules: list[ParsedModule], top: str) -> int:
    """Expected flop count of the flattened design: own registers plus the
    recursive sum over instances."""
    by_name = {m.name: m for m in modules}

    def regs_assigned(mod: ParsedModule) -> int:
        targets = set()

        def walk(stmts):
            for s in stmts:
                if hasattr(s, "target"):
                    targets.add(s.target)
                else:
                    walk(s.then)
                    if s.other is not None:
                        walk(s.other)

        for blk in mod.always_blocks:
            walk(blk.body)
        return len(targets)

    def count(name: str) -> int:
        mod = by_name[name]
        total = regs_assigned(mod)
        for inst in mod.instances:
            total += count(inst.module)
        return total

    return count(top)


def naive_cone(netlist: Netlist, net_idx: int):
    """Backward cone by plain path enumeration, no memoization."""
    seq: set = set()
    gates: set[int] = set()
    consts: set[int] = set()

    def walk(idx: int, on_path: frozenset[int]):
        assert idx not in on_path, "combinational loop"
        net = netlist.nets[idx]
        drv = net.driver
        if drv is None:
            return
        if drv[0] == "port":
            seq.add(("port", drv[1], ""))
            return
        cell = netlist.cells[drv[1]]
        if isinstance(cell, Dff):
            seq.add(("cell", cell.index, "out"))
        elif isinstance(cell, BlackBox):
            seq.add(("cell", cell.index, drv[2]))
        elif isinstance(cell, Const):
            consts.add(cell.index)
        else:
            gates.add(cell.index)
            for inp in cell.inputs:
                walk(inp, on_path | {idx})

    walk(net_idx, frozenset())
    return seq, gates, consts


def exhaustive_flop_domains(netlist: Netlist, clock_domains: dict[str, str]) -> dict[int, str]:
    """Label each flop with the declared clock found by exhaustive backward
    search from its clock pin."""
    out = {}
    for cell in netlist.cells:
        if not isinstance(cell, Dff):
            continue
        found = set()
        stack = [cell.clock]
        visited = set()
        while stack:
            idx = stack.pop()
            if idx in visited:
                continue
            visited.add(idx)
            drv = netlist.nets[idx].driver
            if drv is None:
                continue
            if drv[0] == "port":
                name = netlist.nets[netlist.ports[drv[1]].net].name
                if name in clock_domains:
                    found.add(clock_domains[name])
            else:
                c = netlist.cells[drv[1]]
                if isinstance(c, Gate):
                    stack.extend(c.inputs)
        assert len(found) == 1, f"flop {cell.name} clock resolves to {found}"
        out[cell.index] = next(iter(found))
    return out


def brute_force_pairs(netlist: Netlist, flop_domains: dict[int, str],
                      port_domains: dict[int, str]) -> set[tuple[str, str, str]]:
    """All (src, dst, pin) with differing domains and a flop-free path,
    found by enumerating every backward path naively."""
    out = set()
    for dst in netlist.cells:
        if not isinstance(dst, Dff):
            continue
        pins = [("data", dst.data)]
        if dst.enable is not None:
            pins.append(("enable", dst.enable))
        for pin_name, pin_net in pins:

            def walk(idx: int):
                drv = netlist.nets[idx].driver
                if drv is None:
                    return
                if drv[0] == "port":
                    d = port_domains.get(drv[1])
                    if d is not None and d != flop_domains[dst.index]:
                        out.add((netlist.ports[drv[1]].name, dst.name, pin_name))
                    return
                cell = netlist.cells[drv[1]]
                if isinstance(cell, Dff):
                    if flop_domains[cell.index] != flop_domains[dst.index] \
                            and cell.index != dst.index:
                        out.add((cell.name, dst.name, pin_name))
                elif isinstance(cell, Gate):
                    for inp in cell.inputs:
                        walk(inp)

            walk(pin_net)
    return out


def random_netlist(rng: random.Random, n_flops: int = 12, n_gates: int = 25,
                   n_domains: int = 2, n_ports: int = 3) -> tuple[Netlist, dict[str, str]]:
    """Random acyclic multi-domain design built straight on the IR."""
    b = NetlistBuilder("rand")
    domains = [chr(ord("A") + i) for i in range(n_domains)]
    clock_domains = {}
    clock_handles = {}
    for d in domains:
        h = b.add_net(f"clk_{d}", 1)
        b.add_port(f"clk_{d}", "in", 1, h)
        clock_handles[d] = h
        clock_domains[f"clk_{d}"] = d
    port_handles = []
    for i in range(n_ports):
        h = b.add_net(f"in{i}", 1)
        b.add_port(f"in{i}", "in", 1, h)
        port_handles.append(h)

    flop_out = [b.add_net(f"ff{i}", 1) for i in range(n_flops)]
    pool = list(port_handles) + list(flop_out)
    gate_out = []
    for i in range(n_gates):
        op = rng.choice(["AND", "OR", "XOR", "NOT", "BUF"])
        n_in = 1 if op in ("NOT", "BUF") else 2
        ins = [rng.choice(pool + gate_out) for _ in range(n_in)]
        out = b.add_net(f"g{i}", 1)
        b.add_gate(f"g{i}_cell", op, ins, out, 1)
        gate_out.append(out)

    for i in range(n_flops):
        data = rng.choice(pool + gate_out)
        enable = rng.choice(pool + gate_out) if rng.random() < 0.25 else None
        dom = rng.choice(domains)
        b.add_dff(f"ff{i}", 1, clock_handles[dom], data, flop_out[i],
                  enable=enable)
    # keep at least one net observable so validate() sees no dangling outputs
    sink = rng.choice(gate_out) if gate_out else flop_out[0]
    b.add_port("out0", "out", 1, sink)
    return b.finish(), clock_domains


def gray_neighbor_sets(src_wave: list[tuple[int, int]]):
    """For a source waveform, a function tick -> {previous, current, next}
    codewords of the source sequence at that tick."""
    ticks = [t for t, _v in src_wave]
    vals = [v for _t, v in src_wave]

    def neighbors(t: int) -> set[int]:
        cur = 0
        for i, tt in enumerate(ticks):
            if tt <= t:
                cur = i
            else:
                break
        prev = vals[max(cur - 1, 0)]
        nxt = vals[min(cur + 1, len(vals) - 1)]
        return {prev, vals[cur], nxt}

    return neighbors
