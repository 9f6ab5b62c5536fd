"""Structural recognition of synchronizer schemes.

Matched patterns, in order of specificity:

* PulseToggle — source-domain toggle flop (q XOR-fed back) crossing into a
  flop chain, with a destination-side XOR of the chain tail and a one-stage
  delay of it.
* AsyncFifo — two pointer registers crossing in opposite directions between
  the same two domains, each through a chain, each carrying a gray-encode
  shape (an XOR whose operands trace back to one common register) in its
  data cone.
* MuxEnable — a destination flop whose enable resolves to a chain tail while
  its data cone crosses domains, or an explicit 2:1 mux with a feedback arm
  from the flop's own output and a chain-tail select.
* Ndff — a maximal chain of same-clock flops with exclusively-read
  intermediate stages and no enables; chains whose members share an async
  reset sourced from another domain and whose head data is constant are
  reset synchronizers.

Chains absorbed into a composite (pulse/fifo/mux) are not reported again as
standalone Ndff instances.  Modules listed in `sync_cells` match as
UserDefined by instance boundary, with no internal structure check.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .constraints import ConstraintSet
from .domains import CdcPair, DomainMap
from .netlist import Dff, Gate, Netlist


@dataclass(frozen=True)
class SyncInstance:
    id: str
    kind: str                       # "ndff" | "pulse" | "mux" | "fifo" | "user"
    members: tuple[int, ...]        # cell indices
    head: int | None                # first capture flop (None for user kind)
    tail: int | None
    depth: int
    dst_domain: str
    protected: tuple[str, ...] = () # pair ids
    role: str = "cdc"               # "cdc" | "reset"
    extra: dict = field(default_factory=dict)

    def to_dict(self, netlist: Netlist) -> dict:
        return {
            "id": self.id,
            "kind": self.kind,
            "members": [netlist.cells[c].name for c in self.members],
            "head": netlist.cells[self.head].name if self.head is not None else None,
            "depth": self.depth,
            "dst_domain": self.dst_domain,
            "protected": list(self.protected),
            "role": self.role,
            "extra": {k: v for k, v in sorted(self.extra.items())
                      if isinstance(v, (str, int, list))},
        }


@dataclass(frozen=True)
class PairStatus:
    state: str                  # "synchronized" | "unsynchronized" | "suppressed"
    sync_id: str | None = None
    sync_kind: str | None = None
    comb_disqualified: bool = False
    reason: str | None = None


def _chain_links(netlist: Netlist) -> dict[int, int]:
    """flop index -> next flop index, where the link is a direct, exclusively
    read, enable-free, same-clock connection."""
    links: dict[int, int] = {}
    for flop in netlist.dffs():
        out = netlist.nets[flop.out]
        if len(out.readers) != 1:
            continue
        kind, idx, pin = out.readers[0]
        if kind != "cell" or pin != "data":
            continue
        nxt = netlist.cells[idx]
        if not isinstance(nxt, Dff):
            continue
        if nxt.clock != flop.clock or nxt.enable is not None or flop.enable is not None:
            continue
        links[flop.index] = idx
    return links


def _chains(netlist: Netlist, min_depth: int) -> list[list[int]]:
    """Maximal link chains, head first, longest-match only."""
    links = _chain_links(netlist)
    has_pred = set(links.values())
    chains = []
    for head in sorted(links):
        if head in has_pred:
            continue
        chain = [head]
        while chain[-1] in links:
            chain.append(links[chain[-1]])
        if len(chain) >= min_depth:
            chains.append(chain)
    return chains


def _net_driver_gate(netlist: Netlist, net_idx: int) -> Gate | None:
    drv = netlist.nets[net_idx].driver
    if drv is None or drv[0] != "cell":
        return None
    cell = netlist.cells[drv[1]]
    return cell if isinstance(cell, Gate) else None


def _resolves_to(netlist: Netlist, net_idx: int, flop_idx: int) -> bool:
    """True if net is the flop's output through BUF/NOT/SLICE only."""
    seen = set()
    idx = net_idx
    while True:
        if idx in seen:
            return False
        seen.add(idx)
        flop = netlist.cells[flop_idx]
        if idx == flop.out:
            return True
        gate = _net_driver_gate(netlist, idx)
        if gate is None or gate.op not in ("BUF", "NOT", "SLICE"):
            return False
        idx = gate.inputs[0]


def _gray_shape(netlist: Netlist, data_net: int) -> bool:
    """A gray-encode witness: an XOR in the cone whose operand cones both
    reach one common sequential source."""
    cone = netlist.fanin_cone(data_net)
    for g in cone.gates:
        gate = netlist.cells[g]
        if gate.op != "XOR":
            continue
        operand_srcs = [set(netlist.fanin_cone(n).seq) for n in gate.inputs]
        common = set.intersection(*operand_srcs) if operand_srcs else set()
        if any(ref[0] == "cell" and isinstance(netlist.cells[ref[1]], Dff)
               for ref in common):
            return True
    return False


def recognize(netlist: Netlist, domains: DomainMap, pairs: list[CdcPair],
              constraints: ConstraintSet) -> list[SyncInstance]:
    min_depth = constraints.options["ndff_min_depth"]
    pairs_by_dst: dict[int, list[CdcPair]] = {}
    for p in pairs:
        pairs_by_dst.setdefault(p.dst, []).append(p)

    consumed_chains: set[int] = set()   # by head index
    found: list[tuple] = []             # (kind, sort key, payload)

    # user-declared synchronizer modules claim their cells outright; their
    # internals are not matched again as ordinary patterns
    user_cells: set[int] = set()
    sync_mods = set(constraints.sync_cells)
    for rec in netlist.instances:
        if rec.module not in sync_mods:
            continue
        prefix = rec.path + "."
        members = tuple(c.index for c in netlist.cells
                        if isinstance(c, Dff) and c.name.startswith(prefix))
        if members:
            user_cells |= set(members)
            found.append(("user", rec.path, {"members": members,
                                             "module": rec.module,
                                             "path": rec.path}))

    chains = [c for c in _chains(netlist, min_depth) if not set(c) & user_cells]
    chain_of_head = {c[0]: c for c in chains}

    # pulse synchronizers
    for head, chain in sorted(chain_of_head.items()):
        tail = chain[-1]
        tail_out = netlist.nets[netlist.cells[tail].out]
        delay = None
        for kind, idx, pin in tail_out.readers:
            if kind == "cell" and pin == "data":
                cand = netlist.cells[idx]
                if (isinstance(cand, Dff) and cand.clock == netlist.cells[tail].clock
                        and cand.enable is None):
                    delay = cand
        if delay is None:
            continue
        xor = None
        for cell in netlist.cells:
            if isinstance(cell, Gate) and cell.op == "XOR" and set(cell.inputs) == \
                    {netlist.cells[tail].out, delay.out}:
                xor = cell
                break
        if xor is None:
            continue
        toggle = None
        for p in pairs_by_dst.get(head, ()):
            if p.pin != "data" or p.src[0] != "cell":
                continue
            src = netlist.cells[p.src[1]]
            if not isinstance(src, Dff):
                continue
            dgate = _net_driver_gate(netlist, src.data)
            if dgate is not None and dgate.op == "XOR" and len(dgate.inputs) == 2:
                others = [n for n in dgate.inputs if n != src.out]
                if len(others) == 1:
                    toggle = src
                    pulse_in = others[0]
                    break
        if toggle is None:
            continue
        consumed_chains.add(head)
        found.append(("pulse", netlist.cells[head].name, {
            "chain": chain, "delay": delay.index, "xor": xor.index,
            "toggle": toggle.index, "pulse_in": pulse_in,
            "pulse_out": xor.out,
        }))

    # async fifos: opposite-direction pointer crossings with gray shapes
    ptr_cands = []
    for head, chain in sorted(chain_of_head.items()):
        if head in consumed_chains:
            continue
        for p in pairs_by_dst.get(head, ()):
            if p.pin != "data" or p.src[0] != "cell":
                continue
            src = netlist.cells[p.src[1]]
            if isinstance(src, Dff) and _gray_shape(netlist, src.data):
                ptr_cands.append((p.src_domain, p.dst_domain, src.index, head, p.id))
    def _references(flop_idx: int, tail_idx: int) -> bool:
        flop = netlist.cells[flop_idx]
        tail_ref = ("cell", tail_idx, "out")
        nets = [flop.data] + ([flop.enable] if flop.enable is not None else [])
        return any(tail_ref in netlist.fanin_cone(n).seq for n in nets)

    used: set[int] = set()
    for i, a in enumerate(ptr_cands):
        if i in used:
            continue
        for j in range(i + 1, len(ptr_cands)):
            if j in used:
                continue
            b = ptr_cands[j]
            if a[0] != b[1] or a[1] != b[0]:
                continue
            # genuine pointer pairs are coupled: a guard on one side reads
            # the synced copy (the chain tail) of the other pointer
            coupled = _references(a[2], chain_of_head[b[3]][-1]) or \
                _references(b[2], chain_of_head[a[3]][-1])
            if not coupled:
                continue
            used.add(i)
            used.add(j)
            first, second = sorted((a, b), key=lambda t: netlist.cells[t[2]].name)
            consumed_chains.add(first[3])
            consumed_chains.add(second[3])
            found.append(("fifo", netlist.cells[first[2]].name, {
                "ptr_a": first, "ptr_b": second,
                "chain_a": chain_of_head[first[3]],
                "chain_b": chain_of_head[second[3]],
            }))
            break

    # mux/enable-gated bus synchronizers
    for flop in netlist.dffs():
        data_pairs = [p for p in pairs_by_dst.get(flop.index, ()) if p.pin == "data"]
        if not data_pairs:
            continue
        sel_chain = None
        mux_gate = None
        if flop.enable is not None:
            for head, chain in sorted(chain_of_head.items()):
                if head in consumed_chains:
                    continue
                if (_resolves_to(netlist, flop.enable, chain[-1])
                        and domains.flop_domain[chain[0]] == domains.flop_domain[flop.index]):
                    sel_chain = chain
                    break
        else:
            dgate = _net_driver_gate(netlist, flop.data)
            if dgate is not None and dgate.op == "MUX":
                sel, a_net, b_net = dgate.inputs
                feedback = (_resolves_to(netlist, a_net, flop.index)
                            or _resolves_to(netlist, b_net, flop.index))
                if feedback:
                    for head, chain in sorted(chain_of_head.items()):
                        if head in consumed_chains:
                            continue
                        if (_resolves_to(netlist, sel, chain[-1])
                                and domains.flop_domain[chain[0]] == domains.flop_domain[flop.index]):
                            sel_chain = chain
                            mux_gate = dgate
                            break
        if sel_chain is None:
            continue
        consumed_chains.add(sel_chain[0])
        found.append(("mux", flop.name, {
            "capture": flop.index, "chain": sel_chain,
            "mux": mux_gate.index if mux_gate is not None else None,
            "enable_net": flop.enable if flop.enable is not None
            else netlist.cells[sel_chain[-1]].out,
            "data_net": flop.data,
        }))

    # remaining chains as plain (or reset) ndff instances
    for head, chain in sorted(chain_of_head.items()):
        if head in consumed_chains:
            continue
        head_cell = netlist.cells[head]
        is_reset_sync = False
        if head_cell.reset is not None and all(
                netlist.cells[c].reset == head_cell.reset for c in chain):
            dn = domains.net_domain[head_cell.data]
            if dn.constant:
                rd = domains.net_domain[head_cell.reset]
                own = domains.flop_domain[head]
                if rd.unclocked or rd.domains - {own}:
                    is_reset_sync = True
        protected_exists = bool(pairs_by_dst.get(head)) or is_reset_sync
        if not protected_exists:
            continue
        found.append(("ndff", netlist.cells[head].name, {
            "chain": chain, "reset_sync": is_reset_sync,
        }))

    # materialize with deterministic ids and protected-pair assignment
    order = {"ndff": 0, "pulse": 1, "mux": 2, "fifo": 3, "user": 4}
    found.sort(key=lambda t: (order[t[0]], t[1]))
    instances: list[SyncInstance] = []
    for n, (kind, _key, info) in enumerate(found):
        sid = f"sync{n}"
        if kind == "ndff":
            chain = info["chain"]
            dst_dom = domains.flop_domain[chain[0]]
            prot = tuple(p.id for p in pairs_by_dst.get(chain[0], ()) if p.pin == "data")
            instances.append(SyncInstance(
                sid, "ndff", tuple(chain), chain[0], chain[-1], len(chain),
                dst_dom, prot, "reset" if info["reset_sync"] else "cdc",
                {"depth": len(chain)}))
        elif kind == "pulse":
            chain = info["chain"]
            members = tuple(chain) + (info["delay"], info["xor"], info["toggle"])
            dst_dom = domains.flop_domain[chain[0]]
            prot = tuple(p.id for p in pairs_by_dst.get(chain[0], ())
                         if p.pin == "data")
            instances.append(SyncInstance(
                sid, "pulse", members, chain[0], chain[-1], len(chain), dst_dom,
                prot, "cdc",
                {"toggle": netlist.cells[info["toggle"]].name,
                 "xor": netlist.cells[info["xor"]].name,
                 "pulse_in": info["pulse_in"], "pulse_out": info["pulse_out"],
                 "delay": info["delay"]}))
        elif kind == "mux":
            chain = info["chain"]
            cap = info["capture"]
            members = tuple(chain) + (cap,) + ((info["mux"],) if info["mux"] is not None else ())
            dst_dom = domains.flop_domain[cap]
            prot = tuple(p.id for p in pairs_by_dst.get(cap, ()) if p.pin == "data")
            prot += tuple(p.id for p in pairs_by_dst.get(chain[0], ()) if p.pin == "data")
            instances.append(SyncInstance(
                sid, "mux", members, cap, chain[-1], len(chain), dst_dom,
                tuple(sorted(set(prot))), "cdc",
                {"capture": netlist.cells[cap].name, "sel_head": chain[0],
                 "enable_net": info["enable_net"], "data_net": info["data_net"],
                 "mux": info["mux"]}))
        elif kind == "fifo":
            a, b = info["ptr_a"], info["ptr_b"]
            chain_a, chain_b = info["chain_a"], info["chain_b"]
            members = (a[2], b[2]) + tuple(chain_a) + tuple(chain_b)
            roles = _fifo_roles(netlist, a, b, chain_a, chain_b)
            width = netlist.cells[roles["wptr"]].width
            instances.append(SyncInstance(
                sid, "fifo", members, None, None, len(chain_a),
                domains.flop_domain[a[3]],
                tuple(sorted((a[4], b[4]))), "cdc",
                {"write_ptr": netlist.cells[roles["wptr"]].name,
                 "read_ptr": netlist.cells[roles["rptr"]].name,
                 "heads": sorted((chain_a[0], chain_b[0])),
                 "ptr_width": width, "depth": 1 << (width - 1),
                 **roles}))
        else:
            members = info["members"]
            doms = sorted({domains.flop_domain[m] for m in members})
            prot = tuple(p.id for p in pairs
                         if p.dst in set(members))
            instances.append(SyncInstance(
                sid, "user", members, None, None, len(members),
                doms[0] if doms else "?", prot, "cdc",
                {"module": info["module"], "path": info["path"]}))

    seen_members: set[int] = set()
    for inst in instances:
        if inst.kind == "ndff":
            assert not (set(inst.members) & seen_members), "overlapping ndff members"
            seen_members |= set(inst.members)
    return instances


def _fifo_roles(netlist: Netlist, a, b, chain_a, chain_b) -> dict:
    """Decide which pointer is the write side.

    `chain_a` synchronizes pointer `a` into the opposite domain, so the
    synced copy visible next to pointer `a` is `chain_b`'s tail.  The
    write-side full guard compares its own pointer against an
    inverted-top-bits twist of that synced copy, so a NOT feeding an XOR
    with the opposite tail in its fanin marks the write pointer.  Fallbacks:
    the side whose enable cone never references the opposite tail (a
    guard-free free-running writer), then name order.
    """
    cands = [(a, chain_a, b, chain_b), (b, chain_b, a, chain_a)]

    def feeds_xor(net_idx: int) -> bool:
        # forward through width plumbing only
        frontier = [net_idx]
        seen = set()
        while frontier:
            n = frontier.pop()
            if n in seen:
                continue
            seen.add(n)
            for kind, idx, _pin in netlist.nets[n].readers:
                if kind != "cell":
                    continue
                cell = netlist.cells[idx]
                if not isinstance(cell, Gate):
                    continue
                if cell.op == "XOR":
                    return True
                if cell.op in ("CONCAT", "SLICE", "BUF"):
                    frontier.append(cell.out)
        return False

    def write_structure(ptr_idx: int, opp_tail: int) -> bool:
        flop = netlist.cells[ptr_idx]
        nets = [flop.enable] if flop.enable is not None else []
        nets.append(flop.data)
        opp_ref = ("cell", opp_tail, "out")
        for start in nets:
            cone = netlist.fanin_cone(start)
            for g in cone.gates:
                gate = netlist.cells[g]
                if gate.op != "NOT":
                    continue
                if opp_ref not in netlist.fanin_cone(gate.inputs[0]).seq:
                    continue
                if feeds_xor(gate.out):
                    return True
        return False

    def references_opposite(ptr_idx: int, opp_tail: int) -> bool:
        flop = netlist.cells[ptr_idx]
        if flop.enable is None:
            return False
        return ("cell", opp_tail, "out") in netlist.fanin_cone(flop.enable).seq

    def roles(write, write_chain, read, read_chain) -> dict:
        # write_chain carries the write pointer into the read domain
        return {
            "wptr": write[2], "rptr": read[2],
            "rsync_tail_w": read_chain[-1],   # synced read ptr, write domain
            "wsync_tail_r": write_chain[-1],  # synced write ptr, read domain
            "write_pair": write[4], "read_pair": read[4],
        }

    for side, chain, other, other_chain in cands:
        if write_structure(side[2], other_chain[-1]):
            return roles(side, chain, other, other_chain)
    for side, chain, other, other_chain in cands:
        if not references_opposite(side[2], other_chain[-1]) and \
                references_opposite(other[2], chain[-1]):
            return roles(side, chain, other, other_chain)
    side, chain, other, other_chain = cands[0]
    return roles(side, chain, other, other_chain)


def classify_pairs(pairs: list[CdcPair], syncs: list[SyncInstance],
                   netlist: Netlist) -> dict[str, PairStatus]:
    """Total map pair id -> protection status."""
    protecting: dict[str, SyncInstance] = {}
    for inst in syncs:
        for pid in inst.protected:
            protecting.setdefault(pid, inst)
    allowed_ops = {"BUF", "NOT", "SLICE"}
    out: dict[str, PairStatus] = {}
    for p in pairs:
        if p.suppressed is not None:
            out[p.id] = PairStatus("suppressed", reason=p.suppressed)
            continue
        inst = protecting.get(p.id)
        if inst is None:
            out[p.id] = PairStatus("unsynchronized")
            continue
        extra_allowed: set[int] = set()
        if inst.kind == "mux" and inst.extra.get("mux") is not None:
            extra_allowed.add(inst.extra["mux"])
        bad = [c for c in p.path
               if c not in extra_allowed and netlist.cells[c].op not in allowed_ops]
        if bad:
            out[p.id] = PairStatus("unsynchronized", comb_disqualified=True)
        else:
            out[p.id] = PairStatus("synchronized", inst.id, inst.kind)
    return out
