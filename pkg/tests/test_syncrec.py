from cdckit.pipeline import analyze_sources
from cdckit.syncrec import recognize

AB = """clock clk_a -period 10 -domain A
clock clk_b -period 10 -domain B
reset rst_a_n -active_low -domain A
reset rst_b_n -active_low -domain B
"""


def _analyze(rtl, cons=AB):
    return analyze_sources([("t.v", rtl)], cons)


CHAIN3 = """
module top(input clk_a, input clk_b, input rst_a_n, input rst_b_n, input d, output q);
  reg src;
  always @(posedge clk_a or negedge rst_a_n) begin
    if (!rst_a_n) src <= 1'b0; else src <= d;
  end
  reg q1, q2, q3;
  always @(posedge clk_b or negedge rst_b_n) begin
    if (!rst_b_n) begin q1 <= 1'b0; q2 <= 1'b0; q3 <= 1'b0; end
    else begin q1 <= src; q2 <= q1; q3 <= q2; end
  end
  assign q = q3;
endmodule
"""


def test_textbook_two_flop(case_loader):
    analysis, _ = case_loader("missing_sync_clean")
    assert [(s.kind, s.depth) for s in analysis.syncs] == [("ndff", 2)]
    s = analysis.syncs[0]
    assert analysis.netlist.cells[s.head].name == "q1"
    assert s.protected == ("cdc0",)


def test_first_stage_fanout_disqualifies():
    a = _analyze("""
module top(input clk_a, input clk_b, input rst_a_n, input rst_b_n, input d, output q, output leak);
  reg src;
  always @(posedge clk_a or negedge rst_a_n) begin
    if (!rst_a_n) src <= 1'b0; else src <= d;
  end
  reg q1, q2;
  always @(posedge clk_b or negedge rst_b_n) begin
    if (!rst_b_n) begin q1 <= 1'b0; q2 <= 1'b0; end
    else begin q1 <= src; q2 <= q1; end
  end
  assign q = q2;
  assign leak = q1;
endmodule
""")
    assert a.syncs == []
    assert a.status["cdc0"].state == "unsynchronized"


def test_maximality_three_chain_is_one_instance():
    a = _analyze(CHAIN3)
    assert [(s.kind, s.depth) for s in a.syncs] == [("ndff", 3)]


def test_min_depth_option():
    a = _analyze(CHAIN3, AB + "option ndff_min_depth 4\n")
    assert a.syncs == []


def test_member_disjointness_and_idempotence(case_loader):
    analysis, _ = case_loader("codegen_full")
    seen = set()
    for s in analysis.syncs:
        if s.kind == "ndff":
            assert not (set(s.members) & seen)
            seen |= set(s.members)
    again = recognize(analysis.netlist, analysis.domains, analysis.pairs,
                      analysis.constraints)
    assert [(s.id, s.kind, s.members) for s in again] == \
        [(s.id, s.kind, s.members) for s in analysis.syncs]


def test_pulse_and_fifo_absorb_their_chains(case_loader):
    analysis, _ = case_loader("codegen_full")
    kinds = sorted(s.kind for s in analysis.syncs)
    # composite instances swallow their chains; the two plain ndffs are the
    # one-bit crossing and the gray-coded bus, nothing from pulse/mux/fifo
    assert kinds == ["fifo", "mux", "ndff", "ndff", "pulse"]
    ndff_heads = {analysis.netlist.cells[s.head].name
                  for s in analysis.syncs if s.kind == "ndff"}
    assert ndff_heads == {"q1", "gs1"}


def test_pulse_members(case_loader):
    analysis, _ = case_loader("wide_pulse")
    inst = analysis.syncs[0]
    assert inst.kind == "pulse"
    names = sorted(analysis.netlist.cells[m].name for m in inst.members)
    # chain stages, delay stage, the toggle flop, and the recombining xor
    assert [n for n in names if not n.startswith("__")] == ["q1", "q2", "q3", "tgl"]
    assert any("xor" in n for n in names)


def test_fifo_roles(case_loader):
    analysis, _ = case_loader("async_fifo")
    inst = next(s for s in analysis.syncs if s.kind == "fifo")
    assert inst.extra["write_ptr"] == "wgray"
    assert inst.extra["read_ptr"] == "rgray"
    assert inst.extra["ptr_width"] == 3
    assert inst.extra["depth"] == 4


def test_fifo_roles_without_guard(case_loader):
    analysis, _ = case_loader("async_fifo_bug")
    inst = next(s for s in analysis.syncs if s.kind == "fifo")
    assert inst.extra["write_ptr"] == "wgray"


def test_user_defined_sync_cells():
    a = _analyze("""
module magic_sync(input clk, input rst_n, input d, output q);
  reg m1, m2;
  always @(posedge clk or negedge rst_n) begin
    if (!rst_n) begin m1 <= 1'b0; m2 <= 1'b0; end
    else begin m1 <= d; m2 <= m1; end
  end
  assign q = m2;
endmodule
module top(input clk_a, input clk_b, input rst_a_n, input rst_b_n, input d, output q);
  reg src;
  always @(posedge clk_a or negedge rst_a_n) begin
    if (!rst_a_n) src <= 1'b0; else src <= d;
  end
  magic_sync u0(.clk(clk_b), .rst_n(rst_b_n), .d(src), .q(q));
endmodule
""", AB + "sync_cells magic_sync\n")
    kinds = {s.kind for s in a.syncs}
    assert "user" in kinds
    user = next(s for s in a.syncs if s.kind == "user")
    assert a.status["cdc0"].state == "synchronized"
    assert a.status["cdc0"].sync_id == user.id


def test_classification_statuses(case_loader):
    analysis, _ = case_loader("comb_on_cdc")
    for p in analysis.pairs:
        st = analysis.status[p.id]
        assert st.state == "unsynchronized" and st.comb_disqualified

    clean, _ = case_loader("missing_sync_clean")
    assert clean.status["cdc0"].state == "synchronized"
    assert clean.status["cdc0"].sync_kind == "ndff"

    raw, _ = case_loader("missing_sync")
    assert raw.status["cdc0"].state == "unsynchronized"
    assert not raw.status["cdc0"].comb_disqualified

    suppressed, _ = case_loader("static_not_constrained_clean")
    assert suppressed.status["cdc0"].state == "suppressed"
    assert suppressed.status["cdc0"].reason == "static"


def test_classification_is_total(case_loader):
    for name in ("codegen_full", "mux_sync", "async_fifo"):
        analysis, _ = case_loader(name)
        assert set(analysis.status) == {p.id for p in analysis.pairs}
