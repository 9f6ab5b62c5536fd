from cdckit.checkers import build_checkers
from cdckit.sim import MsiConfig, reference_simulate, simulate
from cdckit.stimulus import parse_stimulus


def _verdicts(analysis, stim_text, select=None, latency=None, msi=False,
              seed=1, prob=0.5):
    checkers = build_checkers(analysis, latency=latency, select=select)
    stim = parse_stimulus(stim_text)
    res = simulate(analysis, stim,
                   MsiConfig(enabled=msi, probability=prob, seed=seed), checkers)
    return {v.checker: v for v in res.verdicts}


def test_wide_pulse_fails_at_second_high_edge(case_loader):
    analysis, stim_text = case_loader("wide_pulse")
    v = _verdicts(analysis, stim_text, select=["pulse_width"])["pulse_width:sync0"]
    assert not v.passed
    # pulse raised at source edge 3 (tick 30), still high at edge 4 (tick 40)
    assert v.tick == 40


def test_single_cycle_pulse_passes(case_loader):
    analysis, stim_text = case_loader("wide_pulse_clean")
    v = _verdicts(analysis, stim_text, select=["pulse_width"])["pulse_width:sync0"]
    assert v.passed


def test_gray_checker_flags_hamming_two(case_loader):
    analysis, stim_text = case_loader("binary_cross")
    v = _verdicts(analysis, stim_text, select=["gray_code"])["gray_code:cdc0"]
    assert not v.passed
    # binary 001 -> 010 is the first two-bit move of the counter
    assert "01" in v.message or "0x" in v.message


def test_gray_checker_accepts_gray_sequence(case_loader):
    analysis, stim_text = case_loader("gray_cross")
    v = _verdicts(analysis, stim_text, select=["gray_code"], msi=True,
                  seed=5)["gray_code:cdc0"]
    assert v.passed


def test_stability_semantics(case_loader):
    analysis, stim_text = case_loader("freq_data_loss")
    v = _verdicts(analysis, stim_text, select=["stability"])["stability:cdc0"]
    assert not v.passed
    clean, clean_stim = case_loader("freq_data_loss_clean")
    v = _verdicts(clean, clean_stim, select=["stability"])["stability:cdc0"]
    assert v.passed


def test_static_checker(case_loader):
    analysis, stim_text = case_loader("static_config")
    v = _verdicts(analysis, stim_text, select=["static"])["static:cfg_r"]
    assert not v.passed
    clean, clean_stim = case_loader("static_config_clean")
    assert _verdicts(clean, clean_stim, select=["static"])["static:cfg_r"].passed


def test_mux_enable_checker(case_loader):
    analysis, stim_text = case_loader("mux_sync_bug")
    v = _verdicts(analysis, stim_text, select=["mux_enable"])["mux_enable:sync0"]
    assert not v.passed
    clean, clean_stim = case_loader("mux_sync")
    assert _verdicts(clean, clean_stim, select=["mux_enable"],
                     msi=True)["mux_enable:sync0"].passed


def test_fifo_checker(case_loader):
    analysis, stim_text = case_loader("async_fifo_bug")
    v = _verdicts(analysis, stim_text, select=["fifo"])["fifo:sync0"]
    assert not v.passed
    assert "full" in v.message
    clean, clean_stim = case_loader("async_fifo")
    assert _verdicts(clean, clean_stim, select=["fifo"], msi=True,
                     seed=13)["fifo:sync0"].passed


def test_clock_gate_checker(case_loader):
    analysis, stim_text = case_loader("gated_clock_glitch_clean")
    v = _verdicts(analysis, stim_text, select=["clock_gate"])["clock_gate:dst"]
    assert v.passed
    # toggling the enable on consecutive edges must trip it
    bad_stim = ("at clk_a 0 set rst_a_n 1\nat clk_a 2 set en 1\n"
                "at clk_a 3 set en 0\nat clk_a 4 set en 1\nrun 10 of clk_a\n")
    v = _verdicts(analysis, bad_stim, select=["clock_gate"])["clock_gate:dst"]
    assert not v.passed


def test_latency_sweep(case_loader):
    analysis, stim_text = case_loader("msi_latency")
    stim = parse_stimulus(stim_text)
    # strict bound fails under injection on some seeds, relaxed never does
    strict_fail = False
    for seed in range(1, 101):
        checkers = build_checkers(analysis, latency=[("cdc0", 2, 3)],
                                  select=["latency"])
        res = simulate(analysis, stim, MsiConfig(probability=0.5, seed=seed),
                       checkers)
        assert res.verdicts[0].passed, ("latency 2..3", seed)
        checkers = build_checkers(analysis, latency=[("cdc0", 2, 2)],
                                  select=["latency"])
        res = simulate(analysis, stim, MsiConfig(probability=0.5, seed=seed),
                       checkers)
        if not res.verdicts[0].passed:
            strict_fail = True
    assert strict_fail


def test_latency_exact_in_reference(case_loader):
    analysis, stim_text = case_loader("msi_latency")
    stim = parse_stimulus(stim_text)
    checkers = build_checkers(analysis, latency=[("cdc0", 2, 2)],
                              select=["latency"])
    res = reference_simulate(analysis, stim, checkers)
    assert res.verdicts[0].passed


def test_default_suite_composition(case_loader):
    analysis, _ = case_loader("codegen_full")
    ids = sorted(c.id for c in build_checkers(analysis))
    kinds = {i.split(":")[0] for i in ids}
    assert {"stability", "pulse_width", "mux_enable", "fifo", "static",
            "clock_gate", "gray_code"} <= kinds
