import itertools

import numpy as np
import pytest

from fuzzychip.chipsim import (
    CapacityError,
    FuzzyChip,
    Phase,
    ProtocolError,
    RomImage,
    ScalarChip,
    Schedule,
    UnsupportedRuleShape,
    build_rom,
    format_trace,
    parse_trace,
    run_inference,
    run_traced,
)
from fuzzychip.core import DimensionError, FuzzyVector, Rule, RuleSet, infer, match_degree
from fuzzychip.harness import random_ruleset, random_vector

from oracles import bit_string, brute_infer

V = FuzzyVector


def two_rule_set():
    return RuleSet([Rule([V([15, 8, 0, 0])], V([0, 5, 10, 15])),
                    Rule([V([0, 8, 15, 4])], V([15, 10, 5, 0]))])


def module_string(bits):
    return "".join(map(str, bits))


class TestBuildRom:
    def test_leading_bits_of_sample_rule(self):
        ant = [2, 4, 15] + [0] * 28
        rom = build_rom(RuleSet([Rule([V(ant)], V([0] * 31))]))
        assert module_string(rom.antecedent_module).startswith("001001001111")

    def test_bits_per_rule(self):
        rom = build_rom(random_ruleset(np.random.default_rng(0), 31, 16))
        assert rom.bits_per_rule == 124
        assert len(rom.antecedent_module) == len(rom.conclusion_module) == 16 * 124

    def test_zero_rule_and_padding(self):
        rules = RuleSet([Rule([V([0] * 31)], V([0] * 31))])
        rom = build_rom(rules)
        assert rom.rule_count == 16
        assert set(rom.antecedent_module) == {0} and set(rom.conclusion_module) == {0}

    def test_layout_matches_hand_packing(self):
        rules = random_ruleset(np.random.default_rng(1), 6, 3)
        rom = build_rom(rules, capacity=4)
        ant = "".join(bit_string(r.antecedents[0]) for r in rules) + "0" * 24
        con = "".join(bit_string(r.consequent) for r in rules) + "0" * 24
        assert module_string(rom.antecedent_module) == ant
        assert module_string(rom.conclusion_module) == con
        assert rom.to_ruleset()[:3] == tuple(rules)

    def test_errors(self):
        two_input = RuleSet([Rule([V([1, 2]), V([3, 4])], V([5, 6]))])
        with pytest.raises(UnsupportedRuleShape):
            build_rom(two_input)
        many = random_ruleset(np.random.default_rng(2), 4, 17)
        with pytest.raises(CapacityError):
            build_rom(many)
        with pytest.raises(CapacityError):
            build_rom(two_rule_set(), capacity=12)

    def test_image_validation(self):
        with pytest.raises(ValueError):
            RomImage((0,) * 7, (0,) * 8, 1, 2)
        with pytest.raises(ValueError):
            RomImage((2,) + (0,) * 7, (0,) * 8, 1, 2)


class TestSchedule:
    def test_fabricated_chip_numbers(self):
        s = Schedule(31, 16)
        assert s.input_start == 3
        assert s.input_end == 126
        assert s.first_valid == 133
        assert s.last_cycle == 256

    def test_closed_form(self):
        for e in range(2, 65):
            s = Schedule(e, 16)
            assert s.first_valid == 9 + 4 * e
            assert s.last_cycle == 8 + 8 * e

    def test_small_universe(self):
        s = Schedule(4, 16)
        assert (s.first_valid, s.last_cycle) == (25, 40)

    def test_other_capacities(self):
        for cap, levels in ((2, 1), (4, 2), (32, 5), (64, 6)):
            s = Schedule(31, cap)
            assert s.first_valid == 5 + 4 * 31 + levels


class TestProtocol:
    def test_valid_window_e31(self):
        rules = random_ruleset(np.random.default_rng(3), 31, 16)
        obs = random_vector(np.random.default_rng(4), 31)
        _, trace = run_traced(FuzzyChip.from_rules(rules), obs)
        assert len(trace) == 256
        assert [r.cycle for r in trace] == list(range(1, 257))
        valid = [r.cycle for r in trace if r.valid]
        assert valid[0] == 133 and valid[-1] == 256 and len(valid) == 124
        assert all(not r.valid for r in trace if r.cycle < 133)

    def test_input_window(self):
        obs = V([15] * 31)
        chip = FuzzyChip.from_rules(RuleSet([Rule([V([15] * 31)], V([15] * 31))]))
        _, trace = run_traced(chip, obs)
        ones = [r.cycle for r in trace if r.input_bit]
        assert ones[0] == 3 and ones[-1] == 126
        phases = {r.cycle: r.phase for r in trace}
        assert phases[2] is Phase.IDLE
        assert phases[3] is Phase.ANTECEDENT and phases[126] is Phase.ANTECEDENT
        assert phases[127] is Phase.CONCLUSION and phases[256] is Phase.CONCLUSION

    def test_small_universe_window(self):
        _, trace = run_traced(FuzzyChip.from_rules(two_rule_set()), V([4, 15, 6, 0]))
        valid = [r.cycle for r in trace if r.valid]
        assert (valid[0], valid[-1], len(trace)) == (25, 40, 40)

    def test_bits_outside_input_window_are_ignored(self):
        rules = two_rule_set()
        chip = FuzzyChip.from_rules(rules)
        stream = [int(c) for c in bit_string([4, 15, 6, 0])]
        chip.reset()
        out = []
        for cycle in range(2, chip.schedule.last_cycle + 1):
            k = cycle - 3
            bit = stream[k] if 0 <= k < 16 else 1
            o, valid = chip.tick(bit)
            if valid:
                out.append(o)
        assert out == [int(c) for c in bit_string([8, 8, 8, 8])]

    def test_tick_after_done(self):
        chip = FuzzyChip.from_rules(two_rule_set())
        run_inference(chip, V([1, 2, 3, 4]))
        assert chip.phase is Phase.DONE
        with pytest.raises(ProtocolError):
            chip.tick(0)
        chip.reset()
        assert chip.phase is Phase.IDLE
        chip.tick(0)

    def test_reset_clears_state(self):
        chip = FuzzyChip.from_rules(two_rule_set())
        chip.reset()
        for _ in range(30):
            chip.tick(1)
        assert any(chip.alpha_values())
        chip.reset()
        assert chip.alpha_values() == (0,) * 16
        assert chip.valid is False
        assert chip.controller.cycle_counter == 0 and chip.cycle == 1

    def test_reset_mid_inference_matches_fresh_run(self):
        rules = random_ruleset(np.random.default_rng(5), 31, 16)
        obs = random_vector(np.random.default_rng(6), 31)
        fresh = run_traced(FuzzyChip.from_rules(rules), obs)
        chip = FuzzyChip.from_rules(rules)
        chip.reset()
        for t in range(150):
            chip.tick(t % 2)
        assert run_traced(chip, obs) == fresh

    def test_dimension_error(self):
        with pytest.raises(DimensionError):
            run_inference(FuzzyChip.from_rules(two_rule_set()), V([1, 2, 3]))


class TestEquivalence:
    def test_two_rule_example(self):
        result, cycles = run_inference(FuzzyChip.from_rules(two_rule_set()), V([4, 15, 6, 0]))
        assert result == V([8, 8, 8, 8])
        assert cycles == 40

    def test_zero_observation(self):
        rules = random_ruleset(np.random.default_rng(7), 31, 16)
        result, cycles = run_inference(FuzzyChip.from_rules(rules), V([0] * 31))
        assert result == V([0] * 31) and cycles == 256

    def test_random_against_brute_force(self):
        rng = np.random.default_rng(8)
        for _ in range(150):
            e = int(rng.integers(2, 33))
            cap = [2, 4, 8, 16, 32][int(rng.integers(0, 5))]
            rules = random_ruleset(rng, e, int(rng.integers(1, cap + 1)))
            obs = random_vector(rng, e)
            rows = [([list(r.antecedents[0])], list(r.consequent)) for r in rules]
            result, cycles = run_inference(FuzzyChip.from_rules(rules, cap), obs)
            assert list(result) == brute_infer(rows, [list(obs)])
            assert cycles == Schedule(e, cap).last_cycle

    def test_alpha_after_antecedent_phase(self):
        rng = np.random.default_rng(9)
        for _ in range(20):
            rules = random_ruleset(rng, 31, 16)
            obs = random_vector(rng, 31)
            _, trace = run_traced(FuzzyChip.from_rules(rules), obs)
            row = trace[126 - 1]
            assert row.cycle == 126
            assert list(row.alphas) == [match_degree(obs, r.antecedents[0]) for r in rules]
            # alpha registers hold their value through the conclusion phase
            assert trace[-1].alphas == row.alphas

    def test_capacity_padding(self):
        rng = np.random.default_rng(10)
        for _ in range(30):
            rules = random_ruleset(rng, 8, int(rng.integers(1, 9)))
            obs = random_vector(rng, 8)
            padded = RuleSet(list(rules) + [Rule([random_vector(rng, 8)], V([0] * 8))
                                            for _ in range(16 - len(rules))])
            assert (run_inference(FuzzyChip.from_rules(rules), obs)[0]
                    == run_inference(FuzzyChip.from_rules(padded), obs)[0]
                    == infer(rules, obs))

    def test_scalar_and_lane_models_agree_cycle_by_cycle(self):
        rng = np.random.default_rng(11)
        for _ in range(15):
            e = int(rng.integers(2, 12))
            cap = [2, 4, 16, 64][int(rng.integers(0, 4))]
            rules = random_ruleset(rng, e, cap)
            obs = random_vector(rng, e)
            assert (run_traced(FuzzyChip.from_rules(rules, cap), obs)
                    == run_traced(ScalarChip.from_rules(rules, cap), obs))

    def test_exhaustive_tiny(self):
        # one rule over E=2 with grades {0,7,15}, every observation
        levels = (0, 7, 15)
        for a0, a1, c0, c1 in itertools.product(levels, repeat=4):
            rules = RuleSet([Rule([V([a0, a1])], V([c0, c1]))])
            chip = FuzzyChip.from_rules(rules)
            for o in itertools.product(levels, repeat=2):
                assert run_inference(chip, V(o))[0] == infer(rules, V(o))

    def test_deterministic_traces(self):
        rules = random_ruleset(np.random.default_rng(12), 31, 16)
        obs = random_vector(np.random.default_rng(13), 31)
        assert run_traced(FuzzyChip.from_rules(rules), obs) == \
            run_traced(FuzzyChip.from_rules(rules), obs)

    def test_corrupted_rom_is_detected(self):
        rules = two_rule_set()
        rom = build_rom(rules).flip_bit("conclusion", 12)
        # MSB of rule 0's last consequent grade: 15 becomes 7
        result, _ = run_inference(FuzzyChip(rom), V([4, 15, 6, 0]))
        assert infer(rules, V([4, 15, 6, 0])) == V([8, 8, 8, 8])
        assert result == V([8, 8, 8, 7])


class TestTraceExport:
    def test_format_and_parse(self):
        _, trace = run_traced(FuzzyChip.from_rules(two_rule_set()), V([4, 15, 6, 0]))
        text = format_trace(trace)
        lines = text.splitlines()
        assert lines[0] == ("cycle,phase,input_bit,output_bit,valid,"
                            + ",".join(f"alpha_{i}" for i in range(16)))
        assert len(lines) == 41
        assert lines[1].startswith("1,IDLE,0,0,0,")
        assert parse_trace(text) == trace
