"""Acceptance suite: one test per criterion, each printing a pass/fail line.

Run with ``pytest tests/test_acceptance.py -s`` to see the per-criterion
lines as they complete.
"""
import json
import time
from contextlib import contextmanager

from bluehop import scenario_path
from bluehop.baseband import (
    CHANNEL_COUNT,
    HOP_RATE_HZ,
    SLOT_PAIR_US,
    SLOT_US,
    SLOTS_PER_SECOND,
    TICK_HUS,
    TICK_US,
    HopSequence,
    hop_channel,
    tx_duration_us,
)
from bluehop.cli import main as cli_main
from bluehop.metrics import deliveries_from_trace, replay, summarize
from bluehop.scenario import parse_scenario, validate_scenario
from bluehop.simkernel import Engine, run_scenario

from conftest import bfs_distances, geometric_adjacency, geometric_scenario, random_positions

INF = 16


@contextmanager
def criterion(num, name):
    try:
        yield
    except BaseException:
        print(f"[acceptance {num:2d}] {name}: FAIL")
        raise
    print(f"[acceptance {num:2d}] {name}: PASS")


def test_01_figure4_reproduction():
    with criterion(1, "figure-4 relay scenario"):
        started = time.monotonic()
        bare = run_scenario(parse_scenario(scenario_path("figure4_norelay.json")), 7)[0]
        relayed, trace = run_scenario(parse_scenario(scenario_path("figure4.json")), 7)
        elapsed = time.monotonic() - started
        assert summarize(bare)["delivery_ratio"] == 0.0
        report = summarize(relayed)
        assert report["delivery_ratio"] == 1.0
        assert report["hops"]["mean"] == 2 and report["hops"]["max"] == 2
        assert elapsed < 1.0, f"took {elapsed:.2f}s"


def test_02_oracle_equivalence_on_random_graphs():
    with criterion(2, "routing costs equal bfs on 100 random graphs"):
        started = time.monotonic()
        for seed in range(100):
            positions = random_positions(1000 + seed)
            engine = Engine(geometric_scenario(positions, horizon=0.5), seed)
            engine.run()
            adjacency = geometric_adjacency(positions)
            for n in positions:
                dist = bfs_distances(adjacency, n)
                table = engine.runtimes[n].table
                for d in positions:
                    want = min(dist.get(d, INF), INF)
                    got = min(table.cost_to(d), INF)
                    assert got == want, f"seed {seed} node {n} dest {d}: {got} != {want}"
        elapsed = time.monotonic() - started
        assert elapsed < 30.0, f"took {elapsed:.1f}s"


def test_03_withdraw_correctness():
    with criterion(3, "withdraw poisons and re-converges on 50 graphs"):
        for seed in range(50):
            positions = random_positions(2000 + seed, span=35.0)
            withdrawn = sorted(positions)[seed % len(positions)]
            config = geometric_scenario(
                positions,
                horizon=1.5,
                actions=[{"time": 0.25, "node": withdrawn, "action": "withdraw"}],
            )
            engine = Engine(config, seed)
            engine.run()
            adjacency = geometric_adjacency(positions)
            residual = {
                n: {m for m in peers if m != withdrawn}
                for n, peers in adjacency.items()
                if n != withdrawn
            }
            for n in residual:
                table = engine.runtimes[n].table
                dist = bfs_distances(residual, n)
                for d, entry in table.entries.items():
                    assert not (entry.next_hop == withdrawn and entry.cost < INF)
                for d in residual:
                    want = min(dist.get(d, INF), INF)
                    got = min(table.cost_to(d), INF)
                    assert got == want, f"seed {seed} node {n} dest {d}: {got} != {want}"
                assert min(table.cost_to(withdrawn), INF) == INF


def test_04_diamond_failover(tmp_path):
    with criterion(4, "mid-transfer failover uses the alternate shortest route"):
        out = tmp_path / "diamond"
        assert (
            cli_main(
                ["run", scenario_path("diamond_failover.json"), "--seed", "0", "--out", str(out)]
            )
            == 0
        )
        report = json.loads((out / "report.json").read_text())
        assert report["delivery_ratio"] == 1.0
        rows = (out / "deliveries.csv").read_text().splitlines()
        header, row = rows[0].split(","), rows[1].split(",")
        record = dict(zip(header, row))
        assert int(record["retries"]) >= 1
        assert int(record["retries"]) <= 3
        # Residual graph after node 1 dies: 0-2-3, bfs distance 2.
        residual = {0: {2}, 2: {0, 3}, 3: {2}}
        assert int(record["hops"]) == bfs_distances(residual, 0)[3] == 2


def test_05_baseband_constants():
    with criterion(5, "slot, tick, hop-rate and channel constants"):
        assert tx_duration_us(1) == 625 == SLOT_US
        assert tx_duration_us(2) == 1250 == SLOT_PAIR_US
        assert TICK_US == 312.5 and TICK_HUS == 625
        assert SLOTS_PER_SECOND == 1600 and HOP_RATE_HZ == 1600
        seq = HopSequence(seed=42)
        assert all(0 <= hop_channel(seq, i) < CHANNEL_COUNT for i in range(1_000_000))


def _saturated_config(mode, count):
    return validate_scenario(
        {
            "link_mode": mode,
            "horizon": 10.0,
            "protocol": {"t_adv": 5.0, "t_ack": 30.0},
            "nodes": [
                {"id": 0, "x": 0.0, "y": 0.0, "class": 3},
                {"id": 1, "x": 5.0, "y": 0.0, "class": 3},
            ],
            "traffic": [
                {"time": 0.0, "src": 0, "dst": 1, "payload_bytes": 78, "count": count}
            ],
        }
    )


def test_06_throughput_ceilings():
    with criterion(6, "saturated single-hop throughput ceilings"):
        m, _ = run_scenario(_saturated_config("scatternet", 9000), 0)
        rate = m.delivered_bytes * 8 / 10.0
        assert 475_000 <= rate <= 500_000, f"scatternet rate {rate}"
        m, _ = run_scenario(_saturated_config("geometric", 17000), 0)
        rate = m.delivered_bytes * 8 / 10.0
        assert 950_000 <= rate <= 1_000_000, f"geometric rate {rate}"


def test_07_structural_invariants_under_churn():
    with criterion(7, "churn scenario holds every structural invariant"):
        config = parse_scenario(scenario_path("churn25.json"))
        assert len(config.nodes) <= 255
        engine = Engine(config, 7)
        for second in range(1, 61):
            engine.run(until=second * 2_000_000)
            for runtime in engine.runtimes.values():
                table = runtime.table
                assert table.entries[table.owner].cost == 0
                for entry in table.entries.values():
                    assert 0 <= entry.cost <= INF
            assert engine.net is not None
            masters = [p.master for p in engine.net.piconets]
            assert len(masters) == len(set(masters))
            for pico in engine.net.piconets:
                assert len(pico.active_slaves) <= 7
        times = [r["t_us"] for r in engine.trace]
        assert all(a <= b for a, b in zip(times, times[1:])), "causality violated"
        for record in engine.trace:
            if record["kind"] == "scatternet":
                for pico in record["detail"]["piconets"]:
                    assert len(pico["active_slaves"]) <= 7


def _opacity_check(trace):
    sent = {}
    for record in trace:
        if record["kind"] == "msg_send":
            sent[record["detail"]["msg_id"]] = {
                "src": record["node"],
                "dst": record["detail"]["dst"],
                "plaintext": bytes.fromhex(record["detail"]["plaintext"]),
            }
    delivery_ids = [r["detail"]["msg_id"] for r in trace if r["kind"] == "delivery"]
    assert len(delivery_ids) == len(set(delivery_ids)), "duplicate application delivery"
    delivered = 0
    for record in trace:
        if record["kind"] != "delivery":
            continue
        delivered += 1
        msg = sent[record["detail"]["msg_id"]]
        assert bytes.fromhex(record["detail"]["plaintext"]) == msg["plaintext"]
        if not msg["plaintext"]:
            continue
        for other in trace:
            if other["kind"] != "data_rx":
                continue
            if other["node"] in (msg["src"], msg["dst"]):
                continue
            observed = bytes.fromhex(other["detail"]["payload"])
            assert msg["plaintext"] not in observed, "plaintext visible at a relay"
    return delivered


def test_08_payload_opacity_across_the_suite():
    with criterion(8, "relays never observe plaintext; reassembly is exact"):
        delivered = 0
        for name in (
            "figure4.json",
            "line5.json",
            "diamond_failover.json",
            "churn25.json",
        ):
            _, trace = run_scenario(parse_scenario(scenario_path(name)), 7)
            delivered += _opacity_check(trace)
        # A multi-fragment transfer over a relay as well.
        config = validate_scenario(
            {
                "horizon": 1.0,
                "nodes": [
                    {"id": 0, "x": 0.0, "y": 0.0, "class": 3},
                    {"id": 1, "x": 8.0, "y": 0.0, "class": 3},
                    {"id": 2, "x": 16.0, "y": 0.0, "class": 3},
                ],
                "traffic": [{"time": 0.1, "src": 0, "dst": 2, "payload_bytes": 875}],
            }
        )
        _, trace = run_scenario(config, 7)
        delivered += _opacity_check(trace)
        assert delivered >= 10, "suite delivered too few messages to be meaningful"


def test_09_overhead_accounting():
    with criterion(9, "trace replay matches online metrics; discovery raises overhead"):
        cold_cfg = parse_scenario(scenario_path("line5.json"))
        cold_metrics, cold_trace = run_scenario(cold_cfg, 3)
        assert replay(cold_trace) == cold_metrics
        cold = summarize(cold_metrics)

        with open(scenario_path("line5.json"), encoding="utf-8") as fh:
            raw = json.load(fh)
        for entry in raw["traffic"]:
            entry["time"] += 2.0  # same traffic, after the tables are warm
        warm_cfg = validate_scenario(raw)
        warm_metrics, warm_trace = run_scenario(warm_cfg, 3)
        assert replay(warm_trace) == warm_metrics
        warm = summarize(warm_metrics)

        assert cold["delivery_ratio"] == warm["delivery_ratio"] == 1.0
        assert cold["discoveries_triggered"] > warm["discoveries_triggered"] == 0
        assert cold["control_overhead_ratio"] > warm["control_overhead_ratio"]


def test_10_determinism(tmp_path):
    with criterion(10, "same (scenario, seed) is byte-identical"):
        for name, seed in (("figure4.json", 7), ("churn25.json", 3)):
            outputs = []
            for attempt in ("a", "b"):
                out = tmp_path / f"{name}-{attempt}"
                assert (
                    cli_main(
                        ["run", scenario_path(name), "--seed", str(seed), "--out", str(out)]
                    )
                    == 0
                )
                outputs.append(out)
            first, second = outputs
            assert (first / "report.json").read_bytes() == (second / "report.json").read_bytes()
            assert (first / "trace.ndjson").read_bytes() == (second / "trace.ndjson").read_bytes()
            assert (first / "deliveries.csv").read_bytes() == (second / "deliveries.csv").read_bytes()
