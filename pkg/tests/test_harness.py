"""Harness: parameter fidelity, testbed bootstrap, determinism, CLI surface."""

from __future__ import annotations

import json

import pytest
import yaml

from qonnect.harness.bookinfo import bookinfo_bundle, bundle_to_yaml, parse_bundle_stream
from qonnect.harness.cli import main
from qonnect.harness.energy import (
    AWS_COEFFICIENTS,
    GCP_COEFFICIENTS,
    EnergyCoefficientInput,
    energy_coefficient,
    table_midpoint,
)
from qonnect.harness.engine import Deployment
from qonnect.harness.scenarios import run_scenario
from qonnect.harness.testbed import TestbedSpec
from qonnect.sim.profiles import PROFILES


def test_energy_coefficients_reproduce_published_values():
    assert energy_coefficient(AWS_COEFFICIENTS) == pytest.approx(0.0024042, abs=1e-7)
    assert energy_coefficient(GCP_COEFFICIENTS) == pytest.approx(0.0027335, abs=1e-7)


def test_energy_coefficient_rejects_invalid_inputs():
    with pytest.raises(ValueError):
        EnergyCoefficientInput(w_idle=5.0, w_max=1.0, pue=1.1)
    with pytest.raises(ValueError):
        EnergyCoefficientInput(w_idle=0.7, w_max=3.0, pue=0.9)


def test_profile_midpoints_follow_table_arithmetic():
    # Cost-efficient energy = rounded midpoint of the two provider values.
    assert table_midpoint(0.0024042, 0.0027335) == PROFILES["cost"].energy == 0.0025689
    # Energy-efficient cost = exact midpoint of min/max instance pricing.
    assert table_midpoint(0.0042, 32.7726) == PROFILES["energy"].pricing == 16.3884
    # Energy-efficient bandwidth = midpoint of 5 and 100 Gbps.
    assert table_midpoint(5.0, 100.0) == PROFILES["energy"].bandwidth == 52.5


def test_default_testbed_is_nine_clusters():
    spec = TestbedSpec.default()
    assert len(spec.clusters) == 9
    assert len({c.ingress_ip for c in spec.clusters}) == 9
    with pytest.raises(ValueError):
        TestbedSpec(clusters=[*spec.clusters, spec.clusters[0]])  # duplicate name
    with pytest.raises(ValueError):
        TestbedSpec(clusters=spec.clusters[:6])  # missing a domain's profiles


def test_testbed_spec_yaml_roundtrip_with_env_override(tmp_path):
    spec_file = tmp_path / "spec.yaml"
    spec_file.write_text(
        yaml.safe_dump(
            {
                "seed": 9,
                "grace_period": 12.5,
                "clusters": [
                    {"name": c.name, "domain": c.domain, "profile": c.profile,
                     "ingress_ip": c.ingress_ip}
                    for c in TestbedSpec.default().clusters
                ],
            }
        ),
        encoding="utf-8",
    )
    spec = TestbedSpec.from_yaml(spec_file, env={"QONNECT_TESTBED_GRACE_PERIOD": "7.5"})
    assert spec.seed == 9
    assert spec.grace_period == 7.5  # environment wins over file


def test_rla_config_yaml_with_env_override(tmp_path):
    from qonnect.rla.config import RlaConfig

    config_file = tmp_path / "rla.yaml"
    config_file.write_text(
        yaml.safe_dump(
            {
                "rla_id": 1,
                "listen_address": "127.0.0.1:7401",
                "peers": {0: "127.0.0.1:7400", 1: "127.0.0.1:7401", 2: "127.0.0.1:7402"},
                "grace_period": 30.0,
                "data_dir": "/tmp/rla-1",
            }
        ),
        encoding="utf-8",
    )
    config = RlaConfig.from_yaml(config_file, env={"QONNECT_RLA_GRACE_PERIOD": "12"})
    assert config.rla_id == 1
    assert config.grace_period == 12.0
    assert config.peer_address(2) == "127.0.0.1:7402"
    assert config.peer_address(None) is None


def test_bundle_yaml_stream_roundtrip():
    bundle = bookinfo_bundle("shopdemo", {"energy": 1.0})
    text = bundle_to_yaml(bundle)
    assert text.count("---") >= 4  # application doc + four components
    parsed = parse_bundle_stream(text)
    assert parsed == bundle
    with pytest.raises(ValueError):
        parse_bundle_stream("components: []\n")


def test_bootstrap_populates_exact_parameter_table():
    dep = Deployment(seed=2)
    dep.boot()
    kb = dep.kb()
    assert len(kb.cluster_config()) == 9

    by_profile: dict[str, list] = {"energy": [], "cost": [], "performance": []}
    for name, cluster in dep.clusters.items():
        cid = dep.cluster_id_of(name)
        for node in kb.nodes_in_domain(cluster.domain):
            if node.cluster_id == cid:
                by_profile[cluster.profile].append(node)
    assert all(len(nodes) == 6 for nodes in by_profile.values())  # 3 domains x 2 workers

    assert {n.energy for n in by_profile["energy"]} == {0.0024042}
    assert {n.energy for n in by_profile["cost"]} == {0.0025689}
    assert {n.energy for n in by_profile["performance"]} == {0.0027335}
    assert {n.pricing for n in by_profile["cost"]} == {0.0042}
    assert {n.pricing for n in by_profile["energy"]} == {16.3884}
    assert {n.pricing for n in by_profile["performance"]} == {32.7726}
    assert {n.bandwidth for n in by_profile["energy"]} == {52.5}
    assert {n.bandwidth for n in by_profile["cost"]} == {5.0}
    assert {n.bandwidth for n in by_profile["performance"]} == {100.0}


def decisions_fingerprint(dep: Deployment, name: str) -> list[tuple]:
    app = dep.kb().live_application(name)
    return [
        (c.name, c.decision.cluster_id, c.decision.node_names, c.decision.decided_at,
         c.decision.deciding_term)
        for c in app.components
    ]


def test_scenarios_one_and_two_are_bit_identical_across_runs():
    fingerprints = []
    for _ in range(2):
        dep = Deployment(seed=123)
        report1 = run_scenario(dep, 1)
        assert report1.verdict == "pass"
        first = decisions_fingerprint(dep, "bookinfo")
        report2 = run_scenario(dep, 2)
        assert report2.verdict == "pass"
        second = decisions_fingerprint(dep, "bookinfo")
        fingerprints.append((first, second))
    assert fingerprints[0] == fingerprints[1]


def test_cli_scenario_and_report_commands(tmp_path):
    out = tmp_path / "out"
    assert main(["scenario", "4", "--seed", "5", "--out", str(out)]) == 0
    verdict = json.loads((out / "verdict.json").read_text(encoding="utf-8"))
    assert verdict["all_passed"] is True
    assert verdict["scenarios"][0]["scenario"] == 4
    assert (out / "events.jsonl").read_text(encoding="utf-8").strip()
    assert (out / "report.txt").read_text(encoding="utf-8").startswith("scenario 4: PASS")
    assert main(["report", "--out", str(out)]) == 0
