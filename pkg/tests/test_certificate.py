from __future__ import annotations

import copy
import json

import pytest

from happyruns.certificate import (
    FORMAT_VERSION,
    CertificateBuilder,
    WitnessCertificate,
    cover_claim,
    happy_claim,
    residue_claim,
    shift_claim,
    verify_certificate,
)
from happyruns.constructor import Strategy, certify_cover, certify_pair, certify_residue, certify_run
from happyruns.core import Params
from happyruns.symbolic import tn_from_json, tn_pad_ones, tn_pad_run, tn_to_json

P10 = Params(2, 10)
BUILD = Strategy(construct_only=True)


@pytest.fixture(scope="module")
def run_cert():
    return certify_run(3, P10)


@pytest.fixture(scope="module")
def built_pair_cert():
    return certify_pair(4, P10, BUILD)


def tampered(cert, edit):
    obj = copy.deepcopy(cert.to_json())
    edit(obj)
    return WitnessCertificate.from_json(obj)


def first_step(obj, rule, pred=lambda s: True):
    return next(s for s in obj["steps"] if s["rule"] == rule and pred(s))


# -- round trips --------------------------------------------------------------


def test_certificates_round_trip_through_files(run_cert, tmp_path):
    path = tmp_path / "cert.json"
    run_cert.save(str(path))
    loaded = WitnessCertificate.load(str(path))
    assert loaded.to_json() == run_cert.to_json()
    assert verify_certificate(loaded)
    obj = json.loads(path.read_text())
    assert obj["format_version"] == FORMAT_VERSION
    assert set(obj) == {"format_version", "params", "goal", "steps", "leaves"}
    for step in obj["steps"]:
        assert {"id", "rule", "identity", "premises", "claim"} <= set(step)


def test_missing_fields_are_rejected():
    with pytest.raises(ValueError):
        WitnessCertificate.from_json({"params": {"e": 2, "b": 10}})


def test_builder_reuses_steps_for_repeated_claims():
    cb = CertificateBuilder(P10)
    a = cb.happy_leaf(7)
    b = cb.happy_leaf(7)
    assert a == b and cb.leaves == [7] and len(cb.steps) == 1
    with pytest.raises(ValueError):
        cb.add("bogus", happy_claim(10))


def test_claims_are_canonical():
    big = tn_pad_ones(0, 3, 10)
    assert happy_claim(big) == happy_claim(111)
    with pytest.raises(ValueError):
        shift_claim(5, 1, 2)


# -- the verifier accepts what the constructors emit ---------------------------


@pytest.mark.parametrize("p", [Params(2, 10), Params(2, 16), Params(3, 14)])
def test_own_certificates_verify(p):
    for cert in (certify_run(3, p), certify_residue(2, p), certify_residue(3, p, lift=True),
                 certify_pair(5, p), certify_cover(p, members=[1, 13] if p.b == 16 else None)):
        result = verify_certificate(cert, p)
        assert result.ok and result.diagnostics == []


def test_params_mismatch_is_reported(run_cert):
    result = verify_certificate(run_cert, Params(2, 16))
    assert not result and "not" in result.diagnostics[0]


# -- tampering ----------------------------------------------------------------


def test_leaf_replaced_by_four_is_named(run_cert):
    def edit(obj):
        obj["leaves"][0] = 4

    result = verify_certificate(tampered(run_cert, edit))
    assert not result
    assert any("leaf 4 is not happy" in d for d in result.diagnostics)


def test_direct_step_on_unhappy_value_is_rejected():
    cb = CertificateBuilder(P10)
    sid = cb.happy_leaf(4)
    cert = cb.finish({"kind": "residue", "a": 4, "modulus": 9, "n": {"small": 4}})
    result = verify_certificate(cert)
    assert not result
    assert any("leaf 4" in d for d in result.diagnostics)
    assert any(d.startswith(f"step {sid} (direct)") for d in result.diagnostics)


def test_pad_shift_that_fails_to_clear_is_rejected(run_cert):
    def edit(obj):
        step = first_step(obj, "pad-shift", lambda s: "range" in s["claim"])
        l = tn_from_json(step["claim"]["l"])
        # drop the zeros under the outer pad
        _, count = l.segments[-1]
        step["claim"]["l"] = tn_to_json(tn_pad_ones(0, count, 10))

    result = verify_certificate(tampered(run_cert, edit))
    assert not result
    assert any("PadIdentity" in d and "does not clear" in d for d in result.diagnostics)


def test_pad_with_wrong_count_is_rejected(built_pair_cert):
    def edit(obj):
        step = first_step(obj, "pad", lambda s: s["inputs"]["digit"] == 9)
        count = tn_from_json(step["inputs"]["count"])
        step["inputs"]["count"] = tn_to_json(count + 1 if isinstance(count, int) else count)
        step["claim"]["n"] = tn_to_json(
            tn_pad_run(9, tn_from_json(step["inputs"]["shift"]), count + 1, 10))

    result = verify_certificate(tampered(built_pair_cert, edit))
    assert not result
    assert any("PadIdentity" in d for d in result.diagnostics)


def test_carry_with_wrong_offset_is_rejected(built_pair_cert):
    def edit(obj):
        step = first_step(obj, "carry")
        step["inputs"]["x"] += 1

    result = verify_certificate(tampered(built_pair_cert, edit))
    assert not result
    assert any("ScaleIdentity" in d for d in result.diagnostics)


def test_wrong_residue_is_rejected():
    cert = certify_residue(4, P10, BUILD)

    def edit(obj):
        step = first_step(obj, "congruence")
        step["claim"]["a"] = (step["claim"]["a"] + 1) % 9

    result = verify_certificate(tampered(cert, edit))
    assert not result
    assert any("CongruenceIdentity" in d for d in result.diagnostics)


def test_goal_must_be_proven(run_cert):
    def edit(obj):
        obj["goal"]["m"] = 4

    result = verify_certificate(tampered(run_cert, edit))
    assert not result
    assert any(d.startswith("goal:") for d in result.diagnostics)


def test_premises_must_point_backwards(run_cert):
    def edit(obj):
        step = obj["steps"][-1]
        step["premises"] = [len(obj["steps"]) + 5]

    result = verify_certificate(tampered(run_cert, edit))
    assert not result
    assert any("not an earlier verified step" in d for d in result.diagnostics)


@pytest.mark.parametrize("field,value", [("rule", "magic"), ("identity", "ScaleIdentity"), ("id", 99)])
def test_malformed_steps_are_rejected(run_cert, field, value):
    def edit(obj):
        obj["steps"][0][field] = value

    assert not verify_certificate(tampered(run_cert, edit))


def test_unknown_format_version_is_rejected(run_cert):
    def edit(obj):
        obj["format_version"] = 2

    result = verify_certificate(tampered(run_cert, edit))
    assert not result and "format_version" in result.diagnostics[0]


def test_verifier_never_raises_on_garbage(run_cert):
    def edit(obj):
        obj["steps"][1]["claim"] = {"fact": "happy", "n": {"base": 10, "runs": [[0, {"small": 1}]]}}

    result = verify_certificate(tampered(run_cert, edit))
    assert not result


def test_cover_base_premises_must_match():
    cb = CertificateBuilder(P10)
    p0, p1 = cb.happy_leaf(19), cb.happy_leaf(23)
    cb.add("cover-base", cover_claim(19, [0, 5]), [p0, p1])
    cert = cb.finish({"kind": "pair", "x": 5, "l": {"small": 19}})
    result = verify_certificate(cert)
    assert not result
    assert any("not h + 5" in d for d in result.diagnostics)


def test_hand_built_congruence_certificate():
    cb = CertificateBuilder(P10)
    cb.happy_leaf(7)
    cb.add("congruence", residue_claim(7, 81, 7))
    cert = cb.finish({"kind": "residue", "a": 7, "modulus": 81, "n": {"small": 7}})
    assert verify_certificate(cert)
