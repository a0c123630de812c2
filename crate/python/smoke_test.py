"""Smoke test for the tcf Python extension.

Build and run from the repository root:

    cargo build -p tcf-python --release
    cp target/release/libtcf.so python/tcf.so
    python3 python/smoke_test.py
"""

import json
import math
import os
import sys
import tempfile

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import tcf  # noqa: E402


def main():
    assert math.isclose(tcf.pearson([1.0, 2.0, 3.0, 4.0], [1.0, 3.0, 2.0, 4.0]), 0.8, abs_tol=1e-12)
    cosine = [math.cos(2 * math.pi * t / 8) for t in range(1, 65)]
    coefficients, truncated = tcf.sample_acf(cosine, [8, 100])
    assert math.isclose(coefficients[0], 0.875, abs_tol=1e-9) and truncated == 1

    cfg = tcf.EncoderConfig(lambda_=4, windows=2, gamma=3)
    assert cfg.descriptor_len(8) == 8 * 3 + 2 * 6
    rows = [[math.sin(0.3 * t + i) for t in range(20)] for i in range(8)]
    descriptor = tcf.encode_tcf(rows, cfg)
    assert len(descriptor) == cfg.descriptor_len(8)
    assert all(-1.0 - 1e-12 <= v <= 1.0 + 1e-12 for v in descriptor)
    try:
        tcf.encode_tcf(rows, tcf.EncoderConfig(lambda_=3))
    except ValueError as e:
        assert "does not divide" in str(e)
    else:
        raise AssertionError("lambda = 3 must be rejected for n = 8")

    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "m.tsf")
        tcf.write_tsf(rows, path)
        back = tcf.read_tsf(path)
        assert os.path.getsize(path) == 12 + 4 * 8 * 20
        assert max(abs(a - b) for r, s in zip(rows, back) for a, b in zip(r, s)) < 1e-6

        xs = [[0.0, 0.0], [0.5, 0.2], [10.0, 10.0], [9.5, 10.3]]
        model = tcf.LinearOvrModel.train(xs, ["a", "a", "b", "b"])
        assert model.classes == ["a", "b"] and model.predict([9.0, 9.0]) == "b"
        again = tcf.LinearOvrModel.from_json(model.to_json())
        assert again.decision_scores([1.0, 2.0]) == model.decision_scores([1.0, 2.0])

        manifest = tcf.synth_demo(os.path.join(tmp, "corpus"), classes=3, videos=6, seed=3)
        report = json.loads(tcf.run_protocol(str(manifest), tcf.EncoderConfig(lambda_=8, windows=2), repetitions=5))
        assert len(report["per_rep_accuracy"]) == 5
        print(f"synthetic corpus: mean accuracy {100 * report['mean_accuracy']:.1f}% over 5 splits")

    print("python smoke test passed")


if __name__ == "__main__":
    main()
