"""The evaluation harness end to end on a trained toy model.

Trains a small vMF flow on two moons, then produces the full metric
report: BPD on held-out data and on protocol interpolants, FID/KID of
generated and interpolated sets against the training data, and the
latent norm diagnostics.  Identity features are used (2-d data), so the
scores are self-consistent across bases but not comparable to any
Inception-based numbers.

Run:  python demos/05_metric_harness.py
"""

import numpy as np

from pnflows import (FeatureExtractor, MetricReport, TrainConfig, VmfBase,
                     bpd_suite, build_flow_model, fid, interpolation_protocol,
                     kid, norm_diagnostics, train, two_moons)


def main():
    train_set = two_moons(1500, noise=0.05, seed=7)
    test_set = two_moons(500, noise=0.05, seed=8)
    d = train_set.dim

    model = build_flow_model(d, VmfBase(d, np.array([0.0, 0.0, -1.0]), 2.0 * d),
                             levels=1, steps=8, width=64, seed=0)
    model, trace = train(model, train_set.data, TrainConfig(epochs=25, seed=0))
    print(f"trained vMF flow: final NLL {trace[-1].nll:.3f} nats/example\n")

    rng = np.random.default_rng(11)
    generated = model.sample(train_set.n, rng=rng)
    protocol = interpolation_protocol(model, train_set.data, train_set.labels,
                                      k=5, within_class=True, rng=rng)
    print(f"protocol: {protocol.pairs.shape[0]} within-class pairs -> "
          f"{protocol.interpolants.shape[0]} interpolants (endpoints excluded)")

    extract = FeatureExtractor.identity()
    ref = extract(train_set.data)
    bpd_test, bpd_interp = bpd_suite(model, test_set.data, protocol.interpolants)
    fid_gen = fid(ref, extract(generated))
    kid_gen, kid_gen_se = kid(ref, extract(generated))
    fid_int = fid(ref, extract(protocol.interpolants))
    kid_int, kid_int_se = kid(ref, extract(protocol.interpolants))

    print(f"\nBPD test           {bpd_test:8.4f}")
    print(f"BPD interpolants   {bpd_interp:8.4f}")
    print(f"FID generated      {fid_gen:8.4f}   KID {kid_gen:+.5f} ± {kid_gen_se:.5f}")
    print(f"FID interpolants   {fid_int:8.4f}   KID {kid_int:+.5f} ± {kid_int_se:.5f}")

    z, _ = model.forward(test_set.data)
    hist = norm_diagnostics(model.to_manifold(z).point, "unit")
    print(f"\nencoded test points: mean squared 2-norm {hist.mean:.9f} "
          f"(fixed-norm support, reference {hist.ref_mean})")

    report = MetricReport(bpd=bpd_test, fid=fid_gen, kid=kid_gen,
                          kid_stderr=kid_gen_se, n_reference=train_set.n,
                          n_generated=generated.shape[0], seed=11,
                          feature_kind=extract.kind)
    print(f"\nserialized report:\n{report.to_json()}")


if __name__ == "__main__":
    main()
