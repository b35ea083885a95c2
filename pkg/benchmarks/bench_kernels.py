"""Compare the compiled and pure-Python training kernels.

Times `instance_step` over the instances of a synthetic corpus (one epoch
worth of per-instance updates) and reports instances per second.

    python3 benchmarks/bench_kernels.py [--sentences 2000] [--repeat 3]
"""

import argparse
import time

import numpy as np

from rolerecon import _kernels_py
from rolerecon.corpus import extract_instances, unigram_distribution
from rolerecon.synth import SynthConfig, generate
from rolerecon.trainer import AdaGradState, NegativeSampler, TrainConfig, init_model

try:
    from rolerecon import _kernels
except ImportError:
    _kernels = None


def epoch(module, model, data, negatives, config):
    W, rp = model.encoder.weights.copy(), model.recon
    U, Cs, Cv, b = rp.u.copy(), rp.c_shared.copy(), rp.c_verb.copy(), rp.b.copy()
    state = AdaGradState.like(model.encoder, rp)
    fslot = np.full(W.shape[1], -1, dtype=np.int64)
    lslot = np.full(U.shape[0], -1, dtype=np.int64)
    start = time.perf_counter()
    for item, negs in zip(data, negatives):
        module.instance_step(W, U, Cs, Cv, b, state.w, state.u, state.c_shared, state.c_verb, state.b,
                             item.verb, item.feature_ids, item.feature_ptr, item.lemmas, negs,
                             config.lr, config.eps, config.l2, fslot, lslot)
    return time.perf_counter() - start, W


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sentences", type=int, default=2000)
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()

    config = TrainConfig()
    sentences, _ = generate(SynthConfig(sentences=args.sentences))
    instances = extract_instances(sentences)
    rng = np.random.default_rng(0)
    model = init_model(instances, config, rng)
    data = [model.encode(inst) for inst in instances]
    sampler = NegativeSampler(unigram_distribution(model.lexicon))
    negatives = [sampler.sample(rng, (len(d.lemmas), config.negatives)) for d in data]

    print(f"{len(data)} instances, R={config.roles} d={config.dim} k={config.proj} n={config.negatives}")
    results = {}
    for module in [_kernels_py] + ([_kernels] if _kernels is not None else []):
        times = []
        for _ in range(args.repeat):
            seconds, W = epoch(module, model, data, negatives, config)
            times.append(seconds)
        results[module.BACKEND] = (min(times), W)
        print(f"{module.BACKEND:>8}: {min(times):.3f}s/epoch, {len(data) / min(times):,.0f} instances/s")
    if len(results) == 2:
        (tp, wp), (tc, wc) = results["python"], results["cython"]
        print(f"speedup: {tp / tc:.1f}x; max |W_python - W_cython| after one epoch: {np.abs(wp - wc).max():.2e}")
    else:
        print("compiled extension not built; only the fallback was timed")


if __name__ == "__main__":
    main()
