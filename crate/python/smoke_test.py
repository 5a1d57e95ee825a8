#!/usr/bin/env python3
"""Smoke test for the minexp_py extension module.

Builds nothing itself: run `cargo build -p minexp-py` (or --release)
first, then `python3 python/smoke_test.py`. The script locates the
compiled cdylib, exposes it as an importable module, and exercises the
main types end to end.
"""

import math
import pathlib
import shutil
import sys
import tempfile


def load_module():
    root = pathlib.Path(__file__).resolve().parent.parent
    candidates = [
        root / "target" / profile / name
        for profile in ("release", "debug")
        for name in ("libminexp_py.so", "minexp_py.so", "libminexp_py.dylib")
    ]
    built = next((p for p in candidates if p.exists()), None)
    if built is None:
        sys.exit("extension not found; run `cargo build -p minexp-py` first")
    stage = pathlib.Path(tempfile.mkdtemp(prefix="minexp-py-"))
    shutil.copy(built, stage / "minexp_py.so")
    sys.path.insert(0, str(stage))
    import minexp_py

    return minexp_py


def approx(a, b, tol=1e-8):
    return abs(a - b) <= tol


def main():
    mx = load_module()
    print(f"loaded minexp_py {mx.__version__}")

    # --- classical experiment: points 2 and 3 share likelihood ratios
    third = 1.0 / 3.0
    exp = mx.Experiment(
        3,
        [
            ("s0", [[0.5, 0, 0], [0, 0.25, 0], [0, 0, 0.25]]),
            ("s1", [[third, 0, 0], [0, third, 0], [0, 0, third]]),
        ],
        block_dims=[1, 1, 1],
    )
    minimal = exp.minimal_form()
    assert minimal.dim == 2, f"expected merged dimension 2, got {minimal.dim}"
    blocks = exp.ki_blocks()
    assert sorted((d, m) for d, m, *_ in blocks) == [(1, 1), (1, 2)], blocks
    assert exp.minimal_form().isomorphism_residual(minimal) is not None
    print("classical merge: ok")

    # --- single state: everything collapses to scalars
    single = mx.Experiment(2, [("only", [[0.7, 0.1 + 0.05j], [0.1 - 0.05j, 0.3]])])
    assert single.minimal_form().dim == 1
    witness = single.fixing_channel(starts=6, max_iter=1500)
    assert witness is not None, "a single state always admits a fixing channel"
    print("single-state collapse: ok")

    # --- embeddings keep the minimal form
    padded = single.with_padding(2).minimal_form()
    assert padded.dim == 1
    print("embedding invariance: ok")

    # --- trine POVM: kernel minimal with LP value 0
    def trine_effect(k):
        a = 2.0 * math.pi * k / 3.0
        v = [math.cos(a), math.sin(a)]
        return [[2.0 / 3.0 * v[i] * v[j] for j in range(2)] for i in range(2)]

    trine = mx.Povm(2, [(f"t{k}", trine_effect(k)) for k in range(3)])
    minimal_flag, lp_value = trine.kernel_minimal()
    assert minimal_flag and abs(lp_value) <= 1e-9, (minimal_flag, lp_value)
    print("trine kernel minimality: ok")

    # --- duplicated outcomes merge, and the dilation factors
    dup = mx.Povm(
        2,
        [
            ("a", [[0.5, 0], [0, 0]]),
            ("b", [[0.5, 0], [0, 0]]),
            ("c", [[0, 0], [0, 1]]),
        ],
    )
    merged, mapping = dup.minimize()
    assert [len(e) for e in (merged.effects(),)][0] == 2
    assert mapping == [0, 0, 1], mapping
    assert dup.equivalent_to(merged)
    minimal_flag, lp_value = dup.kernel_minimal()
    assert not minimal_flag and lp_value >= 0.5
    gamma, pinching = merged.dilation()
    # both act on the 2-outcome space: 4x4 action matrices
    assert len(gamma) == 4 and len(pinching) == 4
    print("POVM merge and dilation: ok")

    # --- POVM order: trine and the computational PVM are incomparable
    pvm = mx.Povm(2, [("0", [[1, 0], [0, 0]]), ("1", [[0, 0], [0, 1]])])
    assert trine.postprocessing_from(pvm) is None
    assert pvm.postprocessing_from(trine) is None
    assert merged.postprocessing_from(dup) is not None
    print("POVM order: ok")

    # --- cross-module: the experiment of the duplicated POVM merges too
    as_exp = dup.as_experiment()
    assert as_exp.minimal_form().dim == 2
    print("POVM-experiment bridge: ok")

    print("all smoke tests passed")


if __name__ == "__main__":
    main()
