"""Smoke test for the Python bindings.

Build the extension first:

    cargo build -p mbqc-opt-py --release

then run:

    python python/smoke_test.py
"""

import sys
import pathlib

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parent))

import mbqcopt as mo


def main():
    # Staged pipeline on a 2-wire circuit.
    c = mo.Circuit.build([1, 2], [("J", 1, 1, 4), ("CZ", 1, 2), ("J", 2, -1, 8)])
    p = mo.pattern_from_circuit(c)
    g = p.space()
    fl = mo.find_flow(g)
    assert fl is not None, "circuit graphs always carry a flow"
    shifted = mo.signal_shift(p, fl)
    ssf = mo.ssf_from_flow(fl, g)
    assert ssf.depth() <= fl.depth()
    ext = mo.extended_translation(shifted, ssf)
    assert ext.j_layers() == ssf.depth()
    compact, trace = mo.compactify(ext, fl, ssf)
    assert len(compact.wires()) == 2, compact.wires()
    assert compact.j_layers() == ssf.depth()
    assert trace.startswith("{")

    # One-shot pipeline with simulator verification.
    compact2, stats = mo.optimize(c, verify=True)
    assert stats["verified"] is True
    assert stats["wires_after"] == 2
    assert compact2.to_json() == compact.to_json()

    # SSF layering is maximally delayed.
    md = mo.max_delayed_gflow(g)
    assert md is not None and md.layers() == ssf.layers()

    # JSON round trip.
    again = mo.Circuit.from_json(compact.to_json())
    assert mo.circuits_equivalent(again, compact)

    print("smoke test passed:", stats)


if __name__ == "__main__":
    main()
