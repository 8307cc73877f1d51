"""Python bindings for the MBQC pattern optimizer.

The compiled extension is built with `cargo build -p mbqc-opt-py
--release`. It is loaded either from inside this package (when the
artifact has been copied next to this file) or straight from the
workspace `target/` directory.
"""

import importlib.util
import pathlib

_EXT_NAMES = ("_mbqcopt.so", "lib_mbqcopt.so", "lib_mbqcopt.dylib", "_mbqcopt.pyd")


def _load():
    try:
        from . import _mbqcopt  # noqa: F401 — copied build artifact

        return _mbqcopt
    except ImportError:
        pass
    root = pathlib.Path(__file__).resolve().parents[2]
    for profile in ("release", "debug"):
        for name in _EXT_NAMES:
            cand = root / "target" / profile / name
            if cand.exists():
                spec = importlib.util.spec_from_file_location("mbqcopt._mbqcopt", cand)
                mod = importlib.util.module_from_spec(spec)
                spec.loader.exec_module(mod)
                return mod
    raise ImportError(
        "mbqcopt extension not found; run `cargo build -p mbqc-opt-py --release`"
    )


_ext = _load()

OpenGraph = _ext.OpenGraph
Flow = _ext.Flow
GFlow = _ext.GFlow
Circuit = _ext.Circuit
Pattern = _ext.Pattern
ExtendedCircuit = _ext.ExtendedCircuit
find_flow = _ext.find_flow
max_delayed_gflow = _ext.max_delayed_gflow
ssf_from_flow = _ext.ssf_from_flow
pattern_from_circuit = _ext.pattern_from_circuit
flow_pattern = _ext.flow_pattern
signal_shift = _ext.signal_shift
pauli_simplify = _ext.pauli_simplify
extended_translation = _ext.extended_translation
compactify = _ext.compactify
optimize = _ext.optimize
circuits_equivalent = _ext.circuits_equivalent

__all__ = [
    "OpenGraph",
    "Flow",
    "GFlow",
    "Circuit",
    "Pattern",
    "ExtendedCircuit",
    "find_flow",
    "max_delayed_gflow",
    "ssf_from_flow",
    "pattern_from_circuit",
    "flow_pattern",
    "signal_shift",
    "pauli_simplify",
    "extended_translation",
    "compactify",
    "optimize",
    "circuits_equivalent",
]
