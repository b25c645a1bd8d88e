"""Operation-cost model comparing the conventional CNN with the spiking CNN.

Two interpretations of the published cost formulas are provided, because
the formulas print a single Ops factor while the accompanying cost table
assigns different cycle counts per operation type (add 1, conditional
branch 1, multiply 10):

* ``literal``: the formulas exactly as printed, one Ops factor applied to
  the whole bracketed term (default Ops: 10 for the CNN, 1 for the SCNN).
* ``decomposition``: the multiplicative sub-term K_H*K_W costed at the
  multiply rate and the additive sub-term (K_H + K_W - 1) at the add rate;
  an FC multiply-accumulate costs add + multiply. The SCNN side costs each
  accumulated tap at add + branch.

Every emitted report names the mode it used.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

from .network import NetworkSpec

ADD_CYCLES = 1
BRANCH_CYCLES = 1
MUL_CYCLES = 10
CNN_BITS = 32
SCNN_BITS = 1


class DivisionError(ZeroDivisionError):
    pass


@dataclass
class ConvDims:
    m_h: int
    m_w: int
    k_h: int
    k_w: int
    c_in: int
    c_out: int


@dataclass
class FcDims:
    n_in: int
    n_out: int


@dataclass
class ComplexityParams:
    conv_layers: list[ConvDims] = field(default_factory=list)
    fc_layers: list[FcDims] = field(default_factory=list)

    @classmethod
    def from_network(cls, net: NetworkSpec) -> "ComplexityParams":
        """Derive per-layer dimension symbols from a network description.

        1-D layers map to height-1 feature maps and kernels; M_W is the
        layer's output length.
        """
        conv, fc = [], []
        n = net.input_length
        for layer in net.layers:
            if layer.kind == "SpikingConv1d":
                n = layer.out_length(n)
                conv.append(ConvDims(1, n, 1, layer.kernel,
                                     layer.in_channels, layer.out_channels))
            elif layer.kind == "MaxPool1d":
                n = layer.out_length(n)
            elif layer.kind == "SpikingFC":
                fc.append(FcDims(layer.in_features, layer.out_features))
        return cls(conv, fc)


def tc_cnn(params: ComplexityParams, mode: str = "decomposition",
           ops: int = MUL_CYCLES, bit: int = CNN_BITS,
           add_cycles: int = ADD_CYCLES, mul_cycles: int = MUL_CYCLES) -> int:
    """Cycle count of the conventional CNN (32-bit dense dataflow)."""
    if not params.conv_layers and not params.fc_layers:
        warnings.warn("complexity model called with no layers", stacklevel=2)
    total = 0
    for c in params.conv_layers:
        mul_taps = c.k_h * c.k_w
        add_taps = c.k_h + c.k_w - 1
        if mode == "literal":
            per_pos = (mul_taps + add_taps) * ops
        elif mode == "decomposition":
            per_pos = mul_taps * mul_cycles + add_taps * add_cycles
        else:
            raise ValueError(f"unknown mode {mode!r}")
        total += c.m_h * c.m_w * per_pos * c.c_in * c.c_out * bit
    for f in params.fc_layers:
        per_mac = ops if mode == "literal" else (mul_cycles + add_cycles)
        total += f.n_in * f.n_out * per_mac * bit
    return total


def tc_scnn(params: ComplexityParams, t: int, mode: str = "decomposition",
            ops: int = ADD_CYCLES, bit: int = SCNN_BITS,
            add_cycles: int = ADD_CYCLES, branch_cycles: int = BRANCH_CYCLES) -> int:
    """Cycle count of the spiking CNN over ``t`` time steps (1-bit dataflow,
    add and conditional-branch operations only)."""
    if mode == "literal":
        per_tap = ops
    elif mode == "decomposition":
        per_tap = add_cycles + branch_cycles
    else:
        raise ValueError(f"unknown mode {mode!r}")
    if not params.conv_layers and not params.fc_layers:
        warnings.warn("complexity model called with no layers", stacklevel=2)
    total = 0
    for c in params.conv_layers:
        total += c.m_h * c.m_w * (c.k_h + c.k_w - 1) * c.c_in * c.c_out \
            * per_tap * bit * t
    for f in params.fc_layers:
        total += f.n_in * f.n_out * per_tap * bit * t
    return total


def reduction_ratio(cnn_cycles: int, scnn_cycles: int) -> float:
    """Fractional complexity reduction of the SCNN relative to the CNN."""
    if cnn_cycles == 0:
        raise DivisionError("CNN cycle count is zero")
    return 1.0 - scnn_cycles / cnn_cycles


def interpretation_table(params: ComplexityParams,
                         t_values: tuple[int, ...] = tuple(range(1, 41)),
                         ) -> list[dict]:
    """Reduction ratio for every (mode, t) combination, one row per cell."""
    rows = []
    for mode in ("decomposition", "literal"):
        cnn = tc_cnn(params, mode=mode)
        for t in t_values:
            scnn = tc_scnn(params, t, mode=mode)
            rows.append({
                "mode": mode,
                "t": t,
                "cnn_bit": CNN_BITS,
                "scnn_bit": SCNN_BITS,
                "tc_cnn": cnn,
                "tc_scnn": scnn,
                "reduction": reduction_ratio(cnn, scnn),
            })
    return rows
