"""Parameter and FLOP accounting."""

from dataclasses import dataclass
from typing import Sequence

import pandas as pd

from .graph import ModelGraph

FLOP_CONVENTION = (
    "1 MAC = 2 FLOPs; bias adds, activations, pooling and softmax count 1 FLOP per output element"
)


@dataclass(frozen=True)
class CostReport:
    """Per-layer and total cost of one forward pass on a single example."""

    layers: pd.DataFrame
    total_params: int
    total_flops: int
    convention: str = FLOP_CONVENTION

    def to_dict(self) -> dict:
        return {
            "total_params": self.total_params,
            "total_flops": self.total_flops,
            "convention": self.convention,
            "layers": [
                {**row, "output_shape": list(row["output_shape"])}
                for row in self.layers.to_dict(orient="records")
            ],
        }


def count_cost(graph: ModelGraph, input_shape: Sequence[int] | None = None) -> CostReport:
    """Count parameters and FLOPs per layer.

    Conv params are ``prod(kernel) * Cin * Cout + Cout``; conv FLOPs are
    ``2 * prod(kernel) * Cin * Cout * positions + Cout * positions``; Dense is the
    1-D analogue.

    Raises:
        ShapeError: the layers cannot be resolved from ``input_shape``.
    """
    if input_shape is not None and tuple(input_shape) != graph.input_shape:
        description = graph.describe()
        description["input_shape"] = list(input_shape)
        graph = ModelGraph.from_description(description)

    rows = []
    for layer in graph.layers:
        n_params, flops = layer.cost()
        rows.append(
            {
                "index": layer.index,
                "kind": layer.kind,
                "output_shape": layer.output_shape,
                "params": int(n_params),
                "flops": int(flops),
            }
        )
    df = pd.DataFrame(rows, columns=["index", "kind", "output_shape", "params", "flops"])
    return CostReport(
        layers=df,
        total_params=int(df["params"].sum()),
        total_flops=int(df["flops"].sum()),
    )
