"""
Debug tracing infrastructure for the enhancement pipeline.

When an Enhancer runs with debug=True it records every pipeline stage:
the STFT analysis, the assembled network inputs, the network output and
the reconstruction. Each stage keeps a small dictionary of summary values
and, optionally, an array snapshot of the stage's main product.

Traces help with shape or scaling bugs between stages, with inspecting
the spectra of one utterance and with tests that target a single stage.

Example:
    >>> enhancer = Enhancer(model, feature_config, stft_config)
    >>> enhanced = enhancer.enhance(noisy, debug=True)
    >>> trace = enhancer.get_trace()
    >>> trace.get_stage("network").snapshot.shape
    >>> trace.dump_to_file("enhance_trace.txt")
"""

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import numpy as np

MAX_VALUE_CHARS = 100


def _clip(value: Any) -> str:
    text = str(value)
    if len(text) <= MAX_VALUE_CHARS:
        return text
    return text[:MAX_VALUE_CHARS] + "..."


@dataclass
class PipelineStage:
    """
    Record of one enhancement stage.

    Network runs record stft, features, network and reconstruct; Log-MMSE
    runs record stft, noise, gain and reconstruct.

    Attributes:
        name: Stage name.
        data: Scalar summaries (frame counts, modes, value ranges).
        snapshot: Copy of the array the stage produced, if any.
    """

    name: str
    data: Dict[str, Any]
    snapshot: Optional[np.ndarray] = None

    def __str__(self) -> str:
        rows = [f"=== Stage: {self.name} ==="]
        rows += [f"  {key}: {_clip(value)}" for key, value in self.data.items()]
        if self.snapshot is not None:
            snap = self.snapshot
            rows.append(
                f"  snapshot: shape={snap.shape} "
                f"min={snap.min():.4g} max={snap.max():.4g}"
            )
        return "\n".join(rows)


@dataclass
class EnhanceTrace:
    """
    Complete trace of one enhancement call.

    Attributes:
        method: "dnn" or "logmmse".
        input_length: Number of noisy input samples.
        stages: Pipeline stages in execution order.
    """

    method: str = "dnn"
    input_length: int = 0
    stages: List[PipelineStage] = field(default_factory=list)

    def add_stage(
        self, name: str, data: Dict[str, Any], snapshot: Optional[np.ndarray] = None
    ) -> None:
        """Record a pipeline stage."""
        self.stages.append(
            PipelineStage(
                name=name,
                data=data,
                snapshot=None if snapshot is None else np.array(snapshot, copy=True),
            )
        )

    def get_stage(self, name: str) -> Optional[PipelineStage]:
        """The first stage with this name, or None."""
        return next((s for s in self.stages if s.name == name), None)

    def stage_names(self) -> List[str]:
        return [stage.name for stage in self.stages]

    def summary(self) -> str:
        """Header line followed by every stage in order."""
        rule = "=" * 60
        header = f"ENHANCE TRACE ({self.method}, {self.input_length} samples)"
        return "\n".join([rule, header, rule, *map(str, self.stages)])

    def dump_to_file(self, filename: Union[str, Path]) -> None:
        """Write the summary to a text file."""
        Path(filename).write_text(self.summary() + "\n", encoding="utf-8")
